import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from gridcast import cli
from gridcast.errors import NonMonotonicTimestamps, ParseError, SchemaError
from gridcast.frame import make_frame
from gridcast.io import (
    format_timestamp,
    load_csv,
    load_imputer,
    load_scaler,
    load_weights,
    parse_timestamp,
    save_imputer,
    save_scaler,
    save_weights,
    write_csv,
    write_forecast,
)
from gridcast.metrics import evaluate_day
from gridcast.network import CONVENTIONS, init_weights, zero_weights
from gridcast.pipeline import Command, load_config, run_pipeline, write_synthetic
from gridcast.preprocess import ImputationModel, MeanFill, PolyFill, ScaleMethod, fit_scaler

T0 = 1736121600
SMALL_TRAIN = {"gru_hidden": 6, "lstm_hidden": 4, "max_epochs": 2, "batch_size": 32}


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_two_rows(tmp_path):
    f = load_csv(write(tmp_path / "a.csv", "timestamp,T\n2025-01-06T00:00:00Z,12.0\n2025-01-06T01:00:00Z,13.5\n"))
    assert len(f) == 2 and f.names == ("T",)
    assert f.timestamps.tolist() == [T0, T0 + 3600] and f["T"].tolist() == [12.0, 13.5]


def test_parse_error_position(tmp_path):
    rows = ["timestamp,P,T"] + [f"2025-01-06T0{k}:00:00Z,{k}.0,1.0" for k in range(5)]
    rows.append("2025-01-06T05:00:00Z,1.0,abc")  # line 7, column 3
    with pytest.raises(ParseError) as err:
        load_csv(write(tmp_path / "b.csv", "\n".join(rows) + "\n"))
    assert (err.value.line, err.value.column) == (7, 3)
    with pytest.raises(ParseError) as err:
        load_csv(write(tmp_path / "c.csv", "timestamp,T\nyesterday,1.0\n"))
    assert (err.value.line, err.value.column) == (2, 1)


def test_full_day_and_missing_cells(tmp_path):
    ts = T0 + 300 * np.arange(288)
    lines = ["timestamp,P,V,I,PPV,T"]
    for k, t in enumerate(ts):
        v = "" if k == 5 else "230.0"
        lines.append(f"{format_timestamp(t)},{1000 + k},{v},4.0,0.0,{10 + k / 100}")
    f = load_csv(write(tmp_path / "day.csv", "\n".join(lines) + "\n"))
    assert len(f) == 288 and f.names == ("P", "V", "I", "PPV", "T")
    assert np.isnan(f["V"][5]) and np.isfinite(f["V"]).sum() == 287


def test_non_monotonic(tmp_path):
    with pytest.raises(NonMonotonicTimestamps):
        load_csv(write(tmp_path / "d.csv", "timestamp,T\n2025-01-06T01:00:00Z,1\n2025-01-06T00:00:00Z,2\n"))


def test_timestamp_forms():
    assert parse_timestamp("2025-01-06T00:00:00Z") == T0
    assert parse_timestamp("2025-01-06T02:00:00+02:00") == T0
    assert parse_timestamp("2025-01-06 00:00:00") == T0
    assert format_timestamp(T0) == "2025-01-06T00:00:00Z"


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.normal(size=50) * 1e3
    vals[7] = np.nan
    f = make_frame(T0 + 3600 * np.arange(50), {"P": vals, "T": rng.normal(size=50)})
    write_csv(tmp_path / "f.csv", f)
    g = load_csv(tmp_path / "f.csv")
    assert g.names == f.names
    np.testing.assert_array_equal(g["P"], f["P"])
    np.testing.assert_array_equal(g["T"], f["T"])
    assert b"\r" not in (tmp_path / "f.csv").read_bytes()


@pytest.mark.parametrize("method", list(ScaleMethod))
def test_scaler_json_round_trip(tmp_path, method):
    rng = np.random.default_rng(1)
    f = make_frame(np.arange(100), {"P": rng.normal(2000, 500, 100), "T": rng.normal(15, 4, 100)})
    params = fit_scaler(f, method)
    save_scaler(tmp_path / "s.json", params)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["version"] == "v1" and doc["conventions"] == CONVENTIONS and doc["method"] == method.value
    assert doc["ddof"] == {"standard": 0, "zscore": 1, "minmax": None}[method.value]
    back = load_scaler(tmp_path / "s.json")
    x = rng.normal(2000, 900, 30)
    np.testing.assert_allclose(back.scale_values("P", x), params.scale_values("P", x), rtol=1e-14, atol=1e-14)


def test_imputer_json_round_trip(tmp_path):
    model = ImputationModel({"V": MeanFill(231.25), "I": PolyFill((0.1, 0.2, -0.3, 1e-4)), "PPV": MeanFill(3.0)})
    save_imputer(tmp_path / "i.json", model)
    assert load_imputer(tmp_path / "i.json") == model
    doc = json.loads((tmp_path / "i.json").read_text())
    doc["version"] = "v0"
    (tmp_path / "i.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_imputer(tmp_path / "i.json")


def test_weights_round_trip(tmp_path):
    w = init_weights(6, window=24, gru_hidden=5, lstm_hidden=3, dropout=0.1, seed=4)
    save_weights(tmp_path / "w.bin", w)
    back, header = load_weights(tmp_path / "w.bin")
    assert header["gru_hidden"] == 5 and header["lstm_hidden"] == 3 and header["conventions"] == CONVENTIONS
    for k, v in w.parameters().items():
        assert v.tobytes() == back.parameters()[k].tobytes()
    assert back.dropout == 0.1 and back.window == 24
    save_weights(tmp_path / "w2.bin", back)
    assert (tmp_path / "w.bin").read_bytes() == (tmp_path / "w2.bin").read_bytes()


def test_weights_corruption(tmp_path):
    save_weights(tmp_path / "w.bin", zero_weights(3, 5, 2, 2))
    data = (tmp_path / "w.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"X" + data[1:])
    with pytest.raises(SchemaError):
        load_weights(tmp_path / "bad.bin")
    (tmp_path / "long.bin").write_bytes(data + b"\0" * 8)
    with pytest.raises(SchemaError):
        load_weights(tmp_path / "long.bin")


# --- pipeline and CLI ---------------------------------------------------------


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    write_synthetic(root, seed=0, train_days=20)
    doc = json.loads((root / "config.json").read_text())
    doc["train"] = SMALL_TRAIN
    (root / "config.json").write_text(json.dumps(doc))
    return root


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "gridcast", *args], capture_output=True, text=True)


def test_preprocess_outputs(dataset):
    cfg = load_config(dataset / "config.json")
    run_pipeline(cfg, Command.PREPROCESS)
    run = cfg.run_dir
    raw = load_csv(dataset / "d1.csv")
    hourly = load_csv(run / "hourly_d1.csv")
    assert len(hourly) == len(raw) // 12
    assert hourly.names == ("hour", "P", "V", "I", "PPV", "T")
    doc = json.loads((run / "scaler.json").read_text())
    assert set(doc["channels"]) == {"hour", "P", "V", "I", "PPV", "T"}
    assert all(set(v) == {"mean", "std"} for v in doc["channels"].values())
    first = {p.name: p.read_bytes() for p in run.iterdir()}
    run_pipeline(cfg, Command.PREPROCESS)
    assert first == {p.name: p.read_bytes() for p in run.iterdir()}


def test_zero_checkpoint_predicts_constant(dataset, tmp_path):
    cfg = load_config(dataset / "config.json").replace(out_dir=str(tmp_path))
    run_pipeline(cfg, Command.PREPROCESS)
    save_weights(cfg.run_dir / "weights.bin", zero_weights(6, 24, 4, 3, dense_b=0.5))
    run_pipeline(cfg, Command.PREDICT)
    scaler = load_scaler(cfg.run_dir / "scaler.json")
    expected = scaler.stats["P"].loc + 0.5 * scaler.stats["P"].scale
    for k in range(1, 6):
        with open(cfg.run_dir / f"forecast_day{k}.csv") as fh:
            vals = [float(r["predicted_P_watts"]) for r in csv.DictReader(fh)]
        assert len(vals) == 24 and all(v == expected for v in vals)


def test_evaluate_matches_metric_oracle(dataset, tmp_path):
    cfg = load_config(dataset / "config.json").replace(out_dir=str(tmp_path))
    truth = load_csv(dataset / "d3_truth.csv")
    rng = np.random.default_rng(2)
    cfg.run_dir.mkdir(parents=True)
    preds = []
    for k in range(5):
        sl = slice(24 * k, 24 * k + 24)
        p = truth["P"][sl] + rng.normal(0, 150, 24)
        preds.append(p)
        write_forecast(cfg.run_dir / f"forecast_day{k + 1}.csv", truth.timestamps[sl], p)
    run_pipeline(cfg, Command.EVALUATE)
    with open(cfg.run_dir / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["day"] for r in rows] == ["1", "2", "3", "4", "5", "mean"]
    y = truth["P"].reshape(5, 24)
    for k in range(5):
        e = y[k] - preds[k]
        assert float(rows[k]["rmse_w"]) == pytest.approx(np.sqrt(np.mean(e**2)), rel=1e-12)
        assert float(rows[k]["mae_w"]) == pytest.approx(np.mean(np.abs(e)), rel=1e-12)
        assert float(rows[k]["acc_pct"]) == pytest.approx(100 * (1 - np.mean(np.abs(e)) / np.ptp(y[k])), rel=1e-12)
        assert float(rows[k]["mape_pct"]) == pytest.approx(evaluate_day(y[k], preds[k], 0).mape, rel=1e-12)
    assert float(rows[5]["rmse_w"]) == pytest.approx(np.mean([float(r["rmse_w"]) for r in rows[:5]]), rel=1e-12)


def test_cli_full_run_and_determinism(dataset, tmp_path):
    outs = []
    for name in ("a", "b"):
        r = run_cli("all", "--config", str(dataset / "config.json"), "--out", str(tmp_path / name), "--seed", "3")
        assert r.returncode == 0, r.stderr
        outs.append(tmp_path / name / "standard_poly")
    a, b = outs
    assert (a / "weights.bin").read_bytes() == (b / "weights.bin").read_bytes()
    for k in range(1, 6):
        assert (a / f"forecast_day{k}.csv").read_bytes() == (b / f"forecast_day{k}.csv").read_bytes()
    for name in ("history.csv", "heatmap_T.html", "heatmap_P.csv", "scaler.json", "imputer.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "heatmap_T.csv").read_text().count("\n") == 25


def test_cli_overrides(dataset, tmp_path):
    r = run_cli("preprocess", "--config", str(dataset / "config.json"), "--out", str(tmp_path), "--norm", "minmax", "--impute", "mean")
    assert r.returncode == 0, r.stderr
    doc = json.loads((tmp_path / "minmax_mean" / "scaler.json").read_text())
    assert doc["method"] == "minmax"
    rules = json.loads((tmp_path / "minmax_mean" / "imputer.json").read_text())["rules"]
    assert {v["kind"] for v in rules.values()} == {"mean"}


def test_cli_errors(dataset, tmp_path, capsys):
    code = cli.main(["train", "--config", str(dataset / "config.json"), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code != 0 and "MissingArtifact" in err and err.count("\n") == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"d1": "x", "d2": "y", "d3": "z", "norm": "robust"}))
    code = cli.main(["preprocess", "--config", str(bad)])
    err = capsys.readouterr().err
    assert code != 0 and "ConfigError" in err and err.count("\n") == 1
    assert cli.main(["predict", "--config", str(tmp_path / "nope.json")]) != 0
    with pytest.raises(SystemExit):
        cli.main(["preprocess", "--config", str(bad), "--norm", "robust"])
