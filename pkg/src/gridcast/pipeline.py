"""Config-driven stages: preprocess, train, predict, evaluate, heatmap.

Artifacts for one run live in ``<out_dir>/<norm>_<impute>/``::

    hourly_d1.csv hourly_d2.csv     downsampled, hour-encoded splits
    norm_d1.csv norm_d2.csv         normalized model inputs
    scaler.json imputer.json        fitted preprocessing models
    weights.bin history.csv         checkpoint and per-epoch losses
    forecast_day<k>.csv latency.csv per-day predictions and timings
    metrics.csv                     per-day metrics plus the mean row
    heatmap_T.* heatmap_P.*         HTML tables with CSV twins
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, MissingArtifact
from .forecast import ForecastDay, forecast_days
from .frame import FEATURES, TARGET, FeatureSpec, TimeSeriesFrame, encode_time_feature, window_arrays
from .heatmap import HeatmapDay, emit_heatmap
from .io import (
    METRIC_HEADER,
    format_timestamp,
    load_csv,
    load_imputer,
    load_scaler,
    load_weights,
    metric_row,
    parse_timestamp,
    save_imputer,
    save_scaler,
    save_weights,
    write_csv,
    write_forecast,
    write_history,
    write_rows,
)
from .metrics import aggregate, evaluate_day
from .preprocess import (
    ScaleMethod,
    downsample_hourly,
    fit_mean_imputer,
    fit_poly_imputer,
    fit_scaler,
    transform,
)
from .training import TrainConfig, fit

log = logging.getLogger(__name__)

IMPUTERS = {"mean": fit_mean_imputer, "poly": fit_poly_imputer}


class Command(str, enum.Enum):
    PREPROCESS = "preprocess"
    TRAIN = "train"
    PREDICT = "predict"
    EVALUATE = "evaluate"
    HEATMAP = "heatmap"


@dataclass(frozen=True)
class PipelineConfig:
    d1: str
    d2: str
    d3: str
    d3_truth: str | None = None
    norm: str = "standard"
    impute: str = "poly"
    features: tuple[str, ...] = FEATURES
    window: int = 24
    train: TrainConfig = field(default_factory=TrainConfig)
    horizon: int = 24
    out_dir: str = "out"
    seed: int = 0
    group: int = 12
    refresh_with_truth: bool = False

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "out_dir"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a non-empty path")
        try:
            ScaleMethod(self.norm)
        except ValueError:
            raise ConfigError(f"norm must be one of {[m.value for m in ScaleMethod]}") from None
        if self.impute not in IMPUTERS:
            raise ConfigError(f"impute must be one of {sorted(IMPUTERS)}")
        if TARGET not in self.features or "T" not in self.features:
            raise ConfigError("features must include P and T")
        if len(set(self.features)) != len(self.features):
            raise ConfigError("features must be distinct")
        if self.window < 1 or self.horizon < 1 or self.group < 1:
            raise ConfigError("window, horizon and group must be positive")
        object.__setattr__(self, "features", tuple(self.features))

    @property
    def spec(self) -> FeatureSpec:
        return FeatureSpec(self.features, TARGET, self.window)

    @property
    def train_config(self) -> TrainConfig:
        return dataclasses.replace(self.train, rng_seed=self.seed)

    @property
    def run_dir(self) -> Path:
        return Path(self.out_dir) / f"{self.norm}_{self.impute}"

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)


def config_from_dict(doc: dict, base: Path | None = None) -> PipelineConfig:
    """Relative paths are resolved against ``base`` (the config file's folder)."""
    doc = dict(doc)
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    try:
        doc["train"] = TrainConfig(**doc.get("train", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from None
    if base is not None:
        for key in ("d1", "d2", "d3", "d3_truth", "out_dir"):
            if doc.get(key):
                doc[key] = str(base / doc[key])
    try:
        return PipelineConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"config file {path} not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(doc, path.parent)


def config_to_dict(cfg: PipelineConfig) -> dict:
    doc = dataclasses.asdict(cfg)
    doc["features"] = list(cfg.features)
    return doc


# --- helpers ----------------------------------------------------------------


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"{path} missing; run '{stage}' first")
    return path


def _input(path: str | None, what: str) -> TimeSeriesFrame:
    if not path:
        raise ConfigError(f"{what} path not configured")
    if not Path(path).is_file():
        raise MissingArtifact(f"{what} file {path} not found")
    return load_csv(path)


def _hourly(frame: TimeSeriesFrame, group: int) -> TimeSeriesFrame:
    """Downsample unless the file is already hourly."""
    if len(frame) > 1 and int(np.median(np.diff(frame.timestamps))) >= 3600:
        return frame
    return downsample_hourly(frame, group)


def _fill_missing(frame: TimeSeriesFrame, imputer) -> TimeSeriesFrame:
    t = frame["T"]
    updates = {}
    for name, rule in imputer.rules.items():
        if name in frame:
            v = frame[name]
            gap = ~np.isfinite(v)
            if gap.any():
                updates[name] = np.where(gap, rule(t), v)
        else:
            updates[name] = rule(t)
    return frame.with_channels(updates) if updates else frame


def _test_days(cfg: PipelineConfig, with_truth: bool) -> list[ForecastDay]:
    d3 = _hourly(_input(cfg.d3, "d3"), cfg.group)
    if "T" not in d3:
        raise ConfigError("d3 must contain a T column")
    n = len(d3)
    if n == 0 or n % cfg.horizon:
        raise ConfigError(f"d3 has {n} hourly rows, not a whole number of {cfg.horizon}-hour days")
    truth = None
    if with_truth:
        tf = _hourly(_input(cfg.d3_truth, "d3_truth"), cfg.group)
        if TARGET not in tf or not np.array_equal(tf.timestamps, d3.timestamps):
            raise ConfigError("d3_truth must hold P on the same hourly timestamps as d3")
        truth = tf[TARGET]
    days = []
    for k in range(0, n, cfg.horizon):
        sl = slice(k, k + cfg.horizon)
        days.append(ForecastDay(d3.timestamps[sl], d3["T"][sl], None if truth is None else truth[sl]))
    return days


def _read_forecast(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    ts = np.array([parse_timestamp(r[0]) for r in rows], dtype=np.int64)
    return ts, np.array([float(r[1]) for r in rows])


def _forecast_files(run: Path) -> list[Path]:
    files = sorted(run.glob("forecast_day*.csv"), key=lambda p: int(p.stem.removeprefix("forecast_day")))
    if not files:
        raise MissingArtifact(f"no forecasts in {run}; run 'predict' first")
    return files


# --- stages -----------------------------------------------------------------


def preprocess(cfg: PipelineConfig) -> dict:
    run = cfg.run_dir
    run.mkdir(parents=True, exist_ok=True)
    h1 = _hourly(_input(cfg.d1, "d1"), cfg.group)
    h2 = _hourly(_input(cfg.d2, "d2"), cfg.group)
    if "hour" in cfg.features:
        h1, h2 = encode_time_feature(h1), encode_time_feature(h2)
    imputed = [c for c in cfg.features if c not in ("hour", "T", TARGET)]
    imputer = IMPUTERS[cfg.impute](h1, imputed)
    h1, h2 = _fill_missing(h1, imputer), _fill_missing(h2, imputer)
    h1, h2 = h1.select(cfg.features), h2.select(cfg.features)
    scaler = fit_scaler(h1, ScaleMethod(cfg.norm))
    write_csv(run / "hourly_d1.csv", h1)
    write_csv(run / "hourly_d2.csv", h2)
    write_csv(run / "norm_d1.csv", transform(h1, scaler))
    write_csv(run / "norm_d2.csv", transform(h2, scaler))
    save_scaler(run / "scaler.json", scaler)
    save_imputer(run / "imputer.json", imputer)
    log.info("preprocess: %d train and %d validation hourly rows", len(h1), len(h2))
    return {"train_rows": len(h1), "val_rows": len(h2)}


def train(cfg: PipelineConfig) -> dict:
    run = cfg.run_dir
    n1 = load_csv(_need(run / "norm_d1.csv", "preprocess"))
    n2 = load_csv(_need(run / "norm_d2.csv", "preprocess"))
    spec = cfg.spec
    tr = window_arrays(n1, spec, drop_nonfinite=True)
    va = window_arrays(n2, spec, drop_nonfinite=True)
    weights, state = fit(tr, va, cfg.train_config)
    save_weights(run / "weights.bin", weights, cfg.features)
    write_history(run / "history.csv", state.history)
    log.info("train: best epoch %d of %d, val loss %.6g", state.best_epoch, len(state.history), state.best_val)
    return {"epochs": len(state.history), "best_epoch": state.best_epoch, "best_val": state.best_val}


def predict(cfg: PipelineConfig) -> dict:
    run = cfg.run_dir
    weights, header = load_weights(_need(run / "weights.bin", "train"))
    if tuple(header.get("features", ())) != cfg.features:
        raise ConfigError(f"checkpoint features {header.get('features')} differ from config")
    scaler = load_scaler(_need(run / "scaler.json", "preprocess"))
    imputer = load_imputer(_need(run / "imputer.json", "preprocess"))
    history = load_csv(_need(run / "norm_d2.csv", "preprocess"))
    days = _test_days(cfg, with_truth=cfg.refresh_with_truth)
    results = forecast_days(weights, history, days, imputer, scaler, cfg.refresh_with_truth, cfg.spec)
    latency = []
    for k, (day, res) in enumerate(zip(days, results), start=1):
        write_forecast(run / f"forecast_day{k}.csv", day.timestamps, res.predictions)
        latency.append([k, format_timestamp(day.timestamps[0]), res.latency_seconds])
    write_rows(run / "latency.csv", ["day", "start", "latency_s"], latency)
    log.info("predict: %d days, max latency %.4f s", len(results), max(r.latency_seconds for r in results))
    return {"days": len(results), "latency": [r.latency_seconds for r in results]}


def evaluate(cfg: PipelineConfig) -> dict:
    run = cfg.run_dir
    days = _test_days(cfg, with_truth=True)
    files = _forecast_files(run)
    if len(files) != len(days):
        raise ConfigError(f"{len(files)} forecasts for {len(days)} test days")
    latency = {}
    lat_path = run / "latency.csv"
    if lat_path.exists():
        with open(lat_path, newline="", encoding="utf-8") as fh:
            for row in list(csv.reader(fh))[1:]:
                latency[int(row[0])] = float(row[2])
    reports, rows = [], []
    for k, (day, path) in enumerate(zip(days, files), start=1):
        ts, pred = _read_forecast(path)
        if not np.array_equal(ts, day.timestamps):
            raise ConfigError(f"{path.name} timestamps do not match test day {k}")
        rep = evaluate_day(day.truth, pred, latency.get(k, float("nan")))
        reports.append(rep)
        rows.append(metric_row(k, format_timestamp(ts[0])[:10], cfg.norm, rep))
    mean = aggregate(reports)
    rows.append(metric_row("mean", "", cfg.norm, mean))
    write_rows(run / "metrics.csv", METRIC_HEADER, rows)
    log.info("evaluate: mean RMSE %.2f W, accuracy %.2f%%", mean.rmse, mean.accuracy)
    return {"reports": reports, "mean": mean}


def heatmap(cfg: PipelineConfig) -> dict:
    run = cfg.run_dir
    days = _test_days(cfg, with_truth=False)
    files = _forecast_files(run)
    temp = [HeatmapDay(int(d.timestamps[0]), d.temps) for d in days]
    power = []
    for path in files:
        ts, pred = _read_forecast(path)
        power.append(HeatmapDay(int(ts[0]), pred))
    emit_heatmap(temp, "Temperature", run / "heatmap_T")
    emit_heatmap(power, "Power", run / "heatmap_P")
    return {"days": len(days)}


STAGES = {
    Command.PREPROCESS: preprocess,
    Command.TRAIN: train,
    Command.PREDICT: predict,
    Command.EVALUATE: evaluate,
    Command.HEATMAP: heatmap,
}


def run_pipeline(cfg: PipelineConfig, command: Command | str) -> dict:
    try:
        command = Command(command)
    except ValueError:
        raise ConfigError(f"unknown command {command!r}") from None
    return STAGES[command](cfg)


def write_synthetic(out: str | Path, seed: int = 0, level_shift: float = 0.0, **kwargs) -> dict:
    """Write d1/d2/d3/d3_truth CSVs plus a matching ``config.json`` into ``out``."""
    from . import synthetic

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ds = synthetic.generate(seed=seed, level_shift=level_shift, **kwargs)
    for name in ("d1", "d2", "d3", "d3_truth"):
        write_csv(out / f"{name}.csv", getattr(ds, name))
    doc = {
        "d1": "d1.csv",
        "d2": "d2.csv",
        "d3": "d3.csv",
        "d3_truth": "d3_truth.csv",
        "out_dir": "out",
        "seed": seed,
    }
    (out / "config.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return {"power_range": ds.power_range, "config": str(out / "config.json")}


__all__ = [
    "Command",
    "PipelineConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "run_pipeline",
    "write_synthetic",
]
