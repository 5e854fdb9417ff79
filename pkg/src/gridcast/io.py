"""File formats: dataset CSVs, scaler/imputer JSON documents, weight containers.

Weight container ``v1`` layout (all integers little-endian)::

    b"GRIDCASTW\\n"                 10-byte magic
    uint32                         byte length of the JSON header
    header                         UTF-8 JSON, sorted keys: architecture
                                   (input_dim, window, gru_hidden, lstm_hidden,
                                   dropout, conventions), features, and the
                                   ordered tensor list [{"name", "shape"}]
    payload                        every tensor as float64 '<f8', row-major,
                                   concatenated in header order
"""

from __future__ import annotations

import csv
import json
import struct
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError
from .frame import FEATURES, TimeSeriesFrame, make_frame
from .metrics import MetricReport
from .network import CONVENTIONS, GruParams, LstmParams, NetworkWeights
from .preprocess import (
    ChannelStats,
    ImputationModel,
    MeanFill,
    PolyFill,
    ScaleMethod,
    ScalerParams,
)

VERSION = "v1"
WEIGHTS_MAGIC = b"GRIDCASTW\n"


# --- timestamps -------------------------------------------------------------


def parse_timestamp(text: str) -> int:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


# --- CSV datasets -----------------------------------------------------------


def load_csv(path: str | Path) -> TimeSeriesFrame:
    """Read ``timestamp,<channel>...``; empty cells become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, 1, "empty file") from None
        names = [h.strip() for h in header[1:]]
        stamps: list[int] = []
        cols: list[list[float]] = [[] for _ in names]
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(line, min(len(row), len(header)) + 1, "wrong number of fields")
            try:
                stamps.append(parse_timestamp(row[0]))
            except ValueError as exc:
                raise ParseError(line, 1, f"bad timestamp {row[0]!r}") from exc
            for k, cell in enumerate(row[1:]):
                cell = cell.strip()
                if not cell:
                    cols[k].append(np.nan)
                    continue
                try:
                    cols[k].append(float(cell))
                except ValueError as exc:
                    raise ParseError(line, k + 2, f"bad number {cell!r}") from exc
    return make_frame(stamps, list(zip(names, cols)))


def write_csv(path: str | Path, frame: TimeSeriesFrame, columns: Sequence[str] | None = None) -> None:
    columns = list(frame.names if columns is None else columns)
    data = frame.matrix(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *columns])
        for ts, row in zip(frame.timestamps, data):
            w.writerow([format_timestamp(ts), *(_fmt(x) for x in row)])


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


def write_forecast(path: str | Path, timestamps, predictions) -> None:
    write_rows(
        path,
        ["timestamp", "predicted_P_watts"],
        ((format_timestamp(t), float(p)) for t, p in zip(timestamps, predictions)),
    )


def write_history(path: str | Path, history) -> None:
    write_rows(
        path,
        ["epoch", "train_loss", "val_loss", "lr"],
        ((h.epoch, h.train_loss, h.val_loss, h.lr) for h in history),
    )


METRIC_HEADER = ["day", "date", "norm", "rmse_w", "mae_w", "mape_pct", "acc_pct", "latency_s"]


def metric_row(day, date: str, norm: str, r: MetricReport) -> list:
    return [day, date, norm, r.rmse, r.mae, r.mape, r.accuracy, r.latency]


# --- JSON models --------------------------------------------------------------


def _dump_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path: str | Path, schema: str) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != schema or doc.get("version") != VERSION:
        raise SchemaError(f"{path}: expected {schema} {VERSION}")
    return doc


def scaler_to_dict(params: ScalerParams) -> dict:
    return {
        "schema": "gridcast/scaler",
        "version": VERSION,
        "method": params.method.value,
        "ddof": params.ddof,
        "conventions": CONVENTIONS,
        "channels": {name: params.describe(name) for name in params.stats},
    }


def scaler_from_dict(doc: dict) -> ScalerParams:
    method = ScaleMethod(doc["method"])
    stats = {}
    for name, d in doc["channels"].items():
        if method is ScaleMethod.MINMAX:
            stats[name] = ChannelStats(float(d["min"]), float(d["max"]) - float(d["min"]))
        else:
            stats[name] = ChannelStats(float(d["mean"]), float(d["std"]))
    return ScalerParams(method, stats)


def save_scaler(path: str | Path, params: ScalerParams) -> None:
    _dump_json(path, scaler_to_dict(params))


def load_scaler(path: str | Path) -> ScalerParams:
    return scaler_from_dict(_load_json(path, "gridcast/scaler"))


def imputer_to_dict(model: ImputationModel) -> dict:
    rules = {}
    for name, rule in model.rules.items():
        if isinstance(rule, MeanFill):
            rules[name] = {"kind": "mean", "mean": rule.mean}
        else:
            rules[name] = {"kind": "poly", "coef": list(rule.coef)}
    return {"schema": "gridcast/imputer", "version": VERSION, "predictor": "T", "rules": rules}


def imputer_from_dict(doc: dict) -> ImputationModel:
    rules = {}
    for name, d in doc["rules"].items():
        if d["kind"] == "mean":
            rules[name] = MeanFill(float(d["mean"]))
        elif d["kind"] == "poly":
            rules[name] = PolyFill(tuple(d["coef"]))
        else:
            raise SchemaError(f"unknown imputation rule {d['kind']!r}")
    return ImputationModel(rules)


def save_imputer(path: str | Path, model: ImputationModel) -> None:
    _dump_json(path, imputer_to_dict(model))


def load_imputer(path: str | Path) -> ImputationModel:
    return imputer_from_dict(_load_json(path, "gridcast/imputer"))


# --- weights ----------------------------------------------------------------


def save_weights(path: str | Path, w: NetworkWeights, features: Sequence[str] = FEATURES) -> None:
    params = w.parameters()
    header = {
        "format": "gridcast-weights",
        "version": VERSION,
        **w.header(),
        "features": list(features),
        "dtype": "<f8",
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for v in params.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_weights(path: str | Path) -> tuple[NetworkWeights, dict]:
    """Returns the weights and the parsed header."""
    data = Path(path).read_bytes()
    if not data.startswith(WEIGHTS_MAGIC):
        raise SchemaError(f"{path}: not a gridcast weight file")
    off = len(WEIGHTS_MAGIC)
    (n,) = struct.unpack_from("<I", data, off)
    off += 4
    header = json.loads(data[off : off + n].decode("utf-8"))
    off += n
    if header.get("version") != VERSION or header.get("format") != "gridcast-weights":
        raise SchemaError(f"{path}: unsupported weight container version")
    if header.get("conventions") != CONVENTIONS:
        raise SchemaError(f"{path}: conventions {header.get('conventions')!r} differ from {CONVENTIONS!r}")
    tensors = {}
    for t in header["tensors"]:
        count = int(np.prod(t["shape"], dtype=np.int64))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(t["shape"])
        tensors[t["name"]] = arr.astype(np.float64)
        off += 8 * count
    if off != len(data):
        raise SchemaError(f"{path}: {len(data) - off} trailing bytes")
    try:
        w = NetworkWeights(
            GruParams(tensors["gru_fwd.W"], tensors["gru_fwd.U"], tensors["gru_fwd.b"]),
            GruParams(tensors["gru_bwd.W"], tensors["gru_bwd.U"], tensors["gru_bwd.b"]),
            LstmParams(tensors["lstm.W"], tensors["lstm.U"], tensors["lstm.b"]),
            tensors["dense_w"],
            float(tensors["dense_b"]),
            dropout=float(header["dropout"]),
            window=int(header["window"]),
        )
    except KeyError as exc:
        raise SchemaError(f"{path}: missing tensor {exc}") from None
    return w, header
