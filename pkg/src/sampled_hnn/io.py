"""Model JSON and results CSV formats.

Floats are written with 17 significant digits so values around 1e-11 survive
a round trip; model JSON relies on ``repr`` floats and is bit-exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import SchemaError
from .network import HiddenLayer, SampledNetwork

MODEL_SCHEMA_VERSION = 1
CSV_SCHEMA_VERSION = 1


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def model_to_dict(net: SampledNetwork) -> dict:
    meta = {k: v for k, v in net.meta.items() if not isinstance(v, np.ndarray)}
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "activation": net.activation,
        "d": net.d,
        "layers": [{"W": layer.W.tolist(), "b": layer.b.tolist()} for layer in net.layers],
        "readout": {"W": net.readout_W.tolist(), "b": net.readout_b},
        "meta": _plain(meta),
    }


def _require(obj, key, path):
    if not isinstance(obj, dict) or key not in obj:
        where = f"{path}.{key}" if path else key
        raise SchemaError(f"model file is missing required key {where!r}", where)
    return obj[key]


def model_from_dict(obj: dict) -> SampledNetwork:
    version = _require(obj, "schema_version", "")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema_version {version!r}", "schema_version")
    activation = _require(obj, "activation", "")
    d = _require(obj, "d", "")
    raw_layers = _require(obj, "layers", "")
    readout = _require(obj, "readout", "")
    layers = []
    for i, layer in enumerate(raw_layers):
        layers.append(HiddenLayer(np.array(_require(layer, "W", f"layers[{i}]"), dtype=np.float64),
                                  np.array(_require(layer, "b", f"layers[{i}]"), dtype=np.float64)))
    if not layers:
        raise SchemaError("model file has no hidden layers", "layers")
    if layers[0].n_in != 2 * d:
        raise SchemaError(f"first layer takes {layers[0].n_in} inputs but d = {d}", "d")
    return SampledNetwork(
        tuple(layers),
        np.array(_require(readout, "W", "readout"), dtype=np.float64),
        float(_require(readout, "b", "readout")),
        activation,
        dict(obj.get("meta", {})),
    )


def save_model(net: SampledNetwork, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(net)))


def load_model(path) -> SampledNetwork:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(obj)


def fmt_float(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.16e}"


def _parse_optional(text, kind):
    if text == "" or text is None:
        return None
    if kind is bool:
        return text.lower() in ("1", "true", "yes")
    return kind(text)


@dataclass(frozen=True)
class ExperimentRecord:
    system: str
    sampler: str
    width: int
    seed: int
    rel_l2: float
    train_time_s: float
    residual: float
    timestamp: str
    f: Optional[float] = None
    h: Optional[float] = None
    corrected: Optional[bool] = None

    def __post_init__(self):
        if not self.rel_l2 >= 0:
            raise ValueError("rel_l2 must be nonnegative")
        if not self.train_time_s > 0:
            raise ValueError("train_time_s must be positive")

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")


RECORD_COLUMNS = ["schema_version"] + [f.name for f in fields(ExperimentRecord)]
_RECORD_TYPES = {"system": str, "sampler": str, "width": int, "seed": int, "rel_l2": float,
                 "train_time_s": float, "residual": float, "timestamp": str, "f": float, "h": float,
                 "corrected": bool}


def record_to_row(rec: ExperimentRecord) -> dict:
    row = {"schema_version": CSV_SCHEMA_VERSION}
    for key, value in asdict(rec).items():
        kind = _RECORD_TYPES[key]
        if value is None:
            row[key] = ""
        elif kind is float:
            row[key] = fmt_float(value)
        elif kind is bool:
            row[key] = "true" if value else "false"
        else:
            row[key] = str(value)
    return row


def row_to_record(row: dict) -> ExperimentRecord:
    version = int(row.get("schema_version") or -1)
    if version != CSV_SCHEMA_VERSION:
        raise SchemaError(f"unsupported records schema_version {row.get('schema_version')!r}", "schema_version")
    kwargs = {}
    for key, kind in _RECORD_TYPES.items():
        if key not in row:
            raise SchemaError(f"records row is missing column {key!r}", key)
        kwargs[key] = _parse_optional(row[key], kind)
    return ExperimentRecord(**kwargs)


def _append_rows(path, columns, rows: Iterable[dict]) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)


def append_records(path, records: Iterable[ExperimentRecord]) -> None:
    _append_rows(path, RECORD_COLUMNS, (record_to_row(r) for r in records))


def read_records(path) -> list[ExperimentRecord]:
    with Path(path).open(newline="") as fh:
        return [row_to_record(row) for row in csv.DictReader(fh)]


STATS_COLUMNS = ["schema_version", "system", "sampler", "width", "f", "n_seeds", "seeds",
                 "mean", "min", "max", "mean_train_time_s"]


def stats_row(system: str, sampler: str, width: int, f, stats) -> dict:
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "system": system,
        "sampler": sampler,
        "width": width,
        "f": fmt_float(f),
        "n_seeds": len(stats.seeds),
        "seeds": ";".join(str(s) for s in stats.seeds),
        "mean": fmt_float(stats.mean),
        "min": fmt_float(stats.min),
        "max": fmt_float(stats.max),
        "mean_train_time_s": fmt_float(stats.mean_time),
    }


def write_stats(path, rows: Iterable[dict], append: bool = False) -> None:
    path = Path(path)
    if not append and path.exists():
        path.unlink()
    _append_rows(path, STATS_COLUMNS, rows)


def write_trajectory(path, times, states, energies) -> None:
    states = np.asarray(states)
    d = states.shape[1] // 2
    header = ["t"] + [f"q{i + 1}" for i in range(d)] + [f"p{i + 1}" for i in range(d)] + ["H"]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, x, e in zip(times, states, energies):
            writer.writerow([fmt_float(t)] + [fmt_float(v) for v in x] + [fmt_float(e)])
