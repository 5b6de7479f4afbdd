"""Files: grid snapshots, waiting-time CSVs, JSON reports and TOML configs.

Snapshot layout: one UTF-8 header line

    GCOERCE1 d=<d> n=<cells per axis> h=<spacing> t=<time>

then the array in row-major order, little-endian float64 for level-set
values and one byte (0/1) per node for indicator sets.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import tomli

SCHEMA_VERSION = 1
MAGIC = "GCOERCE1"


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


# -- snapshots ---------------------------------------------------------------

def _header(d: int, n: int, h: float, t: float) -> bytes:
    return f"{MAGIC} d={d} n={n} h={h!r} t={t!r}\n".encode("utf-8")


def write_snapshot(path, values: np.ndarray, h: float, t: float) -> None:
    """Write level-set values (float) or an indicator (bool) to ``path``."""
    values = np.asarray(values)
    d, n = values.ndim, values.shape[0]
    if any(s != n for s in values.shape):
        raise ValueError("snapshots must have the same length on every axis")
    if values.dtype == bool:
        body = values.astype(np.uint8).tobytes(order="C")
    else:
        body = values.astype("<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_header(d, n, float(h), float(t)))
        fh.write(body)


def read_snapshot(path) -> tuple[np.ndarray, dict]:
    """Inverse of ``write_snapshot``; returns (array, header fields)."""
    with open(path, "rb") as fh:
        line = fh.readline().decode("utf-8").split()
        body = fh.read()
    if not line or line[0] != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    meta = dict(item.split("=", 1) for item in line[1:])
    d, n = int(meta["d"]), int(meta["n"])
    info = {"d": d, "n": n, "h": float(meta["h"]), "t": float(meta["t"])}
    count = n ** d
    if len(body) == count:
        arr = np.frombuffer(body, dtype=np.uint8).astype(bool)
    elif len(body) == 8 * count:
        arr = np.frombuffer(body, dtype="<f8").astype(float)
    else:
        raise ValueError(f"{path}: payload has {len(body)} bytes, expected {count} or {8 * count}")
    return arr.reshape((n,) * d), info


# -- CSV ---------------------------------------------------------------------

def waiting_time_columns(d: int) -> list[str]:
    return ["seed", "t0"] + [f"x0_{i}" for i in range(d)] + [
        "c", "T", "censored", "r_star", "horizon"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def waiting_time_rows(records) -> list[list[str]]:
    rows = []
    for rec in records:
        t0, x0 = rec.source
        rows.append([_fmt(rec.seed), _fmt(t0)] + [_fmt(x) for x in x0] + [
            _fmt(rec.c), _fmt(rec.measured_T), _fmt(bool(rec.censored)),
            _fmt(rec.r_star_measured), _fmt(rec.horizon)])
    return rows


def write_waiting_time_csv(path, records) -> None:
    records = list(records)
    d = len(records[0].source[1]) if records else 2
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(waiting_time_columns(d))
        w.writerows(waiting_time_rows(records))


def read_waiting_time_csv(path) -> list[dict]:
    """Rows as dicts with floats (``seed`` as int, ``censored`` as bool)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rec = {k: float(v) for k, v in row.items()}
            rec["seed"] = int(rec["seed"])
            rec["censored"] = bool(rec["censored"])
            out.append(rec)
    return out


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[_fmt(v) if not isinstance(v, str) else v for v in row] for row in rows])
    return buf.getvalue()


# -- JSON --------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no nan/inf
        return None if not math.isfinite(v) else v
    return obj


def dumps_report(report: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, **report}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


# -- config ------------------------------------------------------------------

def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def loads_config(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from exc
