"""CSV and JSON artifacts with stable names and round-trip-safe numbers."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import DiscreteDomain

FLOAT_FMT = "%.17g"
OUTPUT_ENV = "STRIPWAVE_OUT"
DEFAULT_OUTPUT = "stripwave_out"


class ArtifactError(OSError):
    """An artifact could not be written or read; the message names the path."""


def resolve_output_dir(flag: Optional[str] = None,
                       configured: Optional[str] = None) -> Path:
    """--out flag, then $STRIPWAVE_OUT, then the config value, then the default."""
    for candidate in (flag, os.environ.get(OUTPUT_ENV), configured):
        if candidate:
            return Path(candidate)
    return Path(DEFAULT_OUTPUT)


def jsonable(obj):
    """Plain-JSON version of reports: numpy scalars and arrays, non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(jsonable(obj), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc.strerror}") from None
    return path


def _write_table(path, header: list, data: np.ndarray, fmt) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(header),
                   comments="")
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc.strerror}") from None
    return path


def write_field_csv(path, D: DiscreteDomain, u) -> Path:
    """Columns i, j, s, y, u_1..u_m, one row per active cell."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    m = u.shape[1]
    data = np.column_stack([D.cell_i, D.cell_j, D.cell_s, D.cell_y, u])
    header = ["i", "j", "s", "y"] + [f"u_{k + 1}" for k in range(m)]
    return _write_table(path, header, data, ["%d", "%d"] + [FLOAT_FMT] * (2 + m))


def write_scalar_field_csv(path, D: DiscreteDomain, cells: np.ndarray,
                           values: np.ndarray, name: str = "phi") -> Path:
    data = np.column_stack([D.cell_i[cells], D.cell_j[cells], D.cell_s[cells],
                            D.cell_y[cells], values])
    return _write_table(path, ["i", "j", "s", "y", name], data,
                        ["%d", "%d", FLOAT_FMT, FLOAT_FMT, FLOAT_FMT])


def write_profile_csv(path, s: np.ndarray, u: np.ndarray) -> Path:
    u = np.asarray(u, dtype=float).reshape(len(s), -1)
    header = ["s"] + [f"u_{k + 1}" for k in range(u.shape[1])]
    return _write_table(path, header, np.column_stack([s, u]), FLOAT_FMT)


def write_trace_csv(path, trace) -> Path:
    data = np.column_stack([np.arange(len(trace)), np.asarray(trace, dtype=float)])
    return _write_table(path, ["iteration", "energy"], data, ["%d", FLOAT_FMT])


@dataclass
class FieldTable:
    i: np.ndarray
    j: np.ndarray
    s: np.ndarray
    y: np.ndarray
    u: np.ndarray

    def column_amplitude(self, a) -> tuple[np.ndarray, np.ndarray]:
        """(column centers, max over each column of |u - a|)."""
        d = np.linalg.norm(self.u - np.asarray(a, dtype=float), axis=1)
        cols, inv = np.unique(self.i, return_inverse=True)
        amp = np.full(cols.size, -np.inf)
        np.maximum.at(amp, inv, d)
        s = np.zeros(cols.size)
        s[inv] = self.s
        return s, amp


def read_field_csv(path) -> FieldTable:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ArtifactError(f"malformed field CSV {path}: {exc}") from None
    if header[:4] != ["i", "j", "s", "y"] or len(header) < 5 or data.shape[1] != len(header):
        raise ArtifactError(f"malformed field CSV {path}: header {header}")
    return FieldTable(i=data[:, 0].astype(int), j=data[:, 1].astype(int),
                      s=data[:, 2], y=data[:, 3], u=data[:, 4:])


def emit_artifacts(out_dir, report: dict, report_name: str = "report.json",
                   fields: Optional[dict] = None, config=None,
                   trace=None, timing: Optional[dict] = None) -> list:
    """Write a run's artifacts into ``out_dir`` and return their paths.

    ``fields`` maps file names to callables taking the path. Wall-clock
    timings go to timing.json so the other files are reproducible bit for bit.
    """
    out = Path(out_dir)
    paths = []
    for name, writer in (fields or {}).items():
        paths.append(writer(out / name))
    paths.append(write_json(out / report_name, report))
    if trace is not None:
        paths.append(write_trace_csv(out / "energy_trace.csv", trace))
    if config is not None:
        paths.append(write_json(out / "config_echo.json", config.to_dict()))
    if timing is not None:
        paths.append(write_json(out / "timing.json", timing))
    return paths
