"""CSV readers and writers for traces, sweep summaries and recorded data.

Floats are written with ``repr`` so every file round-trips bit for bit and
identical runs produce identical bytes.  Readers raise :class:`ParseError`
naming the file, row and column at fault.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .harness import FORCE_PLATE_RATE, TRACE_COLUMNS, Trace

TRACE_HEADER = ("station",) + TRACE_COLUMNS
SUMMARY_HEADER = ("leg", "substrate", "F_hTO", "LL_MS", "LL_TO", "dF_pct")
DF_HEADER = ("leg", "F_hTO", "dF_pct")
FORCE_HEADER = ("t", "F_h", "F_v")
MARKER_HEADER = ("t", "j0x", "j0y", "j1x", "j1y", "j2x", "j2y", "s3x", "s3y")
FAILURE_HEADER = ("leg", "substrate", "seed", "error")


class ParseError(ValueError):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_table(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def _read_rows(path, header):
    """Rows of a CSV with exactly ``header``; yields ``(row_number, cells)``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file, expected header {','.join(header)}")
    got = tuple(c.strip() for c in rows[0])
    if got != tuple(header):
        missing = [c for c in header if c not in got]
        extra = [c for c in got if c not in header]
        detail = []
        if missing:
            detail.append(f"missing column(s) {', '.join(missing)}")
        if extra:
            detail.append(f"unexpected column(s) {', '.join(extra)}")
        if not detail:
            detail.append("columns out of order")
        raise ParseError(f"{path}: header {','.join(got)!r}: {'; '.join(detail)}")
    out = []
    for n, cells in enumerate(rows[1:], start=2):
        if len(cells) != len(header):
            raise ParseError(f"{path}: row {n}: expected {len(header)} fields, got {len(cells)} (truncated?)")
        out.append((n, cells))
    return out


def _float(path, n, column, cell):
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"{path}: row {n}, column {column}: not a number: {cell!r}") from None


def _numeric_table(path, header):
    rows = _read_rows(path, header)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    data = np.empty((len(rows), len(header)))
    for i, (n, cells) in enumerate(rows):
        for j, (col, cell) in enumerate(zip(header, cells)):
            data[i, j] = _float(path, n, col, cell)
    return rows, data


def _check_time(path, rows, t):
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        n = rows[bad[0] + 1][0]
        raise ParseError(f"{path}: row {n}, column t: time not increasing")


# -- traces ---------------------------------------------------------------

def write_trace(path, trace: Trace) -> Path:
    """Trace CSV plus a ``.json`` metadata sidecar; returns the sidecar path."""
    path = Path(path)
    rows = (
        [i] + [getattr(trace, c)[i] for c in TRACE_COLUMNS]
        for i in range(len(trace))
    )
    write_table(path, TRACE_HEADER, rows)
    meta = path.with_suffix(".json")
    meta.write_text(json.dumps(trace.metadata, indent=2, sort_keys=True) + "\n")
    return meta


def read_trace(path) -> Trace:
    """Trace CSV back into a :class:`Trace` (``j3_x`` and markers are not stored)."""
    path = Path(path)
    rows = _read_rows(path, TRACE_HEADER)
    cols = {c: [] for c in TRACE_COLUMNS}
    for k, (n, cells) in enumerate(rows):
        if cells[0] != str(k):
            raise ParseError(f"{path}: row {n}, column station: expected {k}, got {cells[0]!r}")
        for col, cell in zip(TRACE_COLUMNS, cells[1:]):
            if col == "sliding":
                if cell not in ("0", "1"):
                    raise ParseError(f"{path}: row {n}, column sliding: expected 0 or 1, got {cell!r}")
                cols[col].append(cell == "1")
            else:
                cols[col].append(_float(path, n, col, cell))
    meta_path = path.with_suffix(".json")
    metadata = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    arrays = {c: np.array(v, dtype=bool if c == "sliding" else float) for c, v in cols.items()}
    return Trace(j3_x=np.full(len(rows), np.nan), metadata=metadata, **arrays)


# -- sweep outputs ----------------------------------------------------------

def write_summary(path, rows) -> None:
    """``rows``: iterables of (leg, substrate, F_hTO, LL_MS, LL_TO, dF_pct); None leaves a cell blank."""
    write_table(path, SUMMARY_HEADER, rows)


def read_summary(path) -> list:
    path = Path(path)
    out = []
    for n, cells in _read_rows(path, SUMMARY_HEADER):
        vals = [None if c == "" else _float(path, n, col, c) for col, c in zip(SUMMARY_HEADER[2:], cells[2:])]
        out.append(tuple(cells[:2]) + tuple(vals))
    return out


def write_df_table(path, peaks: dict, dF: dict) -> None:
    write_table(path, DF_HEADER, ([leg, peaks[leg], dF[leg]] for leg in dF))


def read_df_table(path) -> dict:
    path = Path(path)
    return {
        cells[0]: (_float(path, n, "F_hTO", cells[1]), _float(path, n, "dF_pct", cells[2]))
        for n, cells in _read_rows(path, DF_HEADER)
    }


def write_failures(path, failures) -> None:
    write_table(path, FAILURE_HEADER, ([leg, sub, seed, msg] for leg, sub, seed, msg in failures))


# -- recorded data ----------------------------------------------------------

def write_forces(path, t, F_h, F_v) -> None:
    write_table(path, FORCE_HEADER, zip(t, F_h, F_v))


def write_markers(path, t, markers) -> None:
    m = np.asarray(markers, float).reshape(len(t), 8)
    write_table(path, MARKER_HEADER, ([ti] + list(row) for ti, row in zip(t, m)))


def read_forces(path):
    """``(t, F_h, F_v)`` arrays from a force-plate CSV."""
    rows, data = _numeric_table(path, FORCE_HEADER)
    _check_time(path, rows, data[:, 0])
    return data[:, 0], data[:, 1], data[:, 2]


def read_markers(path):
    """``(t, markers)`` with markers shaped ``(n, 4, 2)``: j0, j1, j2, s3."""
    rows, data = _numeric_table(path, MARKER_HEADER)
    _check_time(path, rows, data[:, 0])
    return data[:, 0], data[:, 1:].reshape(len(data), 4, 2)


def export_recordings(trace: Trace, force_path, marker_path, rate: float = FORCE_PLATE_RATE) -> None:
    """Write a simulated trace as if it had been recorded, one station per sample."""
    if trace.markers is None:
        raise ValueError("trace carries no marker positions")
    t = np.arange(len(trace)) / rate
    write_forces(force_path, t, trace.F_h, trace.F_v)
    write_markers(marker_path, t, trace.markers)
