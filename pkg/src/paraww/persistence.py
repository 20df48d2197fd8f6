"""Persistence: diagnostics CSV, binary snapshots and plot-data columns."""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .diagnostics import DiagnosticsRecord
from .dynamics import WaveState
from .errors import ParawwError
from .grid import GridSpec

__all__ = [
    "SnapshotError",
    "SNAPSHOT_VERSION",
    "CsvWriter",
    "write_diagnostics",
    "read_diagnostics",
    "write_snapshot",
    "read_snapshot",
    "emit_plot_data",
]

MAGIC = b"WWSN"
SNAPSHOT_VERSION = 1
_FIELDS = ("eta", "V", "B", "Vb", "omega")


class SnapshotError(ParawwError, ValueError):
    """Unreadable, truncated or incompatible snapshot."""


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    # repr is the shortest decimal string that round-trips
    return repr(float(x))


class CsvWriter:
    """Incremental writer: header on open, one row per record, flushed each row
    so an aborted run leaves a complete file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh: TextIO = open(self.path, "w", newline="\n")
        self._fh.write(",".join(DiagnosticsRecord.columns()) + "\n")
        self._fh.flush()

    def write(self, rec: DiagnosticsRecord) -> None:
        self._fh.write(",".join(_fmt(v) for v in rec.values()) + "\n")
        self._fh.flush()

    def comment(self, text: str) -> None:
        for line in text.splitlines() or [""]:
            self._fh.write(f"# {line}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CsvWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_diagnostics(path: str | Path, records: Iterable[DiagnosticsRecord],
                      abort_reason: str | None = None) -> None:
    """Whole-table writer; ``abort_reason`` becomes a terminal comment row."""
    with CsvWriter(path) as w:
        for r in records:
            w.write(r)
        if abort_reason:
            w.comment(f"abort: {abort_reason}")


def read_diagnostics(path: str | Path) -> tuple[list[DiagnosticsRecord], list[str]]:
    """Records and comment lines (without the leading ``# ``)."""
    cols = DiagnosticsRecord.columns()
    records, comments = [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != cols:
            raise ValueError(f"{path}: unexpected header {header}")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif line:
                vals = [float(v) for v in line.split(",")]
                records.append(DiagnosticsRecord(*vals))
    return records, comments


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(path: str | Path, state: WaveState) -> None:
    """``WWSN`` + u32 version + u32 header length + JSON header + arrays.

    All integers and arrays are little-endian; arrays are float64 in C order
    in the order of the header manifest.
    """
    g = state.grid
    arrays = state.fields()
    header = {
        "version": SNAPSHOT_VERSION,
        "grid": {"d": g.d, "N": g.N, "L": g.L, "Nz": g.Nz,
                 "dealias_fraction": g.dealias_fraction},
        "t": state.t,
        "delta": state.delta,
        "fields": [{"name": k, "dtype": "<f8", "shape": list(arrays[k].shape)}
                   for k in _FIELDS],
    }
    text = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, len(text)))
        fh.write(text)
        for k in _FIELDS:
            fh.write(np.ascontiguousarray(arrays[k], dtype="<f8").tobytes())


def read_snapshot(path: str | Path) -> WaveState:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot (bad magic {data[:4]!r})")
    if len(data) < 12:
        raise SnapshotError(f"{path}: truncated header")
    version, hlen = struct.unpack_from("<II", data, 4)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: snapshot version {version}, this build reads "
                            f"version {SNAPSHOT_VERSION}")
    try:
        header = json.loads(data[12:12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: corrupt header ({exc})") from None
    grid = GridSpec(**header["grid"])
    pos = 12 + hlen
    out = {}
    for f in header["fields"]:
        shape = tuple(f["shape"])
        n = 8 * math.prod(shape)
        if pos + n > len(data):
            raise SnapshotError(f"{path}: truncated field {f['name']!r}")
        out[f["name"]] = np.frombuffer(data, dtype=f["dtype"], count=n // 8,
                                       offset=pos).reshape(shape).astype(np.float64)
        pos += n
    if pos != len(data):
        raise SnapshotError(f"{path}: {len(data) - pos} trailing bytes")
    return WaveState(grid, header["t"], out["eta"], out["V"], out["B"], out["Vb"],
                     out["omega"], header["delta"])


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def emit_plot_data(records: list[DiagnosticsRecord], names: Iterable[str],
                   out_dir: str | Path) -> list[Path]:
    """One ``<name>.dat`` file per field with ``t value`` rows."""
    valid = DiagnosticsRecord.columns()
    names = list(names)
    bad = [n for n in names if n not in valid or n == "t"]
    if bad:
        raise ValueError(f"unknown field(s) {bad}; valid names: {', '.join(valid[1:])}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for n in names:
        p = out_dir / f"{n}.dat"
        with open(p, "w") as fh:
            fh.write(f"# t {n}\n")
            for r in records:
                fh.write(f"{_fmt(r.t)} {_fmt(getattr(r, n))}\n")
        paths.append(p)
    return paths
