"""Binary snapshot files.

Layout: one line of JSON text terminated by ``\\n``, then the raw samples in
row-major order as 64-bit floats. Complex samples are interleaved
``(re, im)``. Example header::

    {"format": "sd-snapshot", "version": 1, "dim": 2, "points": 128,
     "extent": 20.0, "time": 0.5, "kind": "complex", "precision": "float64",
     "byte_order": "little"}

Files are always written little-endian; readers honour the declared order.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import SnapshotError
from .spectral import ComplexField, Grid, RealField

FORMAT = "sd-snapshot"
VERSION = 1
_REQUIRED = ("format", "version", "dim", "points", "extent", "time", "kind", "precision", "byte_order")

__all__ = ["write_snapshot", "read_snapshot", "read_snapshot_meta", "atomic_write"]


def atomic_write(path: Union[str, Path], data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_snapshot(field: Union[ComplexField, RealField], path, time: float = 0.0) -> None:
    g = field.grid
    header = {
        "format": FORMAT,
        "version": VERSION,
        "dim": g.dim,
        "points": g.points,
        "extent": g.extent,
        "time": float(time),
        "kind": field.kind,
        "precision": "float64",
        "byte_order": "little",
    }
    if field.kind == "complex":
        payload = np.ascontiguousarray(field.values).astype("<c16").tobytes()
    else:
        payload = np.ascontiguousarray(field.values).astype("<f8").tobytes()
    atomic_write(path, json.dumps(header).encode("ascii") + b"\n" + payload)


def _split(raw: bytes, path) -> tuple[dict, bytes]:
    nl = raw.find(b"\n")
    if nl < 0:
        raise SnapshotError(f"{path}: header mismatch (no header line)")
    try:
        header = json.loads(raw[:nl].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: header mismatch ({exc})") from None
    if not isinstance(header, dict):
        raise SnapshotError(f"{path}: header mismatch (not an object)")
    missing = [k for k in _REQUIRED if k not in header]
    if missing:
        raise SnapshotError(f"{path}: header mismatch (missing {', '.join(missing)})")
    if header["format"] != FORMAT or header["version"] != VERSION:
        raise SnapshotError(f"{path}: header mismatch (format {header['format']!r} v{header['version']!r})")
    if header["precision"] != "float64":
        raise SnapshotError(f"{path}: header mismatch (precision {header['precision']!r})")
    if header["byte_order"] not in ("little", "big"):
        raise SnapshotError(f"{path}: header mismatch (byte order {header['byte_order']!r})")
    if header["kind"] not in ("complex", "real"):
        raise SnapshotError(f"{path}: header mismatch (kind {header['kind']!r})")
    return header, raw[nl + 1:]


def read_snapshot_meta(path) -> dict:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc}") from exc
    return _split(raw, path)[0]


def read_snapshot(path) -> Union[ComplexField, RealField]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc}") from exc
    header, payload = _split(raw, path)
    try:
        grid = Grid(int(header["dim"]), int(header["points"]), float(header["extent"]))
    except (ValueError, TypeError) as exc:
        raise SnapshotError(f"{path}: header mismatch ({exc})") from None
    order = "<" if header["byte_order"] == "little" else ">"
    complex_kind = header["kind"] == "complex"
    itemsize = 16 if complex_kind else 8
    expected = grid.size * itemsize
    if len(payload) != expected:
        raise SnapshotError(
            f"{path}: truncated payload ({len(payload)} bytes, expected {expected})"
        )
    dtype = np.dtype(order + ("c16" if complex_kind else "f8"))
    values = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
    return (ComplexField if complex_kind else RealField)(grid, values.reshape(grid.shape))
