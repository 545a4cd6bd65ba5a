"""Standalone QKPF reader/writer.

Layout: magic ``QKPF``, u32-LE n1, n2, f64-LE l1, l2, then n1*n2 f64-LE
samples in row-major order with x1 fastest.  Kept independent of the
simulation package so figures can be produced from files alone; the
format must stay byte-compatible with the producer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"QKPF"
_HEADER = struct.Struct("<4sIIdd")


class FormatError(Exception):
    """Bad magic, truncated header, or mismatched payload size."""


@dataclass(frozen=True)
class FieldDump:
    """One scalar field on its periodic grid; values indexed [i1, i2]."""

    n1: int
    n2: int
    l1: float
    l2: float
    values: np.ndarray


def read_field(path) -> FieldDump:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n1, n2, l1, l2 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n1 * n2
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    values = np.array(data.reshape((n1, n2), order="F"), dtype=np.float64)
    return FieldDump(n1=int(n1), n2=int(n2), l1=float(l1), l2=float(l2),
                     values=values)


def write_field(path, dump: FieldDump) -> None:
    header = _HEADER.pack(MAGIC, dump.n1, dump.n2, dump.l1, dump.l2)
    payload = np.ascontiguousarray(
        dump.values.flatten(order="F"), dtype="<f8"
    ).tobytes()
    Path(path).write_bytes(header + payload)
