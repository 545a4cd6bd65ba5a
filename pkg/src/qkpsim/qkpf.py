"""QKPF binary field dumps.

Layout: magic bytes ``QKPF``, then ``n1``, ``n2`` as unsigned 32-bit
little-endian, ``l1``, ``l2`` as 64-bit little-endian floats, then
``n1 * n2`` 64-bit little-endian floats in row-major order with x1
varying fastest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import QkpsimError
from .spectral import Grid2D, RealField2D

MAGIC = b"QKPF"
_HEADER = struct.Struct("<4sIIdd")


class FormatError(QkpsimError):
    """A QKPF stream has a bad magic, header, or payload size."""


def write_field(path, field: RealField2D) -> None:
    grid = field.grid
    header = _HEADER.pack(MAGIC, grid.n1, grid.n2, grid.l1, grid.l2)
    # values[i, j] = f(x1_i, x2_j); x1-fastest means Fortran-order flattening
    payload = np.ascontiguousarray(
        field.values.flatten(order="F"), dtype="<f8"
    ).tobytes()
    Path(path).write_bytes(header + payload)


def read_field(path) -> RealField2D:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n1, n2, l1, l2 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n1 * n2
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload size {len(raw)} != expected {expected} for {n1}x{n2}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    values = data.reshape((n1, n2), order="F")
    grid = Grid2D(n1=int(n1), n2=int(n2), l1=float(l1), l2=float(l2))
    return RealField2D(grid, np.array(values, dtype=np.float64))
