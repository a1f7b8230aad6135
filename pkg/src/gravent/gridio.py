"""Serialization of grid states for regression fixtures.

Binary layout (all little-endian)::

    offset  size  field
    0       8     magic b"GRVWF\\x00\\x01\\x00" (format version 1)
    8       8     uint64 N_A
    16      8     uint64 N_B
    24      8     float64 origin_A
    32      8     float64 spacing_A
    40      8     float64 origin_B
    48      8     float64 spacing_B
    56      16*N_A*N_B  complex128 amplitudes, row-major (A index slowest),
                        each value stored as (real, imag) float64 pair

CSV layout: two comment lines ``# axis_A,<origin>,<spacing>,<count>`` and
``# axis_B,...``, a header ``i,j,re,im`` and one row per amplitude in
row-major order.  Floats are written with ``repr`` so files round-trip
exactly.
"""
from __future__ import annotations

import struct

import numpy as np

from .entanglement import Axis, BipartiteWavefunction

__all__ = ["MAGIC", "save_binary", "load_binary", "save_csv", "load_csv", "to_bytes", "from_bytes"]

MAGIC = b"GRVWF\x00\x01\x00"
_HEADER = struct.Struct("<8sQQdddd")


def to_bytes(psi: BipartiteWavefunction) -> bytes:
    head = _HEADER.pack(
        MAGIC,
        psi.axis_A.count,
        psi.axis_B.count,
        psi.axis_A.origin,
        psi.axis_A.spacing,
        psi.axis_B.origin,
        psi.axis_B.spacing,
    )
    return head + np.ascontiguousarray(psi.amplitudes, dtype="<c16").tobytes()


def from_bytes(data: bytes) -> BipartiteWavefunction:
    if len(data) < _HEADER.size:
        raise ValueError("truncated grid-state header")
    magic, na, nb, oa, sa, ob, sb = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"not a grid-state file (magic {magic!r})")
    body = data[_HEADER.size:]
    if len(body) != 16 * na * nb:
        raise ValueError(f"expected {16 * na * nb} payload bytes, found {len(body)}")
    amp = np.frombuffer(body, dtype="<c16").reshape(na, nb).astype(complex)
    return BipartiteWavefunction(amp, Axis(oa, sa, int(na)), Axis(ob, sb, int(nb)))


def save_binary(psi: BipartiteWavefunction, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(psi))


def load_binary(path) -> BipartiteWavefunction:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def save_csv(psi: BipartiteWavefunction, path) -> None:
    with open(path, "w", newline="") as fh:
        for name, ax in (("axis_A", psi.axis_A), ("axis_B", psi.axis_B)):
            fh.write(f"# {name},{ax.origin!r},{ax.spacing!r},{ax.count}\n")
        fh.write("i,j,re,im\n")
        amp = psi.amplitudes
        for i in range(amp.shape[0]):
            for j in range(amp.shape[1]):
                v = amp[i, j]
                fh.write(f"{i},{j},{float(v.real)!r},{float(v.imag)!r}\n")


def load_csv(path) -> BipartiteWavefunction:
    axes = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body_start = None
    for k, line in enumerate(lines):
        if line.startswith("#"):
            name, origin, spacing, count = line[1:].strip().split(",")
            axes[name] = Axis(float(origin), float(spacing), int(count))
        elif line.strip() == "i,j,re,im":
            body_start = k + 1
            break
    if body_start is None or set(axes) != {"axis_A", "axis_B"}:
        raise ValueError("malformed grid-state CSV header")
    ax_a, ax_b = axes["axis_A"], axes["axis_B"]
    amp = np.zeros((ax_a.count, ax_b.count), dtype=complex)
    for line in lines[body_start:]:
        if not line.strip():
            continue
        i, j, re, im = line.split(",")
        amp[int(i), int(j)] = complex(float(re), float(im))
    return BipartiteWavefunction(amp, ax_a, ax_b)
