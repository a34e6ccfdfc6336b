"""Orbit generation, storage and grid indexing for occupation counts."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import _kernels as K
from .systems import CANTOR_DEPTH, Point, SystemSpec, _logistic_from_theta, point_from_words

__all__ = [
    "OrbitBuffer",
    "GridIndex",
    "OrbitTooLarge",
    "generate_orbit",
    "iter_orbit_chunks",
    "samples_buffer",
    "sequence_buffer",
    "build_grid_index",
    "occupation_counts",
    "occupation_counts_scan",
    "save_orbit",
    "load_orbit",
    "MAX_ORBIT_BYTES",
    "MAX_GRID_CELLS",
]

MAX_ORBIT_BYTES = 3_200_000_000
MAX_GRID_CELLS = 1 << 24


class OrbitTooLarge(MemoryError):
    """Storing the requested orbit would exceed the configured memory cap."""


@dataclass(frozen=True, eq=False)
class OrbitBuffer:
    """``words[i]`` holds ``T**(burn_in + i)(start)`` as uint64 coordinates.

    ``source`` is ``"orbit"`` for genuine orbits, ``"samples"`` for i.i.d.
    measure draws and ``"sequence"`` for an arbitrary user sequence.
    """

    system: SystemSpec
    start: Point | None
    burn_in: int
    words: np.ndarray = field(repr=False)
    precision_loss: bool = False
    source: str = "orbit"
    offset: int = 0

    def __post_init__(self):
        self.words.setflags(write=False)

    @property
    def length(self) -> int:
        return self.words.shape[0]

    def __len__(self) -> int:
        return self.length

    @property
    def dim(self) -> int:
        return self.words.shape[1]

    def point(self, i: int) -> Point:
        return point_from_words(self.system.space, self.words[i])

    def floats(self) -> np.ndarray:
        return self.words.astype(np.float64) * 2.0**-64

    def shifted(self, m: int) -> "OrbitBuffer":
        """The orbit of ``T**m`` of the first point, sharing storage."""
        return OrbitBuffer(self.system, None, self.burn_in + m, self.words[m:],
                           self.precision_loss, self.source, self.offset + m)


def _digit_array(p: Point) -> np.ndarray:
    return np.frombuffer(p.digits, dtype=np.uint8)


def _orbit_words(sys: SystemSpec, start: Point, burn_in: int, n: int) -> tuple[np.ndarray, bool]:
    kind = sys.kind
    if kind == "rotation":
        raw = (start.coords[0].raw + burn_in * sys.angle.raw) % (1 << 128)
        return K.rotation_words(np.uint64(raw >> 64), np.uint64(raw & (2**64 - 1)),
                                np.uint64(sys.angle.hi), np.uint64(sys.angle.lo), n), False
    if kind == "cat_map":
        x, y = (c.raw for c in start.coords)
        return K.cat_words(np.uint64(x >> 64), np.uint64(x & (2**64 - 1)),
                           np.uint64(y >> 64), np.uint64(y & (2**64 - 1)), burn_in, n), False
    if kind == "constant":
        w = np.empty((n, 1), dtype=np.uint64)
        w[:] = np.uint64(sys.target.hi)
        if burn_in == 0:
            w[0, 0] = start.words[0]
        return w, False
    if kind in ("doubling", "logistic", "cantor_shift"):
        if start.digits is None:
            digits = _digits_from_coords(sys, start)
        else:
            digits = _digit_array(start)
        if kind == "cantor_shift":
            need = burn_in + n - 1 + CANTOR_DEPTH
            w = K.ternary_words(digits[burn_in:], n, 1, CANTOR_DEPTH)
        elif kind == "doubling":
            need = burn_in + n - 1 + 64
            w = K.binary_words(digits, n, burn_in)
        else:
            need = burn_in + n - 1 + 64
            w = _logistic_from_theta(K.tent_words(digits, n, burn_in))
        return w.reshape(n, 1), digits.shape[0] < need
    if kind == "square":
        out = np.empty((n, 1), dtype=np.uint64)
        r = start.coords[0].raw
        for _ in range(burn_in):
            r = (r * r) >> 128
        for i in range(n):
            out[i, 0] = r >> 64
            r = (r * r) >> 128
        return out, False
    raise ValueError(f"{kind} has no map to iterate")


def _digits_from_coords(sys: SystemSpec, p: Point) -> np.ndarray:
    """Finite expansion of a lattice coordinate: its true orbit ends at 0."""
    raw = p.coords[0].raw
    if sys.digit_base == 2:
        return np.array([(raw >> (127 - j)) & 1 for j in range(128)], dtype=np.uint8)
    digits = []
    from fractions import Fraction

    v = Fraction(raw, 1 << 128)
    for _ in range(81):
        v *= 3
        d = int(v)
        digits.append(d)
        v -= d
    return np.array(digits, dtype=np.uint8)


def generate_orbit(sys: SystemSpec, start: Point, burn_in: int = 0, n: int = 1,
                   max_bytes: int = MAX_ORBIT_BYTES) -> OrbitBuffer:
    """Store ``n`` orbit points starting at ``T**burn_in(start)``.

    ``precision_loss`` is set when a digit-coded start has fewer digits than
    the orbit consumes; the padded tail is the exact orbit of the truncated
    point, not of a typical one.
    """
    if n < 1:
        raise ValueError("orbit length must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if start.space != sys.space:
        from .systems import DomainError

        raise DomainError(f"{sys.kind} acts on {sys.space} points, got {start.space}")
    if n * sys.dim * 8 > max_bytes:
        raise OrbitTooLarge(f"{n} points exceed the {max_bytes} byte cap; use iter_orbit_chunks")
    words, lost = _orbit_words(sys, start, burn_in, n)
    return OrbitBuffer(sys, start, burn_in, np.ascontiguousarray(words), lost)


def iter_orbit_chunks(sys: SystemSpec, start: Point, burn_in: int, n: int,
                      chunk: int = 1 << 22) -> Iterator[np.ndarray]:
    """Recompute an orbit in chunks without storing it whole."""
    done = 0
    while done < n:
        m = min(chunk, n - done)
        words, _ = _orbit_words(sys, start, burn_in + done, m)
        yield words
        done += m


def samples_buffer(sys: SystemSpec, n: int, seed) -> OrbitBuffer:
    """An i.i.d. sample from the reference measure, for non-invariant systems."""
    from .systems import sample_words

    return OrbitBuffer(sys, None, 0, sample_words(sys, n, seed), source="samples")


def sequence_buffer(points, space: str = "circle") -> OrbitBuffer:
    """Wrap an explicit sequence ``x_0, x_1, ...`` (floats or uint64 words)."""
    from .systems import sequence_system

    arr = np.asarray(points)
    if arr.dtype != np.uint64:
        arr = np.floor(np.asarray(arr, dtype=np.float64) % 1.0 * 2.0**64)
        arr = np.minimum(arr, 2.0**64 - 2048).astype(np.uint64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return OrbitBuffer(sequence_system(space), None, 0, np.ascontiguousarray(arr),
                       source="sequence")


@dataclass(frozen=True, eq=False)
class GridIndex:
    """Orbit indices bucketed into cells of side ``2**-g`` (CSR layout)."""

    g: int
    dim: int
    order: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return 1 << (self.g * self.dim)

    def cell_members(self, cell: int) -> np.ndarray:
        return self.order[self.starts[cell]:self.starts[cell + 1]]


def build_grid_index(orb: OrbitBuffer, g: int, max_cells: int = MAX_GRID_CELLS) -> GridIndex:
    if not 1 <= g <= 32:
        raise ValueError("grid level must lie in 1..32")
    if 1 << (g * orb.dim) > max_cells:
        raise MemoryError(f"2**{g * orb.dim} cells exceed the cap of {max_cells}")
    order, starts = K.counting_sort_cells(orb.words, g)
    return GridIndex(g, orb.dim, order, starts)


def _radii_words(radii) -> np.ndarray:
    from .hitting import RadiusSchedule

    if isinstance(radii, RadiusSchedule):
        return radii.thresholds
    out = []
    for r in np.atleast_1d(radii):
        r = float(r)
        if r <= 0:
            raise ValueError("radii must be positive")
        out.append(np.uint64(min(int(r * 2.0**64), 2**64 - 1)) if r < 1 else np.uint64(2**64 - 1))
    return np.array(out, dtype=np.uint64)


def occupation_counts(orb: OrbitBuffer, idx: GridIndex, y: Point, radii) -> np.ndarray:
    """``counts[k] = #{i : d(points[i], y) < r_k}`` using the grid index.

    Radii of 1/2 and above on the circle or torus (1 on the interval) cover
    the whole space and return ``N`` without a query.
    """
    rads = _radii_words(radii)
    yw = y.words
    interval = orb.system.metric.code
    n = orb.length
    out = np.empty(rads.shape[0], dtype=np.int64)
    for j, rad in enumerate(rads):
        if rad == np.uint64(2**64 - 1) or (not interval and rad > np.uint64(1 << 63)):
            out[j] = n
        else:
            out[j] = K.grid_count(orb.words, idx.order, idx.starts, idx.g, yw, rad, interval)
    return out


def occupation_counts_scan(orb: OrbitBuffer, y: Point, radii) -> np.ndarray:
    """Linear-scan reference for :func:`occupation_counts`."""
    rads = _radii_words(radii)
    interval = orb.system.metric.code
    yw = y.words
    w = orb.words
    if interval:
        d = np.where(w >= yw, w - yw, yw - w).max(axis=1)
    else:
        diff = w - yw
        d = np.minimum(diff, np.uint64(0) - diff).max(axis=1)
    return (d[:, None] < rads[None, :]).sum(axis=0).astype(np.int64)


_MAGIC = b"WDORBIT1"
_HEADER = struct.Struct("<8s32s32sqqB3xI")


def _start_digest(p: Point | None) -> bytes:
    h = hashlib.sha256()
    if p is not None:
        h.update(p.space.encode())
        for c in p.coords:
            h.update(c.raw.to_bytes(16, "little"))
        if p.digits is not None:
            h.update(p.digits)
    return h.digest()


def _arith_code(sys: SystemSpec) -> int:
    return {"fixed_point": 0, "double": 1, "digits": 2}[sys.arithmetic]


def save_orbit(orb: OrbitBuffer, path) -> None:
    """Header (system hash, start digest, burn-in, N, arithmetic) + little-endian words."""
    header = _HEADER.pack(_MAGIC, bytes.fromhex(orb.system.system_hash()), _start_digest(orb.start),
                          orb.burn_in, orb.length, _arith_code(orb.system), orb.dim)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(orb.words.astype("<u8").tobytes())


def load_orbit(path, sys: SystemSpec, start: Point, burn_in: int, n: int) -> OrbitBuffer | None:
    """Return the cached orbit only on an exact header match, else ``None``."""
    path = Path(path)
    if not path.exists():
        return None
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            return None
        magic, shash, sdig, b, length, arith, dim = _HEADER.unpack(raw)
        if (magic != _MAGIC or shash != bytes.fromhex(sys.system_hash())
                or sdig != _start_digest(start) or b != burn_in or length != n
                or arith != _arith_code(sys) or dim != sys.dim):
            return None
        data = np.frombuffer(fh.read(), dtype="<u8")
    if data.size != n * dim:
        return None
    words = data.astype(np.uint64).reshape(n, dim)
    need_digits = sys.digit_base is not None and start.digits is not None
    lost = need_digits and len(start.digits) < burn_in + n - 1 + (CANTOR_DEPTH if sys.digit_base == 3 else 64)
    return OrbitBuffer(sys, start, burn_in, words, lost)
