"""Built-in dynamical systems: map, metric, domain and reference measure.

Coordinates live on the 2**-128 lattice (``FixedPointAngle``). Shift-type
maps (doubling, the ternary Cantor shift and the logistic map through its
tent-map coding) additionally carry a symbolic digit expansion so that long
orbits of typical points are exact rather than collapsing onto a dyadic
rational after ~64 steps.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .numerics import (ONE, MASK, ContinuedFraction, FixedPointAngle, angle_from_config,
                       cf_value, precise_depth)

__all__ = [
    "DomainError",
    "Point",
    "Metric",
    "SystemSpec",
    "CIRCLE",
    "TORUS_MAX",
    "INTERVAL",
    "rotation",
    "doubling",
    "logistic",
    "cat_map",
    "cantor_shift",
    "constant_map",
    "square_map",
    "sequence_system",
    "noninvariant_counterexample",
    "system_from_config",
    "step",
    "distance",
    "sample_measure",
    "sample_words",
    "words_of",
    "point_from_words",
]

CANTOR_DEPTH = 60
_TOP = ONE - 1


class DomainError(ValueError):
    """A point does not belong to the space a map or metric acts on."""


@dataclass(frozen=True)
class Metric:
    tag: str

    def __post_init__(self):
        if self.tag not in ("circle_wraparound", "torus_max", "euclidean_interval"):
            raise ValueError(f"unknown metric {self.tag!r}")

    @property
    def code(self) -> int:
        # kernel code: 0 wraparound per axis (max over axes), 1 interval
        return 1 if self.tag == "euclidean_interval" else 0


CIRCLE = Metric("circle_wraparound")
TORUS_MAX = Metric("torus_max")
INTERVAL = Metric("euclidean_interval")

_SPACE_METRIC = {
    "circle": CIRCLE,
    "torus": TORUS_MAX,
    "interval": INTERVAL,
    "cantor": INTERVAL,
}
_SPACE_DIM = {"circle": 1, "torus": 2, "interval": 1, "cantor": 1}


def _as_angle(x) -> FixedPointAngle:
    if isinstance(x, FixedPointAngle):
        return x
    if isinstance(x, (Fraction, int)):
        return FixedPointAngle.from_fraction(Fraction(x) % 1)
    return FixedPointAngle.from_float(float(x))


def _interval_coord(x) -> FixedPointAngle:
    # [0, 1] is stored on [0, 1); the right endpoint maps to the top lattice point
    if isinstance(x, FixedPointAngle):
        return x
    v = Fraction(x) if isinstance(x, (Fraction, int)) else Fraction(float(x))
    if not 0 <= v <= 1:
        raise DomainError(f"{float(v)} is outside [0, 1]")
    if v == 1:
        return FixedPointAngle(_TOP)
    return FixedPointAngle.from_fraction(v)


def _ternary_value(digits: bytes, depth: int = CANTOR_DEPTH) -> FixedPointAngle:
    num = 0
    d = digits[:depth]
    for t in d:
        num = 3 * num + t
    return FixedPointAngle.from_fraction(Fraction(num, 3 ** len(d)))


def _binary_value(bits: bytes) -> FixedPointAngle:
    b = bits[:128]
    num = int.from_bytes(np.packbits(np.frombuffer(b, dtype=np.uint8)).tobytes(), "big") if b else 0
    nbits = 8 * ((len(b) + 7) // 8)
    return FixedPointAngle.from_fraction(Fraction(num, 1 << nbits)) if b else FixedPointAngle(0)


def _logistic_from_theta(theta_words: np.ndarray) -> np.ndarray:
    """Logistic coordinate ``sin(pi theta / 2)**2`` as uint64 words."""
    theta = theta_words.astype(np.float64) * 2.0**-64
    x = np.sin(0.5 * np.pi * theta) ** 2
    w = np.floor(x * 2.0**64)
    out = np.where(w >= 2.0**64, np.float64(2.0**64 - 2048), w)
    return out.astype(np.uint64)


@dataclass(frozen=True)
class Point:
    """A point of the circle, the 2-torus, [0, 1] or the ternary Cantor set.

    ``digits`` is an optional symbolic expansion (binary for doubling and the
    tent coding of the logistic map, ternary in {0, 2} for the Cantor shift);
    when present ``coords`` is derived from it.
    """

    space: str
    coords: tuple[FixedPointAngle, ...]
    digits: bytes | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.space not in _SPACE_DIM:
            raise ValueError(f"unknown space {self.space!r}")
        if len(self.coords) != _SPACE_DIM[self.space]:
            raise ValueError(f"{self.space} points need {_SPACE_DIM[self.space]} coordinates")
        if self.space == "cantor" and self.digits is not None:
            d = np.frombuffer(self.digits, dtype=np.uint8)
            if np.any((d != 0) & (d != 2)):
                raise DomainError("Cantor digits must lie in {0, 2}")

    @classmethod
    def circle(cls, x) -> "Point":
        return cls("circle", (_as_angle(x),))

    @classmethod
    def torus(cls, x, y) -> "Point":
        return cls("torus", (_as_angle(x), _as_angle(y)))

    @classmethod
    def interval(cls, x) -> "Point":
        return cls("interval", (_interval_coord(x),))

    @classmethod
    def cantor(cls, digits) -> "Point":
        digits = bytes(digits)
        return cls("cantor", (_ternary_value(digits),), digits)

    @classmethod
    def binary(cls, bits, space: str = "circle") -> "Point":
        bits = bytes(bits)
        return cls(space, (_binary_value(bits),), bits)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def words(self) -> np.ndarray:
        return np.array([c.hi for c in self.coords], dtype=np.uint64)

    def __float__(self) -> float:
        if self.dim != 1:
            raise TypeError("only one-dimensional points convert to float")
        return float(self.coords[0])

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coords)


def point_from_words(space: str, words) -> Point:
    words = np.atleast_1d(np.asarray(words, dtype=np.uint64))
    return Point(space, tuple(FixedPointAngle(int(w) << 64) for w in words))


def words_of(p: Point) -> np.ndarray:
    return p.words


@dataclass(frozen=True)
class SystemSpec:
    """Immutable description of ``(X, T, mu)`` for one built-in system."""

    kind: str
    space: str
    metric: Metric
    measure: str
    arithmetic: str
    invariant: bool = True
    angle: FixedPointAngle | None = None
    param: float | None = None
    target: FixedPointAngle | None = None
    lipschitz: float | None = None
    holder: float | None = None
    burn_in: int = 0
    safe_length: int | None = None
    name: str = ""
    cf: ContinuedFraction | None = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return _SPACE_DIM[self.space]

    @property
    def digit_base(self) -> int | None:
        if self.kind in ("doubling", "logistic"):
            return 2
        if self.kind == "cantor_shift":
            return 3
        return None

    def system_hash(self) -> str:
        parts = [self.kind, self.space, self.metric.tag, self.measure, self.arithmetic,
                 str(self.angle.raw if self.angle else None), repr(self.param),
                 str(self.target.raw if self.target else None)]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()


def rotation(angle, name: str = "") -> SystemSpec:
    """Circle rotation ``x -> x + angle``; ``angle`` may be a rule name."""
    cf = None
    if isinstance(angle, str):
        angle, cf = angle_from_config({"rule": angle})
    elif isinstance(angle, ContinuedFraction):
        cf = angle
        angle = cf_value(cf, precise_depth(cf))
    else:
        angle = _as_angle(angle)
    return SystemSpec("rotation", "circle", CIRCLE, "lebesgue", "fixed_point",
                      angle=angle, lipschitz=1.0, name=name or "rotation", cf=cf)


def doubling() -> SystemSpec:
    return SystemSpec("doubling", "circle", CIRCLE, "lebesgue", "digits",
                      lipschitz=2.0, name="doubling")


def logistic(r: float = 4.0) -> SystemSpec:
    if r != 4.0:
        raise ValueError("only the logistic map at parameter 4 is built in")
    return SystemSpec("logistic", "interval", INTERVAL, "arcsine", "digits",
                      param=4.0, lipschitz=4.0, burn_in=10_000, name="logistic")


def cat_map() -> SystemSpec:
    return SystemSpec("cat_map", "torus", TORUS_MAX, "lebesgue", "fixed_point",
                      lipschitz=3.0, name="cat_map")


def cantor_shift() -> SystemSpec:
    return SystemSpec("cantor_shift", "cantor", INTERVAL, "cantor", "digits",
                      lipschitz=3.0, name="cantor_shift")


def constant_map(y0=0.25) -> SystemSpec:
    return SystemSpec("constant", "circle", CIRCLE, "lebesgue", "fixed_point",
                      invariant=False, target=_as_angle(y0), lipschitz=0.0,
                      name="constant")


def noninvariant_counterexample() -> SystemSpec:
    """``T(x) = 1/4`` on the circle with Lebesgue measure, which it does not preserve."""
    return constant_map(Fraction(1, 4))


def square_map(holder: float = 0.5) -> SystemSpec:
    """``x -> x**2`` on [0, 1], used with a declared Hölder exponent."""
    return SystemSpec("square", "interval", INTERVAL, "lebesgue", "fixed_point",
                      invariant=False, lipschitz=2.0, holder=holder, name="square")


def sequence_system(space: str = "circle") -> SystemSpec:
    """Placeholder system for explicit sequences; it has no map."""
    return SystemSpec("sequence", space, _SPACE_METRIC[space], "empirical", "fixed_point",
                      invariant=False, name="sequence")


def system_from_config(spec: dict) -> SystemSpec:
    kind = spec["kind"]
    if kind == "rotation":
        angle_spec = {k: spec[k] for k in ("rule", "exponent", "terms", "depth", "value")
                      if spec.get(k) is not None}
        if "rule" not in angle_spec and "value" not in angle_spec:
            angle_spec["value"] = spec.get("angle")
            if angle_spec["value"] in ("golden", "silver", "power"):
                angle_spec = {**angle_spec, "rule": angle_spec.pop("value")}
        angle, cf = angle_from_config(angle_spec)
        return replace(rotation(angle), cf=cf, name=spec.get("name", "rotation"))
    builders = {
        "doubling": doubling,
        "logistic": logistic,
        "cat_map": cat_map,
        "cantor_shift": cantor_shift,
        "constant": lambda: constant_map(Fraction(spec.get("y0", "1/4"))),
        "square": lambda: square_map(float(spec.get("holder", 0.5))),
    }
    if kind not in builders:
        raise ValueError(f"unknown system kind {kind!r}")
    return builders[kind]()


def _check_domain(sys: SystemSpec, p: Point):
    if p.space != sys.space:
        raise DomainError(f"{sys.kind} acts on {sys.space} points, got {p.space}")


def step(sys: SystemSpec, p: Point) -> Point:
    """Apply the map once."""
    _check_domain(sys, p)
    kind = sys.kind
    if kind == "rotation":
        return Point("circle", (p.coords[0] + sys.angle,))
    if kind == "constant":
        return Point("circle", (sys.target,))
    if kind == "cat_map":
        x, y = p.coords[0].raw, p.coords[1].raw
        return Point("torus", (FixedPointAngle((2 * x + y) & MASK), FixedPointAngle((x + y) & MASK)))
    if kind == "doubling":
        if p.digits is not None:
            return Point.binary(p.digits[1:])
        return Point("circle", (FixedPointAngle((2 * p.coords[0].raw) & MASK),))
    if kind == "cantor_shift":
        if p.digits is not None:
            return Point.cantor(p.digits[1:])
        return Point("cantor", (FixedPointAngle((3 * p.coords[0].raw) & MASK),))
    if kind == "logistic":
        if p.digits is not None:
            e = np.frombuffer(p.digits, dtype=np.uint8)
            return logistic_point(bytes(e[1:] ^ e[0]))
        x = float(p.coords[0])
        return Point.interval(min(1.0, 4.0 * x * (1.0 - x)))
    if kind == "square":
        r = p.coords[0].raw
        return Point("interval", (FixedPointAngle((r * r) >> 128),))
    raise DomainError(f"{kind} has no map")


def logistic_point(theta_bits: bytes) -> Point:
    """Logistic point whose tent-map conjugate ``theta`` has the given binary digits."""
    theta_bits = bytes(theta_bits)
    w = _binary_value(theta_bits).hi
    x = _logistic_from_theta(np.array([w], dtype=np.uint64))[0]
    return Point("interval", (FixedPointAngle(int(x) << 64),), theta_bits)


def _raw_distance(tag: str, a: Point, b: Point) -> int:
    if tag == "euclidean_interval":
        return abs(a.coords[0].raw - b.coords[0].raw)
    best = 0
    for ca, cb in zip(a.coords, b.coords):
        diff = (ca.raw - cb.raw) & MASK
        best = max(best, min(diff, ONE - diff))
    return best


def distance(m: Metric, a: Point, b: Point) -> float:
    """Distance under ``m``; exact on the lattice, rounded once to float."""
    for p in (a, b):
        if _SPACE_METRIC[p.space] != m:
            raise DomainError(f"{p.space} points are not measured by {m.tag}")
    if a.dim != b.dim:
        raise DomainError("points of different dimension")
    return _raw_distance(m.tag, a, b) / ONE


def _uniform_raw(rng: np.random.Generator, shape) -> list[int]:
    w = rng.integers(0, 2**64, size=(*shape, 2), dtype=np.uint64)
    flat = w.reshape(-1, 2)
    return [(int(h) << 64) | int(l) for h, l in flat]


def sample_measure(sys: SystemSpec, n: int, seed, depth: int | None = None) -> list[Point]:
    """Draw ``n`` independent points from the system's reference measure.

    For digit-coded systems ``depth`` sets the length of the symbolic
    expansion (default 128 bits, or 60 ternary digits); orbits of length
    ``N`` need ``depth >= N + burn_in + 64``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kind = sys.kind
    if kind in ("doubling", "logistic"):
        depth = depth or 128
        bits = rng.integers(0, 2, size=(n, depth), dtype=np.uint8)
        if kind == "doubling":
            return [Point.binary(row.tobytes()) for row in bits]
        return [logistic_point(row.tobytes()) for row in bits]
    if kind == "cantor_shift":
        depth = depth or CANTOR_DEPTH
        digits = 2 * rng.integers(0, 2, size=(n, depth), dtype=np.uint8)
        return [Point.cantor(row.tobytes()) for row in digits]
    raws = _uniform_raw(rng, (n, sys.dim))
    coords = [FixedPointAngle(r) for r in raws]
    return [Point(sys.space, tuple(coords[i * sys.dim:(i + 1) * sys.dim])) for i in range(n)]


def sample_words(sys: SystemSpec, n: int, seed) -> np.ndarray:
    """Vectorised draws from the reference measure as uint64 words, shape (n, dim)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if sys.kind == "cantor_shift":
        from ._kernels import ternary_words

        # 41 ternary digits resolve 2**-64; each draw uses its own block
        blocks = 2 * rng.integers(0, 2, size=n * 41, dtype=np.uint8)
        return ternary_words(blocks, n, 41, 41).reshape(n, 1)
    if sys.kind == "logistic":
        theta = rng.integers(0, 2**64, size=n, dtype=np.uint64)
        return _logistic_from_theta(theta).reshape(n, 1)
    return rng.integers(0, 2**64, size=(n, sys.dim), dtype=np.uint64)
