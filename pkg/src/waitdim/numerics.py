"""Continued fractions, 128-bit fixed-point circle arithmetic and Diophantine type.

Rotation orbits are computed on the 2**-128 lattice so that ``n`` additions of
an angle agree bit for bit with ``n * angle mod 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "FRAC_BITS",
    "FixedPointAngle",
    "ContinuedFraction",
    "Convergent",
    "IrrationalType",
    "InsufficientDataError",
    "cf_value",
    "convergents",
    "irrational_type",
    "type_bruteforce_oracle",
    "type_threshold",
    "angle_from_config",
    "precise_depth",
]

FRAC_BITS = 128
ONE = 1 << FRAC_BITS
MASK = ONE - 1
_WORD = 1 << 64


class InsufficientDataError(ValueError):
    """Raised when too few terms or scales are available for an estimate."""

    def __init__(self, message: str = "", censored=frozenset()):
        super().__init__(message)
        self.censored = frozenset(censored)


@dataclass(frozen=True, order=True)
class FixedPointAngle:
    """A number in [0, 1) stored as ``raw / 2**128``."""

    raw: int

    def __post_init__(self):
        if not 0 <= self.raw < ONE:
            raise ValueError(f"raw value {self.raw} outside [0, 2**128)")

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "FixedPointAngle":
        value = Fraction(value)
        return cls((value.numerator * ONE // value.denominator) & MASK)

    @classmethod
    def from_float(cls, x: float) -> "FixedPointAngle":
        # exact binary expansion of the double, reduced mod 1
        return cls.from_fraction(Fraction(float(x)) % 1)

    @classmethod
    def from_words(cls, hi: int, lo: int = 0) -> "FixedPointAngle":
        return cls((int(hi) << 64) | int(lo))

    @property
    def hi(self) -> int:
        return self.raw >> 64

    @property
    def lo(self) -> int:
        return self.raw & (_WORD - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, ONE)

    def __float__(self) -> float:
        return self.raw / ONE

    def __add__(self, other: "FixedPointAngle") -> "FixedPointAngle":
        return FixedPointAngle((self.raw + other.raw) & MASK)

    def __sub__(self, other: "FixedPointAngle") -> "FixedPointAngle":
        return FixedPointAngle((self.raw - other.raw) & MASK)

    def __neg__(self) -> "FixedPointAngle":
        return FixedPointAngle(-self.raw & MASK)

    def __mul__(self, n: int) -> "FixedPointAngle":
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        return FixedPointAngle((self.raw * int(n)) & MASK)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"FixedPointAngle({float(self)!r})"


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    k: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients ``[0; a_1, a_2, ...]`` of a number in (0, 1).

    ``rule`` is one of ``"explicit"`` (only ``prefix`` is available),
    ``"constant"`` (every term equals ``prefix[0]``) or ``"power"`` where,
    after ``prefix``, each new term is ``round(q_k ** (exponent - 1))`` so that
    ``log q_{k+1} / log q_k`` tends to ``exponent``.
    """

    rule: str
    prefix: tuple[int, ...]
    exponent: float | None = None
    _cache: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rule not in ("explicit", "constant", "power"):
            raise ValueError(f"unknown continued fraction rule {self.rule!r}")
        if len(self.prefix) < 1:
            raise ValueError("a continued fraction needs at least one term")
        if any(int(a) < 1 for a in self.prefix):
            raise ValueError("partial quotients must be positive integers")
        if self.rule == "power" and (self.exponent is None or self.exponent < 1):
            raise ValueError("power rule needs an exponent >= 1")
        object.__setattr__(self, "prefix", tuple(int(a) for a in self.prefix))

    @classmethod
    def explicit(cls, terms: Sequence[int]) -> "ContinuedFraction":
        return cls("explicit", tuple(terms))

    @classmethod
    def constant(cls, a: int) -> "ContinuedFraction":
        return cls("constant", (int(a),))

    @classmethod
    def golden(cls) -> "ContinuedFraction":
        return cls.constant(1)

    @classmethod
    def silver(cls) -> "ContinuedFraction":
        return cls.constant(2)

    @classmethod
    def power(cls, exponent: float, prefix: Sequence[int] = (1,)) -> "ContinuedFraction":
        return cls("power", tuple(prefix), float(exponent))

    @property
    def available(self) -> float:
        return len(self.prefix) if self.rule == "explicit" else math.inf

    def terms(self, depth: int) -> list[int]:
        if depth > self.available:
            raise InsufficientDataError(
                f"depth {depth} exceeds the {len(self.prefix)} available terms"
            )
        if self.rule == "explicit":
            return list(self.prefix[:depth])
        if self.rule == "constant":
            return [self.prefix[0]] * depth
        cache = self._cache
        if not cache:
            cache.extend(self.prefix)
        if len(cache) < depth:
            q_prev, q = 0, 1
            for a in cache:
                q_prev, q = q, a * q + q_prev
            while len(cache) < depth:
                a = _round_power(q, self.exponent - 1)
                cache.append(a)
                q_prev, q = q, a * q + q_prev
        return list(cache[:depth])


def _round_power(q: int, e: float) -> int:
    """``round(q ** e)`` for a possibly huge integer ``q``, at least 1."""
    if float(e).is_integer():
        return max(1, q ** int(e))
    lg = e * math.log2(q)
    if lg < 50:
        return max(1, round(2.0 ** lg))
    import mpmath

    with mpmath.workprec(int(lg) + 64):
        return max(1, int(mpmath.nint(mpmath.mpf(q) ** e)))


def convergents(cf: ContinuedFraction, depth: int) -> list[Convergent]:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for k, a in enumerate(cf.terms(depth), start=1):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(Convergent(p, q, k))
    return out


def cf_value(cf: ContinuedFraction, depth: int) -> FixedPointAngle:
    """Value of ``[0; a_1, ..., a_depth]`` truncated to 128 fractional bits."""
    c = convergents(cf, depth)[-1]
    return FixedPointAngle.from_fraction(c.value)


@dataclass(frozen=True)
class IrrationalType:
    nu: float
    window: tuple[int, int]
    per_k_exponents: tuple[float, ...]


def irrational_type(cf: ContinuedFraction, depth: int) -> IrrationalType:
    """Type of the angle estimated as the tail maximum of ``log q_{k+1} / log q_k``.

    ``per_k_exponents[i]`` belongs to index ``k = i + 1``; indices with
    ``q_k = 1`` have no defined ratio and are reported as NaN. The window is
    the last half of the indices with a defined ratio.
    """
    if depth < 4:
        raise InsufficientDataError("irrational_type needs depth >= 4")
    qs = [c.q for c in convergents(cf, depth)]
    ratios = []
    for k in range(len(qs) - 1):
        if qs[k] <= 1:
            ratios.append(math.nan)
        else:
            ratios.append(math.log(qs[k + 1]) / math.log(qs[k]))
    valid = [i for i, r in enumerate(ratios) if not math.isnan(r)]
    if len(valid) < 2:
        raise InsufficientDataError("not enough convergents with q_k > 1")
    tail = valid[len(valid) // 2:]
    nu = max(ratios[i] for i in tail)
    return IrrationalType(nu=nu, window=(tail[0] + 1, tail[-1] + 1),
                          per_k_exponents=tuple(ratios))


def _circle_norm_words(angle: FixedPointAngle, j: np.ndarray) -> np.ndarray:
    """``||j * angle||`` for integer ``j < 2**31`` as floats, 2**-64 accurate."""
    hi = np.uint64(angle.hi)
    lo32 = np.uint64(angle.lo >> 32)
    ju = j.astype(np.uint64)
    with np.errstate(over="ignore"):
        w = ju * hi + ((ju * lo32) >> np.uint64(32))
    w = np.minimum(w, -w)
    return w.astype(np.float64) * 2.0**-64


def type_bruteforce_oracle(angle, beta: float, j_max: int, candidates=None) -> float:
    """Running minimum of ``j**beta * ||j angle||`` over ``1 <= j <= j_max``.

    ``angle`` is a :class:`FixedPointAngle` (scanned in 64-bit words, so
    ``j_max`` must stay below 2**31) or an exact :class:`~fractions.Fraction`.
    With ``candidates`` only those ``j`` are evaluated, which is how minima at
    convergent denominators far beyond a direct scan are reached.
    """
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    if candidates is not None:
        js = [int(j) for j in candidates if 1 <= int(j) <= j_max]
        if not js:
            raise ValueError("no candidate index within [1, j_max]")
        frac = angle.to_fraction() if isinstance(angle, FixedPointAngle) else Fraction(angle)
        best = math.inf
        for j in js:
            x = (j * frac) % 1
            dist = min(x, 1 - x)
            # j**beta * dist evaluated in log space; j can exceed float range
            if dist == 0:
                return 0.0
            val = math.exp(beta * math.log(j) + math.log(dist.numerator) - math.log(dist.denominator))
            best = min(best, val)
        return best
    if isinstance(angle, Fraction):
        angle = FixedPointAngle.from_fraction(angle)
    if j_max >= 2**31:
        raise ValueError("direct scan limited to j_max < 2**31; pass candidates")
    best = math.inf
    chunk = 1 << 20
    for start in range(1, j_max + 1, chunk):
        j = np.arange(start, min(j_max, start + chunk - 1) + 1, dtype=np.int64)
        vals = j.astype(np.float64) ** beta * _circle_norm_words(angle, j)
        best = min(best, float(vals.min()))
    return best


def type_threshold(angle, j_max: int = 10**6, lo: float = 1.0, hi: float = 4.0,
                   drop: float = 0.5, iters: int = 30) -> float:
    """Locate the vanishing threshold in ``beta`` by bisection on ``[lo, hi]``.

    ``beta`` counts as vanishing when the running minimum at ``j_max`` has
    fallen below ``drop`` times its value at ``sqrt(j_max)``.
    """
    j_half = max(1, math.isqrt(j_max))

    def vanishing(beta):
        return (type_bruteforce_oracle(angle, beta, j_max)
                <= drop * type_bruteforce_oracle(angle, beta, j_half))

    if not vanishing(lo):
        return lo
    if vanishing(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if vanishing(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def angle_from_config(spec: dict) -> tuple[FixedPointAngle, ContinuedFraction | None]:
    """Build an angle from ``{rule, exponent, terms, depth}`` or ``{value}``.

    Decimal values are converted through their exact binary expansion and
    carry no continued fraction.
    """
    rule = spec.get("rule")
    depth = spec.get("depth")
    if rule is None or rule == "value":
        value = spec["value"]
        if isinstance(value, str) and "/" in value:
            return FixedPointAngle.from_fraction(Fraction(value)), None
        return FixedPointAngle.from_float(float(value)), None
    if rule == "golden":
        cf = ContinuedFraction.golden()
    elif rule == "silver":
        cf = ContinuedFraction.silver()
    elif rule == "power":
        terms = spec.get("terms") or (1,)
        cf = ContinuedFraction.power(float(spec["exponent"]), tuple(int(t) for t in terms))
    elif rule == "explicit":
        cf = ContinuedFraction.explicit(tuple(int(t) for t in spec["terms"]))
    else:
        raise ValueError(f"unknown angle rule {rule!r}")
    full = precise_depth(cf)
    depth = full if depth is None else min(int(depth), full)
    return cf_value(cf, depth), cf


def precise_depth(cf: ContinuedFraction, bits: int = FRAC_BITS + 2, max_depth: int = 400) -> int:
    """Smallest depth whose convergent is within ``2**-bits`` of the limit.

    Uses ``|alpha - p_k/q_k| < 1/(q_k q_{k+1})``; explicit fractions return
    their full length.
    """
    if cf.rule == "explicit":
        return len(cf.prefix)
    q_prev, q = 0, 1
    for k in range(1, max_depth + 1):
        a = cf.terms(k)[-1]
        q_prev, q = q, a * q + q_prev
        if 2 * (q.bit_length() - 1) >= bits:
            return k
    return max_depth
