"""First-entrance (waiting) times over dyadic radius schedules."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .orbit import OrbitBuffer, iter_orbit_chunks
from .systems import Point, SystemSpec

__all__ = [
    "CENSORED",
    "RadiusSchedule",
    "HittingProfile",
    "MinDistanceRecord",
    "hitting_single_pass",
    "hitting_bruteforce",
    "hitting_streamed",
    "batch_hitting",
    "min_distance_record",
    "ganzo_statistic",
    "GanzoDiagnostic",
    "profiles_to_csv",
]

CENSORED = -1


@dataclass(frozen=True)
class RadiusSchedule:
    """Radii ``2**-k`` for ``k = k_min .. k_max``."""

    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min < 1 or self.k_max <= self.k_min:
            raise ValueError("need 1 <= k_min < k_max")
        if self.k_max > 63:
            raise ValueError("k_max above 63 is finer than the 64-bit word lattice")

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def radii(self) -> np.ndarray:
        return 2.0 ** -self.ks.astype(np.float64)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([1 << (64 - k) for k in self.ks], dtype=np.uint64)

    def __len__(self) -> int:
        return self.k_max - self.k_min + 1


def _start_index(mode: str) -> int:
    if mode == "dynamical":
        return 1
    if mode == "sequence":
        return 0
    raise ValueError(f"unknown hitting mode {mode!r}")


@dataclass(frozen=True, eq=False)
class HittingProfile:
    """``tau[j]`` is the first entrance time at radius ``2**-ks[j]`` or ``CENSORED``.

    ``n_max`` is the largest time the orbit budget could observe.
    """

    target: Point
    ks: np.ndarray
    tau: np.ndarray
    n_max: int
    mode: str = "dynamical"
    source: Point | None = None

    @property
    def censored(self) -> np.ndarray:
        return self.tau == CENSORED

    @property
    def tau_or_inf(self) -> np.ndarray:
        return np.where(self.censored, np.inf, self.tau.astype(np.float64))

    def __eq__(self, other):
        if not isinstance(other, HittingProfile):
            return NotImplemented
        return (np.array_equal(self.ks, other.ks) and np.array_equal(self.tau, other.tau)
                and self.n_max == other.n_max and self.mode == other.mode
                and np.array_equal(self.target.words, other.target.words))


def _target_words(y: Point, orb: OrbitBuffer) -> np.ndarray:
    if y.dim != orb.dim:
        raise ValueError("target and orbit live in different dimensions")
    return y.words


def hitting_single_pass(orb: OrbitBuffer, y: Point, sched: RadiusSchedule,
                        mode: str = "dynamical") -> HittingProfile:
    """Single pass over the orbit recording each scale when it is first beaten.

    In dynamical mode candidate times start at ``n = 1`` (``points[n]``); in
    sequence mode at ``n = 0``.
    """
    if len(sched) == 0:
        raise ValueError("empty radius schedule")
    start = _start_index(mode)
    tau = K.first_entrance(orb.words, _target_words(y, orb), sched.thresholds, start,
                           orb.system.metric.code)
    return HittingProfile(y, sched.ks, tau, orb.length - 1, mode, orb.start)


def hitting_bruteforce(orb: OrbitBuffer, y: Point, sched: RadiusSchedule,
                       mode: str = "dynamical", max_length: int = 10**5) -> HittingProfile:
    """Independent reference: every scale scanned separately from the first candidate."""
    if orb.length > max_length:
        raise ValueError(f"brute force is limited to orbits of {max_length} points")
    start = _start_index(mode)
    pts = orb.floats()[start:]
    yf = np.array(y.as_floats())
    if orb.system.metric.code:
        d = np.abs(pts - yf).max(axis=1)
    else:
        diff = np.abs(pts - yf) % 1.0
        d = np.minimum(diff, 1.0 - diff).max(axis=1)
    # float distances are only a prefilter; ties are settled on exact words
    yw = y.words
    w = orb.words[start:]
    tau = np.full(len(sched), CENSORED, dtype=np.int64)
    for j, (r, thr) in enumerate(zip(sched.radii, sched.thresholds)):
        cand = np.flatnonzero(d < r * (1 + 1e-9) + 2.0**-60)
        for i in cand:
            if _exact_dist(w[i], yw, orb.system.metric.code) < int(thr):
                tau[j] = i + start
                break
    return HittingProfile(y, sched.ks, tau, orb.length - 1, mode, orb.start)


def _exact_dist(a, b, interval) -> int:
    best = 0
    for x, y in zip(a, b):
        x, y = int(x), int(y)
        if interval:
            e = abs(x - y)
        else:
            diff = (x - y) % (1 << 64)
            e = min(diff, (1 << 64) - diff)
        best = max(best, e)
    return best


def hitting_streamed(sys: SystemSpec, start: Point, burn_in: int, n: int, y: Point,
                     sched: RadiusSchedule, mode: str = "dynamical",
                     chunk: int = 1 << 22) -> HittingProfile:
    """Same result as :func:`hitting_single_pass` while recomputing the orbit in chunks."""
    thr = sched.thresholds
    yw = y.words
    tau = np.full(len(sched), CENSORED, dtype=np.int64)
    first = _start_index(mode)
    offset = 0
    for words in iter_orbit_chunks(sys, start, burn_in, n, chunk):
        open_ = np.flatnonzero(tau == CENSORED)
        if open_.size == 0:
            break
        s = max(first - offset, 0)
        if s < words.shape[0]:
            sub = K.first_entrance(words, yw, thr[open_], s, sys.metric.code)
            hit = sub != CENSORED
            tau[open_[hit]] = sub[hit] + offset
        offset += words.shape[0]
    return HittingProfile(y, sched.ks, tau, n - 1, mode, start)


def _target_grid(tw: np.ndarray, interval: int) -> tuple[int, np.ndarray, np.ndarray]:
    nt, dim = tw.shape
    g = max(1, int(np.log2(max(nt, 2))) // dim)
    g = min(g, 12 if dim == 1 else 6)
    order, starts = K.counting_sort_cells(tw, g)
    return g, order, starts


def batch_hitting(orb: OrbitBuffer, targets, sched: RadiusSchedule,
                  mode: str = "dynamical") -> list[HittingProfile]:
    """Profiles for many targets from one orbit pass; equal to per-target passes."""
    targets = list(targets)
    if not targets:
        raise ValueError("targets must be nonempty")
    tw = np.ascontiguousarray(np.stack([_target_words(t, orb) for t in targets]))
    g, order, starts = _target_grid(tw, orb.system.metric.code)
    tau = K.batch_first_entrance(orb.words, tw, sched.thresholds, _start_index(mode),
                                 orb.system.metric.code, starts, order, g)
    return [HittingProfile(t, sched.ks, tau[j].copy(), orb.length - 1, mode, orb.start)
            for j, t in enumerate(targets)]


@dataclass(frozen=True, eq=False)
class MinDistanceRecord:
    """``(n, m_n)`` at every strict drop of ``min_{1<=i<=n} d(T^i x, y)``."""

    n: np.ndarray
    m: np.ndarray = field(repr=False)

    def first_below(self, r: float) -> int:
        hit = np.flatnonzero(self.m < r)
        return int(self.n[hit[0]]) if hit.size else CENSORED


def min_distance_record(orb: OrbitBuffer, y: Point, mode: str = "dynamical",
                        stop_below: float = 0.0) -> MinDistanceRecord:
    stop = np.uint64(int(stop_below * 2.0**64)) if stop_below > 0 else np.uint64(0)
    n, m = K.min_distance_record(orb.words, y.words, _start_index(mode), stop,
                                 orb.system.metric.code)
    return MinDistanceRecord(n, m.astype(np.float64) * 2.0**-64)


@dataclass(frozen=True)
class GanzoDiagnostic:
    alpha: float
    n: np.ndarray
    statistic: np.ndarray
    tail_min: float

    def window_min(self, lo: int, hi: int) -> float:
        sel = (self.n >= lo) & (self.n < hi)
        return float(self.statistic[sel].min()) if sel.any() else float("nan")


def ganzo_statistic(rec: MinDistanceRecord, alpha: float) -> GanzoDiagnostic:
    """``n**alpha * m_n`` along the record; ``tail_min`` over its last half.

    When ``alpha`` exceeds the inverse local dimension at ``y`` this grows
    without bound for typical ``x``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = rec.n.astype(np.float64)
    stat = np.where(rec.m == 0, 0.0, n ** alpha * rec.m)
    tail = stat[len(stat) // 2:]
    return GanzoDiagnostic(alpha, rec.n, stat, float(tail.min()) if tail.size else float("nan"))


def _fmt_point(p: Point | None) -> str:
    if p is None:
        return ""
    return ";".join(repr(v) for v in p.as_floats())


def profiles_to_csv(profiles, system: str, out=None) -> str:
    """Rows ``system, x, y, k, tau_or_censored, n_max``."""
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["system", "x", "y", "k", "tau_or_censored", "n_max"])
    for p in profiles:
        x, y = _fmt_point(p.source), _fmt_point(p.target)
        for k, t in zip(p.ks, p.tau):
            w.writerow([system, x, y, int(k), "CENSORED" if t == CENSORED else int(t), p.n_max])
    return buf.getvalue() if out is None else ""
