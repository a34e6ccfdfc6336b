"""Slope proxies for recurrence rates and local dimensions, and checks of the inequalities between them.

Per-scale slopes are ``s_k = log2(tau_k) / k`` for recurrence and
``s_k = -log2(mu(B(y, 2**-k))) / k`` for dimension. Limsup and liminf are
approximated by the max and min of ``s_k`` over a tail window of scales.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .numerics import InsufficientDataError
from .orbit import (GridIndex, OrbitBuffer, build_grid_index, generate_orbit, occupation_counts,
                    samples_buffer)
from .hitting import (CENSORED, HittingProfile, RadiusSchedule, batch_hitting,
                      hitting_single_pass)
from .systems import Point, SystemSpec, point_from_words, sample_measure, step

__all__ = [
    "SCHEMA_VERSION",
    "SlopeEstimate",
    "slope_estimate",
    "dimension_estimate",
    "auto_grid_level",
    "PairRecord",
    "DiagonalRecord",
    "InequalityReport",
    "inequality_report",
    "CoverEstimate",
    "cover_dimension_bound",
    "cover_tail_bound",
    "cover_tail_direct",
    "Prop1Report",
    "proposition1_check",
    "slopes_to_csv",
    "grid_targets",
    "measure_buffer",
]

SCHEMA_VERSION = 1
MIN_SCALES = 4
_TAGS = ("R_sup", "R_inf", "d_sup", "d_inf")


@dataclass(frozen=True)
class SlopeEstimate:
    """Tail-window proxies for one limsup/liminf quantity.

    ``loglog_slope`` is a free-intercept least-squares slope over every
    uncensored scale; unlike the raw proxies it does not carry the ``c/k``
    bias of a constant prefactor and serves as the point estimate.
    """

    quantity: str
    per_scale_slopes: tuple[tuple[int, float], ...]
    tail_window: tuple[int, int]
    sup_proxy: float
    inf_proxy: float
    ols_slope: float
    ols_r2: float
    censored_scales: frozenset = frozenset()
    loglog_slope: float = float("nan")
    loglog_intercept: float = float("nan")

    @property
    def family(self) -> str:
        return self.quantity[0]

    @property
    def infinite(self) -> bool:
        return math.isinf(self.sup_proxy) and math.isinf(self.inf_proxy)

    @property
    def value(self) -> float:
        """The proxy named by ``quantity`` (sup for ``*_sup``, inf for ``*_inf``)."""
        return self.sup_proxy if self.quantity.endswith("sup") else self.inf_proxy

    @property
    def window_censored(self) -> bool:
        lo, hi = self.tail_window
        return any(lo <= k <= hi for k in self.censored_scales)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["censored_scales"] = sorted(self.censored_scales)
        d["per_scale_slopes"] = [list(p) for p in self.per_scale_slopes]
        d["tail_window"] = list(self.tail_window)
        return d


def _window_start(ks: np.ndarray, tail_fraction: float) -> int:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    m = max(1, math.ceil(tail_fraction * len(ks)))
    return int(ks[len(ks) - m])


def _values_from(values, quantity: str):
    if isinstance(values, HittingProfile):
        if quantity[0] != "R":
            raise ValueError("a hitting profile yields R quantities only")
        return np.asarray(values.ks), values.tau_or_inf
    if isinstance(values, dict):
        ks = np.array(sorted(values))
        return ks, np.array([values[k] for k in ks], dtype=np.float64)
    ks, v = values
    return np.asarray(ks), np.asarray(v, dtype=np.float64)


def slope_estimate(values, quantity: str = "R_sup", tail_fraction: float = 0.5) -> SlopeEstimate:
    """Proxies from per-scale data.

    ``values`` is a :class:`HittingProfile`, a ``{k: v}`` mapping or a pair
    ``(ks, v)``. For ``R_*`` the ``v`` are waiting times with ``inf`` (or
    ``CENSORED``) marking censoring; for ``d_*`` they are ball measures with
    ``0`` marking an empty ball.
    """
    if quantity not in _TAGS:
        raise ValueError(f"quantity must be one of {_TAGS}")
    ks, v = _values_from(values, quantity)
    if ks.size == 0 or ks.size != v.size:
        raise ValueError("need one value per scale")
    if np.any(np.diff(ks) <= 0) or ks[0] < 1:
        raise ValueError("scales must be increasing positive integers")
    if quantity[0] == "R":
        cens = ~np.isfinite(v) | (v == CENSORED)
        if np.any(v[~cens] < 0):
            raise ValueError("waiting times are nonnegative")
        # sequence mode allows tau = 0; it counts like tau = 1 (zero slope)
        logv = np.log2(np.where(cens, 1.0, np.maximum(v, 1.0)))
    else:
        cens = v <= 0
        if np.any(v > 1):
            raise ValueError("ball measures lie in [0, 1]")
        logv = -np.log2(np.where(cens, 1.0, v))
    censored = frozenset(int(k) for k in ks[cens])
    k_t = _window_start(ks, tail_fraction)
    window = (k_t, int(ks[-1]))
    ok = ~cens
    if not ok.any():
        inf = float("inf")
        return SlopeEstimate(quantity, tuple((int(k), inf) for k in ks), window,
                             inf, inf, inf, float("nan"), censored, inf, float("nan"))
    if ok.sum() < MIN_SCALES:
        raise InsufficientDataError(
            f"only {int(ok.sum())} uncensored scales (need {MIN_SCALES})", censored=censored)
    s = logv / ks
    per = tuple((int(k), float(x) if o else float("inf")) for k, x, o in zip(ks, s, ok))
    win = ok & (ks >= k_t)
    if not win.any():
        # the whole tail is censored: fall back to the deepest uncensored scales
        idx = np.flatnonzero(ok)[-max(1, math.ceil(tail_fraction * ok.sum())):]
        win = np.zeros_like(ok)
        win[idx] = True
    kw = ks[win].astype(np.float64)
    lw = logv[win]
    sw = s[win]
    sup, inf = float(sw.max()), float(sw.min())
    # through-origin fit of log v on k: a k**2-weighted mean of s_k, so it stays in [inf, sup]
    ols = float(np.sum(kw * lw) / np.sum(kw * kw))
    ols = min(max(ols, inf), sup)
    ss_tot = float(np.sum(lw * lw))
    ss_res = float(np.sum((lw - ols * kw) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ka = ks[ok].astype(np.float64)
    la = logv[ok]
    if np.ptp(ka) > 0:
        slope, icpt = np.polyfit(ka, la, 1)
    else:
        slope, icpt = float("nan"), float("nan")
    return SlopeEstimate(quantity, per, window, sup, inf, ols, r2, censored,
                         float(slope), float(icpt))


def auto_grid_level(orb: OrbitBuffer, k_max: int) -> int:
    """Grid level whose cells match the finest radius, capped by orbit size."""
    per_axis = max(1, int(math.log2(max(orb.length, 2)) // orb.dim) - 1)
    return max(1, min(k_max, per_axis, 20 if orb.dim == 1 else 11))


def dimension_estimate(orb: OrbitBuffer, idx: GridIndex | None, y: Point, sched: RadiusSchedule,
                       tail_fraction: float = 0.5, quantity: str = "d_sup") -> SlopeEstimate:
    """Local dimension proxies from occupation counts of the balls ``B(y, 2**-k)``."""
    if idx is None:
        idx = build_grid_index(orb, auto_grid_level(orb, sched.k_max))
    counts = occupation_counts(orb, idx, y, sched)
    if not counts.any():
        raise InsufficientDataError("y lies outside the empirical support at every scale",
                                    censored=frozenset(int(k) for k in sched.ks))
    return slope_estimate((sched.ks, counts / orb.length), quantity, tail_fraction)


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class PairRecord:
    source: int
    target: int
    R_sup: float
    R_inf: float
    d_sup: float
    d_inf: float
    R_loglog: float
    d_loglog: float
    censored: bool


@dataclass(frozen=True)
class DiagonalRecord:
    source: int
    x: tuple[float, ...]
    R_sup: float
    R_inf: float
    d_sup: float
    d_loglog: float
    R_loglog: float
    censored: bool


@dataclass
class InequalityReport:
    system: str
    invariant: bool
    expectation: str
    tolerance: float
    schedule: tuple[int, int]
    orbit_length: int
    targets: list[tuple[float, ...]]
    pairs: list[PairRecord]
    diagonal: list[DiagonalRecord]
    frac_inf: float = float("nan")
    frac_sup: float = float("nan")
    frac_diagonal: float = float("nan")
    frac_inf_loglog: float = float("nan")
    frac_diagonal_loglog: float = float("nan")
    n_censored_pairs: int = 0
    n_censored_diagonal: int = 0
    n_failed_estimates: int = 0
    schema_version: int = SCHEMA_VERSION
    # per-source hitting profiles and labelled slope estimates; not serialized
    profiles: list = field(default_factory=list, repr=False, compare=False)
    estimates: list = field(default_factory=list, repr=False, compare=False)

    def summarize(self):
        good = [p for p in self.pairs if not p.censored]
        tol = self.tolerance
        self.n_censored_pairs = len(self.pairs) - len(good)
        if good:
            self.frac_inf = float(np.mean([p.R_inf >= p.d_inf - tol for p in good]))
            self.frac_sup = float(np.mean([p.R_sup >= p.d_sup - tol for p in good]))
            self.frac_inf_loglog = float(np.mean([p.R_loglog >= p.d_loglog - tol for p in good]))
        dg = [r for r in self.diagonal if not r.censored]
        self.n_censored_diagonal = len(self.diagonal) - len(dg)
        if dg:
            self.frac_diagonal = float(np.mean([r.R_sup <= r.d_sup + tol for r in dg]))
            self.frac_diagonal_loglog = float(np.mean([r.R_loglog <= r.d_loglog + tol for r in dg]))
        return self

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)
             if f.name not in ("profiles", "estimates")}
        return _finite(asdict_shallow(d))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"system            {self.system}",
            f"invariant         {self.invariant} ({self.expectation})",
            f"tolerance         {self.tolerance}",
            f"scales            {self.schedule[0]}..{self.schedule[1]}",
            f"orbit length      {self.orbit_length}",
            f"pairs             {len(self.pairs)} ({self.n_censored_pairs} censored)",
            f"R_inf >= d_inf    {self.frac_inf:.3f}",
            f"R_sup >= d_sup    {self.frac_sup:.3f}",
            f"diagonal          {self.frac_diagonal:.3f} ({self.n_censored_diagonal} censored)",
            f"loglog R >= d     {self.frac_inf_loglog:.3f}",
            f"loglog diagonal   {self.frac_diagonal_loglog:.3f}",
        ]
        return "\n".join(lines) + "\n"


def asdict_shallow(d: dict) -> dict:
    return {k: (asdict(v) if hasattr(v, "__dataclass_fields__") else
                [asdict(x) if hasattr(x, "__dataclass_fields__") else x for x in v]
                if isinstance(v, list) else v) for k, v in d.items()}


def _finite(o):
    """JSON-safe copy: non-finite floats become strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(o, dict):
        return {str(k): _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (set, frozenset)):
        return [_finite(v) for v in sorted(o)]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return o


def _safe_slope(values, quantity, tail_fraction):
    try:
        return slope_estimate(values, quantity, tail_fraction)
    except InsufficientDataError:
        return None


def _digits_needed(sys: SystemSpec, n: int, burn_in: int) -> int | None:
    if sys.digit_base is None:
        return None
    return burn_in + n + 64


def measure_buffer(sys: SystemSpec, n: int, seed, burn_in: int | None = None) -> OrbitBuffer:
    """Sample for occupation counts: a Birkhoff orbit when the measure is invariant,
    i.i.d. draws otherwise."""
    rng = np.random.default_rng(seed)
    if not sys.invariant:
        return samples_buffer(sys, n, rng)
    b = sys.burn_in if burn_in is None else burn_in
    start = sample_measure(sys, 1, rng, depth=_digits_needed(sys, n, b))[0]
    return generate_orbit(sys, start, b, n)


def _source_task(args):
    sys, start, burn_in, n, tw, sched, tail_fraction = args
    orb = generate_orbit(sys, start, burn_in, n)
    targets = [point_from_words(sys.space, w) for w in tw]
    profiles = batch_hitting(orb, targets, sched)
    rows = [_safe_slope(p, "R_sup", tail_fraction) for p in profiles]
    x0 = orb.point(0)
    dprof = hitting_single_pass(orb, x0, sched)
    # profiles record the source as it stands after burn-in
    profiles = [replace(p, source=x0) for p in profiles]
    return rows, _safe_slope(dprof, "R_sup", tail_fraction), x0, profiles, dprof


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    import multiprocessing as mp

    with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as ex:
        return list(ex.map(fn, tasks))


def _usable(est: SlopeEstimate | None) -> bool:
    return est is not None and not est.window_censored and not est.infinite


def inequality_report(sys: SystemSpec, n_sources: int, n_targets: int, sched: RadiusSchedule,
                      n: int, tolerance: float = 0.15, seed: int = 0,
                      tail_fraction: float = 0.5, burn_in: int | None = None,
                      targets: list[Point] | None = None, sources: list[Point] | None = None,
                      measure_n: int | None = None, workers: int = 1) -> InequalityReport:
    """Sandwich check ``R >= d`` off the diagonal and ``R(x, x) <= d(x)`` on it.

    Sources, targets and the measure sample draw from independent substreams
    of ``seed``. Pairs whose tail window has a censored scale are excluded
    and counted.
    """
    if n_sources < 1 or n_targets < 1:
        raise ValueError("need at least one source and one target")
    b = sys.burn_in if burn_in is None else burn_in
    ss_src, ss_tgt, ss_meas = np.random.SeedSequence(seed).spawn(3)
    if sources is None:
        sources = sample_measure(sys, n_sources, np.random.default_rng(ss_src),
                                 depth=_digits_needed(sys, n, b))
    if targets is None:
        targets = sample_measure(sys, n_targets, np.random.default_rng(ss_tgt))
    meas = measure_buffer(sys, measure_n or n, ss_meas)
    idx = build_grid_index(meas, auto_grid_level(meas, sched.k_max))

    def dim_of(p):
        try:
            return dimension_estimate(meas, idx, p, sched, tail_fraction)
        except InsufficientDataError:
            return None

    d_est = [dim_of(t) for t in targets]
    tw = np.stack([t.words for t in targets])
    tasks = [(sys, s, b, n, tw, sched, tail_fraction) for s in sources]
    results = _map(_source_task, tasks, workers)

    pairs, diag, profiles, estimates = [], [], [], []
    failed = 0
    for j, de in enumerate(d_est):
        if de is not None:
            estimates.append((f"d y{j}", de))
    for i, (rows, dr, x0, profs, dprof) in enumerate(results):
        profiles.append(profs + [replace(dprof, source=x0)])
        if dr is not None:
            estimates.append((f"R x{i} x{i}", dr))
        for j, est in enumerate(rows):
            if est is not None:
                estimates.append((f"R x{i} y{j}", est))
            de = d_est[j]
            if est is None or de is None:
                failed += 1
            bad = not (_usable(est) and _usable(de))
            pairs.append(PairRecord(
                i, j,
                est.sup_proxy if est else float("nan"), est.inf_proxy if est else float("nan"),
                de.sup_proxy if de else float("nan"), de.inf_proxy if de else float("nan"),
                est.loglog_slope if est else float("nan"), de.loglog_slope if de else float("nan"),
                bad))
        dd = dim_of(x0)
        bad = not (_usable(dr) and _usable(dd))
        diag.append(DiagonalRecord(
            i, x0.as_floats(),
            dr.sup_proxy if dr else float("nan"), dr.inf_proxy if dr else float("nan"),
            dd.sup_proxy if dd else float("nan"), dd.loglog_slope if dd else float("nan"),
            dr.loglog_slope if dr else float("nan"), bad))
    rep = InequalityReport(
        system=sys.name or sys.kind, invariant=sys.invariant,
        expectation="holds almost everywhere" if sys.invariant else "may fail (measure not invariant)",
        tolerance=tolerance, schedule=(sched.k_min, sched.k_max), orbit_length=n,
        targets=[t.as_floats() for t in targets], pairs=pairs, diagonal=diag,
        n_failed_estimates=failed, profiles=profiles, estimates=estimates)
    return rep.summarize()


# ------------------------------------------------------------ cover bound

def _check_cover_args(h, epsilon, d):
    if epsilon <= 0 or h < 0:
        raise ValueError("need h >= 0 and epsilon > 0")
    if d <= h + epsilon:
        raise ValueError("d must exceed h + epsilon, otherwise the cover series diverges")


def cover_tail_bound(h: float, epsilon: float, d: float, k0: int) -> float:
    """Closed form of ``sum_{k >= k0} 2**(1 + d) * 2**(k (h + epsilon - d))``."""
    _check_cover_args(h, epsilon, d)
    e = h + epsilon - d
    return 2.0 ** (1 + d) * 2.0 ** (e * k0) / (1.0 - 2.0 ** e)


def cover_tail_direct(h: float, epsilon: float, d: float, k0: int, rel: float = 1e-17) -> float:
    """The same series summed term by term until terms drop below ``rel`` of the total."""
    _check_cover_args(h, epsilon, d)
    e = h + epsilon - d
    terms = []
    k = k0
    total = 0.0
    while True:
        t = 2.0 ** (1 + d) * 2.0 ** (e * k)
        terms.append(t)
        total += t
        if t < rel * total:
            break
        k += 1
    return math.fsum(terms)


@dataclass(frozen=True)
class CoverEstimate:
    h: float
    epsilon: float
    d: float
    k0: int
    k_range: tuple[int, int]
    cover_mass: tuple[float, ...]
    tail_bound: float
    tail_direct: float
    grid_resolution: int
    n_grid: int
    n_low: int
    low_points: tuple[float, ...]
    covered_fraction: dict
    ball_counts: dict
    n_censored: int
    schema_version: int = SCHEMA_VERSION

    @property
    def empty(self) -> bool:
        return self.n_low == 0

    def to_json(self) -> str:
        return json.dumps(_finite(asdict(self)), indent=2, sort_keys=True)


def cover_dimension_bound(profiles, h: float, epsilon: float, d: float, k0: int,
                          tail_fraction: float = 0.5, n_mass: int = 16) -> CoverEstimate:
    """Cover of the low-recurrence grid set by balls around early orbit points.

    ``profiles`` are hitting profiles from one source over a grid of targets.
    A grid target ``y`` belongs to the low set when its liminf proxy is at
    most ``h``. At scale ``k`` it is covered by ``B(x_j, 2**-k)`` for some
    ``j <= 2**((h + epsilon) k)`` exactly when ``tau_k(y)`` does not exceed
    that count.
    """
    _check_cover_args(h, epsilon, d)
    profiles = list(profiles)
    if not profiles:
        raise ValueError("profiles must be nonempty")
    ks = np.asarray(profiles[0].ks)
    low, cens = [], 0
    for p in profiles:
        est = _safe_slope(p, "R_inf", tail_fraction)
        # censoring persists at every finer scale, so the liminf is infinite
        if not _usable(est):
            cens += 1
            continue
        if est.inf_proxy <= h:
            low.append(p)
    cov, balls = {}, {}
    for j, k in enumerate(ks):
        limit = math.floor(2.0 ** ((h + epsilon) * k))
        balls[int(k)] = limit
        if low:
            hit = [p.tau[j] != CENSORED and p.tau[j] <= limit for p in low]
            cov[int(k)] = float(np.mean(hit))
        else:
            cov[int(k)] = 1.0
    mass = tuple(cover_tail_bound(h, epsilon, d, k0 + i) for i in range(n_mass))
    return CoverEstimate(
        h=h, epsilon=epsilon, d=d, k0=k0, k_range=(int(ks[0]), int(ks[-1])), cover_mass=mass,
        tail_bound=cover_tail_bound(h, epsilon, d, k0),
        tail_direct=cover_tail_direct(h, epsilon, d, k0),
        grid_resolution=int(ks[-1]), n_grid=len(profiles), n_low=len(low),
        low_points=tuple(p.target.as_floats()[0] for p in low),
        covered_fraction=cov, ball_counts=balls, n_censored=cens)


def grid_targets(space: str, level: int) -> list[Point]:
    """The dyadic grid ``i 2**-level`` on a 1-dimensional space."""
    m = 1 << level
    w = np.arange(m, dtype=np.uint64) << np.uint64(64 - level)
    return [point_from_words(space, [x]) for x in w]


# ------------------------------------------- shift and Lipschitz properties

@dataclass
class Prop1Report:
    system: str
    tolerance: float
    k_max: int
    n_pairs: int
    shift_max_diff_sup: float
    shift_max_diff_inf: float
    shift_bound: float
    n_shift_excluded: int
    lipschitz_frac: float
    lipschitz_frac_sup: float
    lipschitz_frac_inf: float
    n_lipschitz_excluded: int
    lipschitz_frac_loglog: float = float("nan")
    holder_exponent: float | None = None
    holder_frac: float | None = None
    schema_version: int = SCHEMA_VERSION

    @property
    def shift_ok(self) -> bool:
        return max(self.shift_max_diff_sup, self.shift_max_diff_inf) <= self.shift_bound

    def to_json(self) -> str:
        return json.dumps(_finite(asdict(self)), indent=2, sort_keys=True)


def proposition1_check(sys: SystemSpec, pairs, sched: RadiusSchedule, n: int,
                       tol: float = 0.15, tail_fraction: float = 0.5,
                       burn_in: int | None = None) -> Prop1Report:
    """Proxy-level checks of the shift, Lipschitz and Hölder properties of ``R``.

    (a) ``R(x, y)`` against ``R(T x, y)``: the profile of ``T x`` is the
    profile of ``x`` shifted by one step whenever ``tau > 1`` on the tail
    window, so both proxies move by at most ``1 / k_t``. Pairs with
    ``tau = 1`` in the window, or censoring, are excluded and counted.
    (b) ``R(x, y) >= R(x, T y) - tol`` for Lipschitz maps.
    (c) ``R(x, y) >= alpha R(x, T y) - tol`` when the system declares a
    Hölder exponent ``alpha``.
    """
    b = sys.burn_in if burn_in is None else burn_in
    pairs = list(pairs)
    k_t = _window_start(sched.ks, tail_fraction)
    dsup, dinf, excl_a = [], [], 0
    lip, lip_sup, lip_inf, lip_ll, excl_b = [], [], [], [], 0
    alpha = sys.holder if sys.holder is not None else 1.0
    for x, y in pairs:
        orb = generate_orbit(sys, x, b, n)
        p = hitting_single_pass(orb, y, sched)
        q = hitting_single_pass(orb.shifted(1), y, sched)
        e1 = _safe_slope(p, "R_sup", tail_fraction)
        e2 = _safe_slope(q, "R_sup", tail_fraction)
        win = p.ks >= k_t
        if (_usable(e1) and _usable(e2) and np.all(p.tau[win] > 1)):
            dsup.append(abs(e1.sup_proxy - e2.sup_proxy))
            dinf.append(abs(e1.inf_proxy - e2.inf_proxy))
        else:
            excl_a += 1
        ty = step(sys, y)
        r = hitting_single_pass(orb, ty, sched)
        e3 = _safe_slope(r, "R_sup", tail_fraction)
        if _usable(e1) and _usable(e3):
            s_ok = e1.sup_proxy >= alpha * e3.sup_proxy - tol
            i_ok = e1.inf_proxy >= alpha * e3.inf_proxy - tol
            lip_sup.append(s_ok)
            lip_inf.append(i_ok)
            lip.append(s_ok and i_ok)
            lip_ll.append(e1.loglog_slope >= alpha * e3.loglog_slope - tol)
        else:
            excl_b += 1

    def frac(v):
        return float(np.mean(v)) if v else float("nan")

    return Prop1Report(
        system=sys.name or sys.kind, tolerance=tol, k_max=sched.k_max, n_pairs=len(pairs),
        shift_max_diff_sup=max(dsup) if dsup else float("nan"),
        shift_max_diff_inf=max(dinf) if dinf else float("nan"),
        shift_bound=2.0 / sched.k_max, n_shift_excluded=excl_a,
        lipschitz_frac=frac(lip), lipschitz_frac_sup=frac(lip_sup),
        lipschitz_frac_inf=frac(lip_inf), n_lipschitz_excluded=excl_b,
        lipschitz_frac_loglog=frac(lip_ll),
        holder_exponent=sys.holder, holder_frac=frac(lip) if sys.holder is not None else None)


# ------------------------------------------------------------ serializers

def slopes_to_csv(rows, out=None) -> str:
    """``rows`` are ``(label, SlopeEstimate)``; one CSV line per scale."""
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "quantity", "k", "s_k", "in_window", "censored"])
    for label, est in rows:
        lo, hi = est.tail_window
        for k, s in est.per_scale_slopes:
            w.writerow([label, est.quantity, k, "inf" if math.isinf(s) else repr(s),
                        int(lo <= k <= hi), int(k in est.censored_scales)])
    return buf.getvalue() if out is None else ""
