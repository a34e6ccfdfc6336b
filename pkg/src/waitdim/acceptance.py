"""The acceptance criteria as runnable checks, shared by the CLI suite and the tests.

Each check returns a :class:`CriterionResult` whose ``payload`` holds every
measured number (no timings) so that two runs can be compared byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import systems as S
from .estimators import (_finite, _map, _safe_slope, _usable, cover_dimension_bound,
                         cover_tail_direct, inequality_report, measure_buffer,
                         dimension_estimate, proposition1_check, slope_estimate)
from .hitting import (RadiusSchedule, batch_hitting, hitting_bruteforce, hitting_single_pass)
from .numerics import ContinuedFraction
from .orbit import (build_grid_index, generate_orbit, occupation_counts, occupation_counts_scan,
                    sequence_buffer)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_table"]

LOG3_2 = math.log(2) / math.log(3)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    payload: dict = field(repr=False)
    seconds: float = 0.0
    budget: float = math.inf

    @property
    def digest(self) -> str:
        blob = json.dumps(_finite(self.payload), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def within_budget(self) -> bool:
        return self.seconds <= self.budget

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        limit = f" / {self.budget:.0f}s" if math.isfinite(self.budget) else ""
        return (f"[{flag}] C{self.number:<2} {self.name:<34} {self.summary}"
                f"  ({self.seconds:.1f}s{limit})")


def _pair_task(args):
    sys, x, y, n, sched, tail = args
    orb = generate_orbit(sys, x, sys.burn_in, n)
    prof = hitting_single_pass(orb, y, sched)
    est = _safe_slope(prof, "R_sup", tail)
    if not _usable(est):
        return None
    return est.sup_proxy, est.inf_proxy, est.loglog_slope


def _pairs(sys, n_pairs, seed, n, sched, workers, tail=0.5):
    ss_src, ss_tgt = np.random.SeedSequence(seed).spawn(2)
    xs = S.sample_measure(sys, n_pairs, np.random.default_rng(ss_src))
    ys = S.sample_measure(sys, n_pairs, np.random.default_rng(ss_tgt))
    return _map(_pair_task, [(sys, x, y, n, sched, tail) for x, y in zip(xs, ys)], workers)


def c1_golden(workers: int = 1) -> CriterionResult:
    sys = S.rotation("golden")
    res = _pairs(sys, 20, 101, 10**7, RadiusSchedule(4, 18), workers)
    ok = [r is not None and abs(r[0] - 1) <= 0.1 and abs(r[1] - 1) <= 0.1 for r in res]
    frac = float(np.mean(ok))
    frac_ll = float(np.mean([r is not None and abs(r[2] - 1) <= 0.1 for r in res]))
    sup = [r[0] for r in res if r]
    inf = [r[1] for r in res if r]
    payload = {"pairs": res, "fraction": frac, "fraction_loglog": frac_ll}
    summary = (f"both proxies in 1±0.1 for {frac:.0%} of pairs (need 90%); "
               f"sup {min(sup):.2f}..{max(sup):.2f}, inf {min(inf):.2f}..{max(inf):.2f}; "
               f"loglog in 1±0.1 for {frac_ll:.0%}")
    return CriterionResult(1, "golden rotation R = 1", frac >= 0.9, summary, payload, budget=60)


def type2_angle() -> ContinuedFraction:
    return ContinuedFraction.power(2.0)


def c2_type_nu(workers: int = 1) -> CriterionResult:
    sys = S.rotation(type2_angle())
    res = _pairs(sys, 20, 202, 10**7, RadiusSchedule(4, 18), workers)
    good = [r for r in res if r]
    sep = [r is not None and abs(r[1] - 1) <= 0.15 and r[0] - r[1] >= 0.5 for r in res]
    high = [r is not None and r[0] >= 1.6 for r in res]
    frac, frac_high = float(np.mean(sep)), float(np.mean(high))
    payload = {"pairs": res, "fraction_separation": frac, "fraction_sup_ge_1.6": frac_high}
    summary = (f"inf in 1±0.15 and sup-inf >= 0.5 for {frac:.0%} (need 80%); "
               f"sup >= 1.6 for {frac_high:.0%}; median sup {np.median([r[0] for r in good]):.2f}")
    return CriterionResult(2, "type-2 rotation R_sup > R_inf", frac >= 0.8, summary, payload,
                           budget=90)


def c3_sandwich(workers: int = 1) -> CriterionResult:
    reps = {
        "doubling": inequality_report(S.doubling(), 50, 50, RadiusSchedule(4, 16), 10**6,
                                      0.15, seed=303, workers=workers),
        "cat_map": inequality_report(S.cat_map(), 50, 50, RadiusSchedule(3, 10), 10**7,
                                     0.15, seed=304, workers=workers),
    }
    passed = all(r.frac_inf >= 0.95 and r.frac_diagonal >= 0.95 for r in reps.values())
    payload = {k: r.to_dict() for k, r in reps.items()}
    summary = "; ".join(f"{k}: off-diag {r.frac_inf:.2f}, diag {r.frac_diagonal:.2f}"
                        for k, r in reps.items()) + " (need 0.95)"
    return CriterionResult(3, "dimension sandwich", passed, summary, payload, budget=300)


def c4_cantor(workers: int = 1) -> CriterionResult:
    rep = inequality_report(S.cantor_shift(), 1, 50, RadiusSchedule(4, 14), 10**6, 0.1,
                            seed=404, workers=workers)
    good = [p for p in rep.pairs if not p.censored]
    d_hat = float(np.mean([p.d_loglog for p in good]))
    frac = float(np.mean([p.R_loglog >= p.d_loglog - 0.1 for p in good]))
    passed = abs(d_hat - LOG3_2) <= 0.05 and frac >= 0.9
    payload = {"report": rep.to_dict(), "d_hat": d_hat, "fraction": frac}
    summary = f"d = {d_hat:.3f} (target 0.631±0.05); R >= d - 0.1 for {frac:.0%} (need 90%)"
    return CriterionResult(4, "Cantor measure dimension", passed, summary, payload, budget=60)


def c5_counterexample(workers: int = 1) -> CriterionResult:
    sys = S.noninvariant_counterexample()
    y0 = S.Point("circle", (sys.target,))
    rep = inequality_report(sys, 1, 1, RadiusSchedule(4, 14), 10**6, 0.15, seed=505,
                            targets=[y0])
    p = rep.pairs[0]
    passed = p.R_sup == 0.0 and p.d_loglog >= 0.9 and not rep.invariant
    payload = {"report": rep.to_dict()}
    summary = (f"R_sup(x, y0) = {p.R_sup:g}, d(y0) = {p.d_loglog:.3f}, "
               f"flagged non-invariant: {not rep.invariant}")
    return CriterionResult(5, "non-invariant counterexample", passed, summary, payload, budget=5)


def c6_rational(workers: int = 1) -> CriterionResult:
    sys = S.rotation(Fraction(1, 3))
    orb = generate_orbit(sys, S.Point.circle(0), 0, 10**5)
    y = S.Point.circle(0.1)
    full = hitting_single_pass(orb, y, RadiusSchedule(1, 20))
    gap = 0.1
    expect = np.array([2.0 ** -k < gap for k in full.ks])
    censor_ok = bool(np.array_equal(full.censored, expect))
    fine = hitting_single_pass(orb, y, RadiusSchedule(4, 20))
    est = slope_estimate(fine, "R_sup")
    passed = censor_ok and est.infinite
    payload = {"tau": full.tau.tolist(), "infinite": est.infinite}
    summary = f"censored exactly below the gap: {censor_ok}; R reported INFINITE: {est.infinite}"
    return CriterionResult(6, "rational rotation R = inf", passed, summary, payload, budget=1)


def _c7_systems():
    return [
        S.rotation("golden"), S.rotation(type2_angle()), S.rotation(Fraction(2, 7)),
        S.doubling(), S.logistic(), S.cat_map(), S.cantor_shift(),
        S.noninvariant_counterexample(), S.square_map(),
    ]


def _c7_task(args):
    si, seed, n_inst = args
    sys = _c7_systems()[si]
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_inst):
        n = int(rng.integers(50, 3000))
        kmin = int(rng.integers(1, 6))
        kmax = int(rng.integers(kmin + 1, 22 if sys.dim == 1 else 12))
        sched = RadiusSchedule(kmin, kmax)
        x = S.sample_measure(sys, 1, rng, depth=(n + sys.burn_in + 64) if sys.digit_base else None)[0]
        burn = int(rng.integers(0, 50)) if sys.kind != "logistic" else sys.burn_in
        orb = generate_orbit(sys, x, burn, n)
        if rng.random() < 0.3:
            y = orb.point(int(rng.integers(0, n)))
        else:
            y = S.point_from_words(sys.space, S.sample_words(sys, 1, rng)[0])
        mode = "sequence" if rng.random() < 0.2 else "dynamical"
        if hitting_single_pass(orb, y, sched, mode) != hitting_bruteforce(orb, y, sched, mode):
            bad += 1
    # occupation: 100 queries against one longer orbit
    x = S.sample_measure(sys, 1, rng, depth=(20000 + sys.burn_in + 64) if sys.digit_base else None)[0]
    orb = generate_orbit(sys, x, sys.burn_in, 20000)
    idx = build_grid_index(orb, 6 if sys.dim == 1 else 4)
    occ_bad = 0
    for _ in range(100):
        y = S.point_from_words(sys.space, S.sample_words(sys, 1, rng)[0])
        radii = RadiusSchedule(1, int(rng.integers(2, 20)))
        if not np.array_equal(occupation_counts(orb, idx, y, radii),
                              occupation_counts_scan(orb, y, radii)):
            occ_bad += 1
    return bad, occ_bad


def c7_oracles(workers: int = 1) -> CriterionResult:
    systems = _c7_systems()
    per = -(-1000 // len(systems))
    seeds = np.random.SeedSequence(707).generate_state(len(systems))
    res = _map(_c7_task, [(i, int(s), per) for i, s in enumerate(seeds)], workers)
    hit_bad = sum(r[0] for r in res)
    occ_bad = sum(r[1] for r in res)
    n_hit = per * len(systems)
    payload = {"hitting_mismatch": [r[0] for r in res], "occupation_mismatch": [r[1] for r in res]}
    summary = (f"{n_hit - hit_bad}/{n_hit} hitting instances and "
               f"{100 * len(systems) - occ_bad}/{100 * len(systems)} occupation queries agree")
    return CriterionResult(7, "oracle equivalence", hit_bad == 0 and occ_bad == 0, summary,
                           payload, budget=30)


def _c8_task(args):
    name, seed = args
    sys, sched, n = _C8[name]()
    rng = np.random.default_rng(seed)
    depth = (n + sys.burn_in + 64) if sys.digit_base else None
    xs = S.sample_measure(sys, 100, rng, depth=depth)
    ys = S.sample_measure(sys, 100, rng)
    return proposition1_check(sys, zip(xs, ys), sched, n, tol=0.15)


_C8 = {
    "golden": lambda: (S.rotation("golden"), RadiusSchedule(4, 16), 1 << 20),
    "doubling": lambda: (S.doubling(), RadiusSchedule(4, 14), 1 << 20),
    "logistic": lambda: (S.logistic(), RadiusSchedule(4, 14), 1 << 20),
    "cat_map": lambda: (S.cat_map(), RadiusSchedule(3, 9), 1 << 21),
    "cantor_shift": lambda: (S.cantor_shift(), RadiusSchedule(4, 14), 1 << 20),
}


def c8_prop1(workers: int = 1) -> CriterionResult:
    names = list(_C8)
    seeds = np.random.SeedSequence(808).generate_state(len(names))
    reps = dict(zip(names, _map(_c8_task, list(zip(names, map(int, seeds))), workers)))
    passed = all(r.shift_ok and r.lipschitz_frac >= 0.95 for r in reps.values())
    payload = {k: json.loads(r.to_json()) for k, r in reps.items()}
    summary = "; ".join(
        f"{k}: shift {max(r.shift_max_diff_sup, r.shift_max_diff_inf):.3f}/{r.shift_bound:.3f},"
        f" lip {r.lipschitz_frac:.2f}" for k, r in reps.items())
    return CriterionResult(8, "shift and Lipschitz properties", passed, summary, payload, budget=60)


def synthetic_cover_sequence(n: int = 4096, level: int = 3) -> np.ndarray:
    """Points ``j 2**-level + delta_i`` cycling over ``j`` with ``delta_i`` halving each cycle."""
    m = 1 << level
    i = np.arange(n, dtype=np.uint64)
    base = (i % np.uint64(m)) << np.uint64(64 - level)
    cycle = (i // np.uint64(m)).astype(np.int64)
    shift = np.minimum(64, level + 2 + cycle)
    # delta = (2/3) 2**-shift as a word, zero once it underflows
    third2 = np.uint64(0xAAAAAAAAAAAAAAAA)
    delta = np.where(shift >= 64, np.uint64(0), third2 >> np.minimum(shift, 63).astype(np.uint64))
    return base + delta


def c9_cover(workers: int = 1) -> CriterionResult:
    from .estimators import grid_targets

    level = 12
    sched = RadiusSchedule(4, level)
    sys = S.rotation("golden")
    x = S.sample_measure(sys, 1, 909)[0]
    orb = generate_orbit(sys, x, 0, 10**6)
    grid = grid_targets("circle", level)
    golden = cover_dimension_bound(batch_hitting(orb, grid, sched), 0.5, 0.1, 0.8, 20)

    seq = sequence_buffer(synthetic_cover_sequence())
    profs = batch_hitting(seq, grid, sched, mode="sequence")
    syn = cover_dimension_bound(profs, 0.5, 0.1, 0.8, 20)
    rel = abs(syn.tail_bound - syn.tail_direct) / syn.tail_direct
    deepest = syn.covered_fraction[level]
    passed = golden.empty and rel < 5e-11 and syn.n_low > 0 and deepest == 1.0
    payload = {"golden_low": golden.n_low, "golden_low_points": golden.low_points,
               "tail_bound": syn.tail_bound, "tail_direct": syn.tail_direct,
               "synthetic_low": syn.n_low, "covered": syn.covered_fraction}
    summary = (f"golden low set size {golden.n_low} (need 0); series rel. error {rel:.1e}; "
               f"synthetic low set {syn.n_low}, covered at 2^-{level}: {deepest:.2f}")
    return CriterionResult(9, "cover bound", passed, summary, payload, budget=60)


CRITERIA = {
    1: c1_golden,
    2: c2_type_nu,
    3: c3_sandwich,
    4: c4_cantor,
    5: c5_counterexample,
    6: c6_rational,
    7: c7_oracles,
    8: c8_prop1,
    9: c9_cover,
}


def run_criterion(number: int, workers: int = 1) -> CriterionResult:
    t = time.perf_counter()
    res = CRITERIA[number](workers)
    res.seconds = time.perf_counter() - t
    return res


def c10_determinism(first: dict[int, CriterionResult] | None = None,
                    workers: int = 8) -> CriterionResult:
    """Repeat every criterion once more with one worker and once with ``workers``."""
    t = time.perf_counter()
    first = first or {n: run_criterion(n) for n in CRITERIA}
    again = {n: run_criterion(n, 1) for n in CRITERIA}
    multi = {n: run_criterion(n, workers) for n in CRITERIA}
    diff_rerun = [n for n in CRITERIA if first[n].digest != again[n].digest]
    diff_workers = [n for n in CRITERIA if first[n].digest != multi[n].digest]
    passed = not diff_rerun and not diff_workers
    payload = {"digests": {n: first[n].digest for n in CRITERIA}}
    summary = (f"rerun mismatches {diff_rerun or 'none'}; "
               f"1 vs {workers} workers mismatches {diff_workers or 'none'}")
    return CriterionResult(10, "determinism", passed, summary, payload,
                           time.perf_counter() - t)


def run_all(workers: int = 1, determinism: bool = True) -> list[CriterionResult]:
    first = {n: run_criterion(n, workers) for n in CRITERIA}
    out = list(first.values())
    if determinism:
        out.append(c10_determinism(first))
    return out


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
