from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from waitdim.estimators import (MIN_SCALES, auto_grid_level, cover_dimension_bound,
                                cover_tail_bound, cover_tail_direct, dimension_estimate,
                                grid_targets, inequality_report, measure_buffer,
                                proposition1_check, slope_estimate, slopes_to_csv)
from waitdim.hitting import CENSORED, RadiusSchedule, batch_hitting, hitting_single_pass
from waitdim.numerics import InsufficientDataError
from waitdim.orbit import build_grid_index, generate_orbit, sequence_buffer
from waitdim.systems import Point, cantor_shift, cat_map, rotation, sample_measure

KS = np.arange(4, 20)


def test_window_and_proxies_by_hand():
    # tau_k = 2**k exactly: every s_k is 1
    est = slope_estimate((KS, 2.0**KS), "R_sup")
    assert est.tail_window == (12, 19)
    assert est.sup_proxy == est.inf_proxy == est.ols_slope == 1.0
    assert est.ols_r2 == 1.0
    assert est.loglog_slope == pytest.approx(1.0)
    # odd count: the window is the last ceil(K / 2) scales
    assert slope_estimate((np.arange(1, 6), 2.0 ** np.arange(1, 6))).tail_window == (3, 5)


def test_proxies_for_prefactor():
    # tau_k = 8 * 2**k: s_k = 1 + 3 / k, largest at the window start
    est = slope_estimate((KS, 8 * 2.0**KS), "R_inf")
    assert est.sup_proxy == pytest.approx(1 + 3 / 12)
    assert est.inf_proxy == pytest.approx(1 + 3 / 19)
    assert est.value == est.inf_proxy
    assert est.loglog_slope == pytest.approx(1.0) and est.loglog_intercept == pytest.approx(3.0)


@given(st.floats(0.1, 3), st.floats(-5, 5),
       st.lists(st.floats(-1, 1), min_size=len(KS), max_size=len(KS)))
def test_ols_inside_envelope_and_loglog_recovery(a, b, noise):
    logt = a * KS + b + np.array(noise)
    tau = 2.0 ** np.maximum(logt, 0)
    est = slope_estimate((KS, tau), "R_sup")
    assert est.inf_proxy - 1e-12 <= est.ols_slope <= est.sup_proxy + 1e-12
    assert est.ols_r2 <= 1
    exact = slope_estimate((KS, 2.0 ** (a * KS + abs(b))), "R_sup")
    assert exact.loglog_slope == pytest.approx(a, abs=1e-9)


@given(st.floats(0.05, 1), st.integers(4, 40))
def test_window_size(frac, n):
    ks = np.arange(1, n + 1)
    est = slope_estimate((ks, 2.0**ks), "R_sup", frac)
    lo, hi = est.tail_window
    assert hi == n and hi - lo + 1 == max(1, math.ceil(frac * n))


def test_censoring_rules():
    tau = 2.0**KS
    tau[-3:] = np.inf
    est = slope_estimate((KS, tau), "R_sup")
    assert est.censored_scales == frozenset({17, 18, 19})
    assert est.window_censored and not est.infinite
    allc = slope_estimate((KS, np.full(len(KS), np.inf)), "R_sup")
    assert allc.infinite and allc.value == math.inf
    few = np.full(len(KS), np.inf)
    few[:MIN_SCALES - 1] = 4
    with pytest.raises(InsufficientDataError) as err:
        slope_estimate((KS, few), "R_sup")
    assert len(err.value.censored) == len(KS) - MIN_SCALES + 1
    tau = 2.0**KS
    tau[2] = CENSORED
    assert 6 in slope_estimate((KS, tau), "R_sup").censored_scales


def test_input_validation():
    with pytest.raises(ValueError):
        slope_estimate((KS, 2.0**KS), "R_mid")
    with pytest.raises(ValueError):
        slope_estimate((KS[::-1], 2.0**KS), "R_sup")
    with pytest.raises(ValueError):
        slope_estimate((KS, -(2.0**KS)), "R_sup")
    with pytest.raises(ValueError):
        slope_estimate((KS, np.full(len(KS), 2.0)), "d_sup")
    with pytest.raises(ValueError):
        slope_estimate((KS, 2.0**KS), "R_sup", 0)


def test_d_quantities_and_dict_input():
    mu = {int(k): 2.0 ** (-0.5 * k) for k in KS}
    est = slope_estimate(mu, "d_sup")
    assert est.sup_proxy == pytest.approx(0.5) and est.loglog_slope == pytest.approx(0.5)
    mu[19] = 0.0
    assert 19 in slope_estimate(mu, "d_inf").censored_scales


def test_sequence_mode_zero_wait():
    orb = sequence_buffer([0.5] + [0.1] * 30)
    p = hitting_single_pass(orb, Point.circle(0.5), RadiusSchedule(1, 8), mode="sequence")
    assert p.tau.tolist() == [0] * 8
    assert slope_estimate(p, "R_sup").sup_proxy == 0.0


def test_dimension_golden_and_cat():
    sched = RadiusSchedule(4, 16)
    meas = measure_buffer(rotation("golden"), 10**6, 0)
    d = dimension_estimate(meas, None, Point.circle(0.3), sched)
    assert d.loglog_slope == pytest.approx(1.0, abs=0.02)
    assert d.inf_proxy <= d.ols_slope <= d.sup_proxy
    meas = measure_buffer(cat_map(), 10**6, 1)
    d = dimension_estimate(meas, None, Point.torus(0.3, 0.6), RadiusSchedule(3, 9))
    assert d.loglog_slope == pytest.approx(2.0, abs=0.05)


def test_dimension_cantor():
    meas = measure_buffer(cantor_shift(), 10**6, 2)
    idx = build_grid_index(meas, auto_grid_level(meas, 14))
    ys = sample_measure(cantor_shift(), 20, 3)
    vals = [dimension_estimate(meas, idx, y, RadiusSchedule(4, 14)).loglog_slope for y in ys]
    assert np.mean(vals) == pytest.approx(math.log(2) / math.log(3), abs=0.1)
    with pytest.raises(InsufficientDataError):
        dimension_estimate(meas, idx, Point("cantor", Point.circle(0.5).coords), RadiusSchedule(4, 14))


def test_cover_series():
    for h, e, d, k0 in [(0.5, 0.1, 0.8, 20), (0.0, 0.2, 1.0, 1), (0.3, 0.1, 0.6, 5)]:
        assert cover_tail_direct(h, e, d, k0) == pytest.approx(cover_tail_bound(h, e, d, k0), rel=1e-12)
    # hand value: q = 2**-0.2, 2**1.8 q**20 / (1 - q)
    q = 2 ** -0.2
    assert cover_tail_bound(0.5, 0.1, 0.8, 20) == pytest.approx(2**1.8 * q**20 / (1 - q))
    assert cover_tail_bound(0.5, 0.1, 0.8, 20) == pytest.approx(1.68, abs=0.005)
    with pytest.raises(ValueError):
        cover_tail_bound(0.5, 0.3, 0.8, 1)
    with pytest.raises(ValueError):
        cover_tail_direct(0.5, 0.0, 0.8, 1)


def test_cover_rational_rotation_low_set():
    # the 1/4 rotation from 0 visits the grid points j/4: those have R = 0, the rest are censored
    orb = generate_orbit(rotation(Fraction(1, 4)), Point.circle(0), 0, 4096)
    profs = batch_hitting(orb, grid_targets("circle", 3), RadiusSchedule(4, 12))
    cov = cover_dimension_bound(profs, 0.5, 0.1, 0.8, 20)
    assert cov.n_low == 4 and cov.n_censored == 4
    assert sorted(cov.low_points) == [0.0, 0.25, 0.5, 0.75]
    assert all(v == 1.0 for v in cov.covered_fraction.values())
    assert cov.ball_counts[10] == 64
    json.loads(cov.to_json())


def test_grid_targets():
    g = grid_targets("circle", 3)
    assert [float(p) for p in g] == [i / 8 for i in range(8)]


def test_inequality_report_small():
    rep = inequality_report(rotation("golden"), 3, 4, RadiusSchedule(4, 14), 10**5, seed=7,
                            measure_n=10**5)
    assert len(rep.pairs) == 12 and len(rep.diagonal) == 3
    assert rep.invariant and "almost everywhere" in rep.expectation
    d = json.loads(rep.to_json())
    assert "profiles" not in d and d["schema_version"] == 1
    assert len(rep.profiles) == 3 and len(rep.profiles[0]) == 5
    assert "R_inf >= d_inf" in rep.to_text()
    again = inequality_report(rotation("golden"), 3, 4, RadiusSchedule(4, 14), 10**5, seed=7,
                              measure_n=10**5, workers=2)
    assert again.to_json() == rep.to_json()
    text = slopes_to_csv(rep.estimates)
    assert text.splitlines()[0] == "label,quantity,k,s_k,in_window,censored"


def test_proposition1_shift_bound():
    sys = rotation("golden")
    xs = sample_measure(sys, 10, 1)
    ys = sample_measure(sys, 10, 2)
    rep = proposition1_check(sys, zip(xs, ys), RadiusSchedule(4, 16), 10**6)
    assert rep.shift_ok and rep.shift_bound == 2 / 16
    assert rep.n_pairs == 10
    json.loads(rep.to_json())
