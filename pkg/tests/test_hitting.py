from __future__ import annotations

import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from waitdim.hitting import (CENSORED, RadiusSchedule, batch_hitting, ganzo_statistic,
                             hitting_bruteforce, hitting_single_pass, hitting_streamed,
                             min_distance_record, profiles_to_csv)
from waitdim.orbit import generate_orbit, samples_buffer, sequence_buffer
from waitdim.systems import Point, cat_map, doubling, rotation, sample_measure


def test_schedule():
    s = RadiusSchedule(4, 6)
    assert s.ks.tolist() == [4, 5, 6]
    assert s.thresholds.tolist() == [2**60, 2**59, 2**58]
    for bad in [(0, 4), (5, 5), (4, 64)]:
        with pytest.raises(ValueError):
            RadiusSchedule(*bad)


def test_golden_profile_frozen():
    # oracle: independent float scan of n * phi against 1/2
    orb = generate_orbit(rotation("golden"), Point.circle(0), 0, 10**5)
    p = hitting_single_pass(orb, Point.circle(Fraction(1, 2)), RadiusSchedule(1, 14))
    assert p.tau.tolist() == [1, 1, 1, 4, 4, 17, 17, 72, 72, 305, 305, 1292, 1292, 5473]


def test_rational_rotation_censors():
    orb = generate_orbit(rotation(Fraction(1, 3)), Point.circle(0), 0, 10**5)
    p = hitting_single_pass(orb, Point.circle(Fraction(1, 10)), RadiusSchedule(1, 12))
    # orbit is {0, 1/3, 2/3}: nearest distance to 0.1 is 0.1, so hits need 2**-k > 0.1
    assert p.tau.tolist()[:3] == [1, 1, 3]
    assert p.censored.tolist() == [False] * 3 + [True] * 9
    assert np.isinf(p.tau_or_inf[3:]).all()


def test_open_ball_boundary():
    orb = sequence_buffer([0.25, 0.5, 0.75, 0.0])
    p = hitting_single_pass(orb, Point.circle(0), RadiusSchedule(1, 3))
    # index 0 is skipped in dynamical mode; d(0.5, 0) = 1/2 is outside the open ball
    assert p.tau.tolist() == [2, 3, 3]
    p = hitting_single_pass(orb, Point.circle(0.25), RadiusSchedule(1, 3), mode="sequence")
    assert p.tau.tolist() == [0, 0, 0]


def test_mode_validation():
    orb = sequence_buffer([0.1, 0.2])
    with pytest.raises(ValueError):
        hitting_single_pass(orb, Point.circle(0), RadiusSchedule(1, 2), mode="other")
    with pytest.raises(ValueError):
        hitting_single_pass(orb, Point.torus(0, 0), RadiusSchedule(1, 2))


@given(st.integers(0, 2**31), st.sampled_from(["golden", "doubling", "cat"]),
       st.sampled_from(["dynamical", "sequence"]))
def test_single_pass_matches_bruteforce(seed, kind, mode):
    sys = {"golden": rotation("golden"), "doubling": doubling(), "cat": cat_map()}[kind]
    start = sample_measure(sys, 1, seed, depth=3000)[0]
    orb = generate_orbit(sys, start, 0, 2000)
    y = sample_measure(sys, 1, seed + 1)[0]
    sched = RadiusSchedule(1, 14 if sys.dim == 1 else 7)
    assert hitting_single_pass(orb, y, sched, mode) == hitting_bruteforce(orb, y, sched, mode)


@given(st.integers(0, 2**31))
def test_profiles_monotone(seed):
    orb = samples_buffer(rotation("golden"), 3000, seed)
    p = hitting_single_pass(orb, sample_measure(rotation("golden"), 1, seed + 7)[0], RadiusSchedule(1, 16))
    t = p.tau_or_inf
    assert np.all(t[1:] >= t[:-1])


def test_streamed_matches_stored():
    sys, x = rotation("golden"), Point.circle(0.2)
    y = Point.circle(0.7)
    sched = RadiusSchedule(2, 20)
    orb = generate_orbit(sys, x, 3, 200_000)
    assert hitting_streamed(sys, x, 3, 200_000, y, sched, chunk=1 << 14) == hitting_single_pass(orb, y, sched)


@pytest.mark.parametrize("sys", [rotation("golden"), cat_map()], ids=["circle", "torus"])
def test_batch_matches_single(sys):
    orb = generate_orbit(sys, sample_measure(sys, 1, 4)[0], 0, 50_000)
    targets = sample_measure(sys, 300, 5)
    sched = RadiusSchedule(2, 16 if sys.dim == 1 else 8)
    batch = batch_hitting(orb, targets, sched)
    for t, p in zip(targets, batch):
        assert p == hitting_single_pass(orb, t, sched)
    with pytest.raises(ValueError):
        batch_hitting(orb, [], sched)


def test_min_distance_record_and_ganzo():
    orb = generate_orbit(rotation("golden"), Point.circle(0), 0, 10**5)
    y = Point.circle(Fraction(1, 2))
    rec = min_distance_record(orb, y)
    assert np.all(np.diff(rec.m) < 0) and np.all(np.diff(rec.n) > 0)
    sched = RadiusSchedule(1, 14)
    p = hitting_single_pass(orb, y, sched)
    assert [rec.first_below(r) for r in sched.radii] == p.tau.tolist()
    assert rec.first_below(1e-30) == CENSORED
    # alpha = 1 is the critical exponent for a bounded-type rotation: n * m_n stays bounded
    g = ganzo_statistic(rec, 1.0)
    assert 0.05 < g.tail_min < 1
    assert ganzo_statistic(rec, 1.5).tail_min > 10 * g.tail_min
    with pytest.raises(ValueError):
        ganzo_statistic(rec, 0)


def test_profiles_csv():
    orb = generate_orbit(rotation(Fraction(1, 3)), Point.circle(0), 0, 100)
    p = hitting_single_pass(orb, Point.circle(Fraction(1, 10)), RadiusSchedule(3, 4))
    text = profiles_to_csv([p], "rational")
    lines = text.strip().splitlines()
    assert lines[0] == "system,x,y,k,tau_or_censored,n_max"
    assert lines[1].endswith(",3,3,99") and lines[2].endswith(",4,CENSORED,99")
    buf = io.StringIO()
    profiles_to_csv([p], "rational", buf)
    assert buf.getvalue() == text


def test_quarter_rotation_hits_half():
    orb = generate_orbit(rotation(Fraction(1, 4)), Point.circle(0), 0, 100)
    assert hitting_single_pass(orb, Point.circle(Fraction(1, 2)), RadiusSchedule(3, 4)).tau.tolist() == [2, 2]


@given(st.integers(0, 2**31))
def test_target_is_image_of_source(seed):
    from waitdim.estimators import slope_estimate

    sys = rotation("golden")
    x = sample_measure(sys, 1, seed)[0]
    orb = generate_orbit(sys, x, 0, 1000)
    p = hitting_single_pass(orb, orb.point(1), RadiusSchedule(1, 40))
    assert set(p.tau.tolist()) == {1}
    assert slope_estimate(p, "R_sup").sup_proxy == 0.0
