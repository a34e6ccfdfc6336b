from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from waitdim.numerics import FixedPointAngle
from waitdim.orbit import (OrbitTooLarge, build_grid_index, generate_orbit, iter_orbit_chunks,
                           load_orbit, occupation_counts, occupation_counts_scan, samples_buffer,
                           save_orbit, sequence_buffer)
from waitdim.systems import (Point, cantor_shift, cat_map, doubling, logistic, rotation,
                             sample_measure, square_map, step)


def _stepped(sys, p, burn_in, n):
    for _ in range(burn_in):
        p = step(sys, p)
    out = []
    for _ in range(n):
        out.append(p.words.copy())
        p = step(sys, p)
    return np.array(out, dtype=np.uint64)


@pytest.mark.parametrize("make,start", [
    (lambda: rotation("golden"), lambda: Point.circle(Fraction(1, 7))),
    (cat_map, lambda: Point.torus(Fraction(1, 7), Fraction(2, 9))),
    (doubling, lambda: sample_measure(doubling(), 1, 0, depth=400)[0]),
    (cantor_shift, lambda: sample_measure(cantor_shift(), 1, 0, depth=400)[0]),
    (logistic, lambda: sample_measure(logistic(), 1, 0, depth=400)[0]),
    (square_map, lambda: Point.interval(Fraction(9, 10))),
], ids=["rotation", "cat", "doubling", "cantor", "logistic", "square"])
def test_orbit_matches_stepping(make, start):
    sys, p = make(), start()
    orb = generate_orbit(sys, p, burn_in=7, n=60)
    assert np.array_equal(orb.words, _stepped(sys, p, 7, 60))
    assert not orb.precision_loss


def test_points_zero_is_after_burn_in():
    sys = rotation(Fraction(1, 4))
    orb = generate_orbit(sys, Point.circle(0), burn_in=1, n=4)
    assert orb.floats()[:, 0].tolist() == [0.25, 0.5, 0.75, 0.0]


def test_precision_loss_flag():
    p = Point.binary(bytes([1, 0] * 40))
    assert generate_orbit(doubling(), p, 0, 100).precision_loss
    p = sample_measure(doubling(), 1, 0, depth=1000)[0]
    assert not generate_orbit(doubling(), p, 0, 100).precision_loss


def test_chunks_concatenate_to_orbit():
    sys, p = rotation("golden"), Point.circle(0.3)
    whole = generate_orbit(sys, p, 5, 10_000).words
    parts = np.concatenate(list(iter_orbit_chunks(sys, p, 5, 10_000, chunk=777)))
    assert np.array_equal(whole, parts)


def test_shifted_shares_storage():
    orb = generate_orbit(rotation("golden"), Point.circle(0), 0, 100)
    s = orb.shifted(10)
    assert s.length == 90 and s.burn_in == 10
    assert np.shares_memory(s.words, orb.words)
    with pytest.raises(ValueError):
        s.words[0, 0] = 0


def test_size_guards():
    with pytest.raises(OrbitTooLarge):
        generate_orbit(rotation("golden"), Point.circle(0), 0, 1000, max_bytes=100)
    with pytest.raises(ValueError):
        generate_orbit(rotation("golden"), Point.circle(0), 0, 0)


@given(st.integers(0, 2**31), st.integers(1, 12), st.lists(st.integers(1, 20), min_size=1, max_size=6))
def test_occupation_grid_matches_scan(seed, g, ks):
    orb = samples_buffer(rotation("golden"), 500, seed)
    idx = build_grid_index(orb, g)
    y = Point.circle(FixedPointAngle(int(np.random.default_rng(seed).integers(0, 2**62)) << 66))
    radii = [2.0**-k for k in ks]
    assert np.array_equal(occupation_counts(orb, idx, y, radii), occupation_counts_scan(orb, y, radii))


def test_occupation_grid_torus():
    orb = samples_buffer(cat_map(), 3000, 9)
    idx = build_grid_index(orb, 5)
    for y in sample_measure(cat_map(), 20, 10):
        r = [2.0**-k for k in range(1, 9)]
        assert np.array_equal(occupation_counts(orb, idx, y, r), occupation_counts_scan(orb, y, r))


def test_occupation_open_ball():
    orb = sequence_buffer([0.5, 0.25, 0.75])
    c = occupation_counts_scan(orb, Point.circle(0.5), [0.25, 0.5])
    assert c.tolist() == [1, 3]


def test_cache_roundtrip(tmp_path):
    sys, p = rotation("golden"), Point.circle(0.1)
    orb = generate_orbit(sys, p, 3, 1000)
    path = tmp_path / "o.bin"
    save_orbit(orb, path)
    got = load_orbit(path, sys, p, 3, 1000)
    assert got is not None and np.array_equal(got.words, orb.words)
    assert load_orbit(path, rotation("silver"), p, 3, 1000) is None
    assert load_orbit(path, sys, p, 4, 1000) is None


def test_half_radius_ball_is_almost_everything():
    # open ball of radius 1/2: only an exact antipode is left out
    orb = samples_buffer(rotation("golden"), 1000, 3)
    assert occupation_counts_scan(orb, Point.circle(0.3), [0.5]).tolist() == [1000]
    orb = sequence_buffer(np.array([3 << 62, 1 << 62, 0], dtype=np.uint64))
    assert occupation_counts_scan(orb, Point.circle(Fraction(1, 4)), [0.5]).tolist() == [2]
