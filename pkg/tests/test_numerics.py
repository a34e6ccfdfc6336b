from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from waitdim import _kernels as K
from waitdim.numerics import (ONE, ContinuedFraction, FixedPointAngle, InsufficientDataError,
                              angle_from_config, cf_value, convergents, irrational_type,
                              precise_depth, type_bruteforce_oracle, type_threshold)

GOLDEN = ContinuedFraction.golden()
SILVER = ContinuedFraction.silver()
TYPE2 = ContinuedFraction.power(2.0)


def _err(angle: FixedPointAngle, exact) -> float:
    mpmath.mp.prec = 300
    return abs(mpmath.mpf(angle.raw) / 2**128 - exact)


def test_cf_value_small_examples():
    assert cf_value(ContinuedFraction.explicit([2]), 1).to_fraction() == Fraction(1, 2)
    assert float(cf_value(ContinuedFraction.explicit([1, 2, 3]), 3)) == pytest.approx(0.7, abs=1e-30)
    assert cf_value(ContinuedFraction.explicit([1, 2, 3]), 3) == FixedPointAngle.from_fraction(Fraction(7, 10))


def test_cf_value_golden_depth():
    mpmath.mp.prec = 300
    phi = (mpmath.sqrt(5) - 1) / 2
    # depth 40 is limited by 1/(q40 q41), about 2**-55.8; 2**-70 needs depth 52
    assert _err(cf_value(GOLDEN, 40), phi) < 2.0**-55
    assert _err(cf_value(GOLDEN, 52), phi) < 2.0**-70
    assert float(cf_value(GOLDEN, 40)) == pytest.approx(0.6180339887498949, abs=1e-15)


def test_cf_value_depth_beyond_terms():
    with pytest.raises(InsufficientDataError):
        cf_value(ContinuedFraction.explicit([1, 2]), 3)


def test_cf_value_brackets_alternately():
    mpmath.mp.prec = 300
    phi = (mpmath.sqrt(5) - 1) / 2
    signs = [mpmath.sign(mpmath.mpf(c.p) / c.q - phi) for c in convergents(GOLDEN, 20)]
    assert all(a == -b for a, b in zip(signs, signs[1:]))


def test_convergents_examples():
    assert [c.q for c in convergents(GOLDEN, 5)] == [1, 2, 3, 5, 8]
    assert [(c.p, c.q) for c in convergents(ContinuedFraction.explicit([2, 2, 2]), 3)] == [
        (1, 2), (2, 5), (5, 12)]
    for a in (1, 3, 7):
        c = convergents(ContinuedFraction.explicit([a, 5]), 1)[0]
        assert (c.p, c.q, c.k) == (1, a, 1)
    with pytest.raises(ValueError):
        convergents(GOLDEN, 0)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=25))
def test_convergent_invariants(terms):
    # a final term of 1 merges into its predecessor; keep expansions canonical
    terms = terms + [2]
    cf = ContinuedFraction.explicit(terms)
    cs = convergents(cf, len(terms))
    alpha = cs[-1].value
    qs = [c.q for c in cs]
    assert all(b > a for a, b in zip(qs[1:], qs[2:]))
    for c in cs:
        assert math.gcd(c.p, c.q) == 1
        if c.k < len(cs):
            assert abs(alpha - c.value) < Fraction(1, c.q**2)
    # |q_k alpha - p_k| strictly decreasing while the expansion has not ended
    d = [abs(c.q * alpha - c.p) for c in cs[:-1]]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_continued_fraction_validation():
    with pytest.raises(ValueError):
        ContinuedFraction.explicit([])
    with pytest.raises(ValueError):
        ContinuedFraction.explicit([1, 0])
    with pytest.raises(ValueError):
        ContinuedFraction("power", (1,), 0.5)


def test_power_rule_terms():
    # a_{k+1} = q_k, frozen from the exact recurrence
    assert TYPE2.terms(7) == [1, 1, 2, 5, 27, 734, 538783]
    assert ContinuedFraction.power(2.0, (6,)).terms(5) == [6, 6, 37, 1375, 1890662]
    frac = ContinuedFraction.power(1.5)
    qs = [c.q for c in convergents(frac, 12)]
    for k in range(3, 11):
        assert frac.terms(k + 1)[-1] == round(qs[k - 1] ** 0.5)


def test_irrational_type_examples():
    assert abs(irrational_type(TYPE2, 12).nu - 2.0) <= 0.1
    # golden at depth 30 gives 1.0652 (the tail starts at k = 16); depth 60 meets 0.05
    assert irrational_type(GOLDEN, 30).nu == pytest.approx(1.0652412426090532, rel=1e-12)
    assert abs(irrational_type(GOLDEN, 60).nu - 1.0) <= 0.05
    assert abs(irrational_type(SILVER, 60).nu - 1.0) <= 0.05
    with pytest.raises(InsufficientDataError):
        irrational_type(GOLDEN, 3)


@given(st.lists(st.integers(1, 200), min_size=8, max_size=30))
def test_irrational_type_invariants(terms):
    t = irrational_type(ContinuedFraction.explicit(terms), len(terms))
    lo, hi = t.window
    tail = [t.per_k_exponents[k - 1] for k in range(lo, hi + 1) if not math.isnan(t.per_k_exponents[k - 1])]
    assert t.nu == max(tail)
    assert t.nu >= 1


def test_type_oracle_golden():
    g = cf_value(GOLDEN, precise_depth(GOLDEN))
    v09 = type_bruteforce_oracle(g, 0.9, 10**5)
    # frozen oracle value; attained at j = 75025 as j**-0.1 / sqrt(5)
    assert v09 == pytest.approx(75025**-0.1 / math.sqrt(5), rel=1e-3)
    # Hurwitz: j ||j phi|| >= 1/(phi + 2), hence j**0.9 ||j phi|| >= 0.276 j**-0.1
    assert v09 >= (1 / (2 + (1 + math.sqrt(5)) / 2)) * (10**5) ** -0.1
    v10 = type_bruteforce_oracle(g, 1.0, 10**5)
    assert 0 < v10 < 1
    assert v10 == pytest.approx(2 - (1 + math.sqrt(5)) / 2, rel=1e-9)  # j = 1


def test_type_oracle_type2_drops_at_convergents():
    # exact deep convergent: the 128-bit angle cannot resolve ||q alpha|| for q > 2**64
    exact = convergents(TYPE2, 14)[-1].value
    qs = [c.q for c in convergents(TYPE2, 10)]
    mins = []
    for q in qs[2:]:
        mins.append(type_bruteforce_oracle(exact, 1.5, q, candidates=qs))
    assert mins[-1] <= mins[0] / 10
    assert all(b <= a for a, b in zip(mins, mins[1:]))


def test_type_oracle_scan_matches_exact():
    g = cf_value(GOLDEN, precise_depth(GOLDEN))
    js = list(range(1, 3000, 7))
    exact = type_bruteforce_oracle(g, 1.2, 3000, candidates=js)
    scanned = min(j**1.2 * min((j * g.to_fraction()) % 1, 1 - (j * g.to_fraction()) % 1) for j in js)
    assert exact == pytest.approx(float(scanned), rel=1e-12)
    with pytest.raises(ValueError):
        type_bruteforce_oracle(g, 1.0, 0)


@pytest.mark.parametrize("cf", [GOLDEN, SILVER, TYPE2], ids=["golden", "silver", "type2"])
def test_type_threshold_agrees_with_nu(cf):
    angle = cf_value(cf, precise_depth(cf))
    nu = irrational_type(cf, 12).nu if cf is TYPE2 else irrational_type(cf, 60).nu
    assert abs(type_threshold(angle, 10**6) - nu) <= 0.2


def test_fixed_point_exact_repeated_addition():
    a = cf_value(GOLDEN, precise_depth(GOLDEN))
    acc = FixedPointAngle(0)
    for _ in range(10**5):
        acc = acc + a
    assert acc == a * 10**5
    # compiled 128-bit adder over 1e8 steps in chunks equals n * a mod 1
    n, chunk = 10**8, 10**7
    raw = 0
    for _ in range(n // chunk):
        w = K.rotation_words(np.uint64(raw >> 64), np.uint64(raw & (2**64 - 1)),
                             np.uint64(a.hi), np.uint64(a.lo), 1)
        assert int(w[0, 0]) == raw >> 64
        raw = (raw + chunk * a.raw) % ONE
    assert FixedPointAngle(raw) == a * n


@given(st.fractions(min_value=0, max_value=1).filter(lambda f: f < 1))
def test_fraction_roundtrip(f):
    a = FixedPointAngle.from_fraction(f)
    assert abs(a.to_fraction() - f) < Fraction(1, ONE)
    assert abs(float(a) - float(f)) <= 2.0**-52


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_add_sub_inverse(x, y):
    a, b = FixedPointAngle.from_float(x), FixedPointAngle.from_float(y)
    assert (a + b) - b == a
    assert a + (-a) == FixedPointAngle(0)
    assert 0 <= Fraction(x) - a.to_fraction() < Fraction(1, ONE)


def test_angle_from_config():
    a, cf = angle_from_config({"rule": "golden"})
    assert cf == GOLDEN and a == cf_value(GOLDEN, precise_depth(GOLDEN))
    a, cf = angle_from_config({"value": "1/3"})
    assert cf is None and a == FixedPointAngle.from_fraction(Fraction(1, 3))
    a, _ = angle_from_config({"value": 0.1})
    assert a.to_fraction() == Fraction(0.1)
    _, cf = angle_from_config({"rule": "power", "exponent": 2, "terms": [6]})
    assert cf.terms(3) == [6, 6, 37]
    with pytest.raises(ValueError):
        angle_from_config({"rule": "nope"})


def test_precise_depth():
    assert precise_depth(GOLDEN) == 95
    assert precise_depth(TYPE2) == 8
    assert precise_depth(ContinuedFraction.explicit([1, 2, 3])) == 3
