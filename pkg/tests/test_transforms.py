import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from membrane_lab.errors import InvalidArgumentError
from membrane_lab.transforms import (
    SkewParams,
    check_weights,
    roundtrip_reps,
    skew_from_walsh,
    transform_skew,
    transform_walsh,
)

probs = st.floats(1e-6, 1 - 1e-6)
alphas = st.floats(-5, 5)


def test_transform_skew_oracles():
    assert transform_skew(0.5, 0.0).p == 0.5
    t = transform_skew(0.5, 1.0)
    assert abs(t.p - math.e**2 / (math.e**2 + 1)) < 1e-15
    assert abs(t.c - math.tanh(1.0)) < 1e-15
    f1 = transform_skew(SkewParams.from_gamma(0.25), 2.2)
    assert abs(f1.gamma - 0.25 * math.exp(-4.4)) < 1e-15
    assert abs(f1.p - 0.996940) < 5e-7


def test_transform_walsh_oracles():
    p = np.full(3, 1 / 3)
    np.testing.assert_allclose(transform_walsh(p, 0.5 * np.log([2, 1, 1])), [0.5, 0.25, 0.25], atol=1e-15)
    np.testing.assert_allclose(transform_walsh([0.2, 0.3, 0.5], [0.7, 0.7, 0.7]), [0.2, 0.3, 0.5], atol=1e-15)


@given(probs, alphas, alphas)
def test_walsh_two_edges_matches_skew(p, a1, a2):
    pt = transform_walsh([p, 1 - p], [a1, a2])
    assert abs(pt[0] - transform_skew(p, a1 - a2).p) <= 1e-12


def test_roundtrip_oracles():
    sp = SkewParams(0.8)
    assert abs(sp.gamma - 0.25) < 1e-15 and abs(sp.c - 0.6) < 1e-15
    assert abs(sp.beta - 0.5 * math.log(4)) < 1e-15
    assert abs(roundtrip_reps(sp).p - 0.8) < 1e-15
    half = SkewParams(0.5)
    assert (half.gamma, half.c, half.beta) == (1.0, 0.0, 0.0)


@given(st.floats(0.001, 0.999))
def test_roundtrip_property(p):
    assert abs(roundtrip_reps(SkewParams(p)).p - p) <= 1e-12


@given(probs, alphas, alphas)
def test_addition_law(p, a1, a2):
    twice = transform_skew(transform_skew(p, a1), a2)
    once = transform_skew(p, a1 + a2)
    assert abs(twice.c - once.c) <= 1e-12
    assert abs(once.c - math.tanh(a1 + a2 + SkewParams(p).beta)) <= 1e-12


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=6), st.data())
def test_walsh_weights_form_a_distribution(raw, data):
    p = np.array(raw) / np.sum(raw)
    a = np.array(data.draw(st.lists(alphas, min_size=p.size, max_size=p.size)))
    pt = transform_walsh(p, a)
    assert abs(pt.sum() - 1) < 1e-12 and np.all(pt > 0)
    # common shift cancels
    np.testing.assert_allclose(transform_walsh(p, a + 1.3), pt, atol=1e-13)


def test_invalid_inputs():
    for bad in (0.0, 1.0, -0.1, float("nan")):
        with pytest.raises(InvalidArgumentError):
            SkewParams(bad)
    with pytest.raises(InvalidArgumentError):
        check_weights([0.5, 0.6])
    with pytest.raises(InvalidArgumentError):
        transform_walsh([0.5, 0.5], [0.0])


def test_skew_from_walsh():
    p, a = skew_from_walsh([0.8, 0.2], [0.2, -2.0])
    assert abs(p - 0.8) < 1e-15 and abs(a - 2.2) < 1e-15
