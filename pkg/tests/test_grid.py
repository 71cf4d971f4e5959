import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from membrane_lab.errors import InvalidArgumentError
from membrane_lab.grid import (
    EdgeFunctionVec,
    IntervalFunction,
    StarGraphSpec,
    bielecki_norm,
    cumulative_integral,
    exp_cumulative_integral,
    exp_tail_integral,
    make_grid,
    one_sided_derivative,
    sup_distance,
    tail_integral,
)


def test_make_grid_points():
    g = make_grid(StarGraphSpec(1, 1.0), 4)
    np.testing.assert_allclose(g.x, [0, 0.25, 0.5, 0.75, 1.0])
    g3 = make_grid(StarGraphSpec(3, 2.0), 2)
    assert g3.k == 3
    for pts in g3.points:
        np.testing.assert_allclose(pts, [0, 1, 2])


def test_make_grid_rejects_single_step():
    with pytest.raises(InvalidArgumentError):
        make_grid(StarGraphSpec(1, 1.0), 1)


def test_infinite_spec_needs_horizon():
    with pytest.raises(InvalidArgumentError):
        StarGraphSpec(2, math.inf)
    spec = StarGraphSpec(2, math.inf, 10.0)
    assert spec.infinite and spec.horizon == 10.0


def test_cumulative_integral_oracles():
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(cumulative_integral(np.ones(11), 0.1), x, atol=1e-15)
    assert abs(cumulative_integral(x, 0.1)[-1] - 0.5) <= 1e-12
    xe = np.linspace(0, 1, 101)
    assert abs(cumulative_integral(np.exp(xe), 0.01)[-1] - (math.e - 1)) <= 1e-8


@given(st.integers(3, 60), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_cumulative_integral_exact_on_cubics(n, a, b, c, d):
    x = np.linspace(0, 1, n + 1)
    f = a + b * x + c * x**2 + d * x**3
    F = a * x + b * x**2 / 2 + c * x**3 / 3 + d * x**4 / 4
    np.testing.assert_allclose(cumulative_integral(f, 1.0 / n), F, atol=1e-12)


@given(st.integers(3, 40))
def test_tail_plus_head_is_total(n):
    x = np.linspace(0, 2, n + 1)
    f = np.sin(3 * x) + x
    h = 2.0 / n
    head, tail = cumulative_integral(f, h), tail_integral(f, h)
    np.testing.assert_allclose(head + tail, head[-1], atol=1e-12)


@pytest.mark.parametrize("rate", [0.0, 0.5, 20.0, 5000.0])
def test_exp_weighted_integral(rate):
    n = 2000
    x = np.linspace(0, 1, n + 1)
    f = np.cos(x)
    got = exp_cumulative_integral(f, 1.0 / n, rate)
    # int_0^x e^{-rate (x - y)} cos y dy
    ref = (rate * np.cos(x) + np.sin(x) - rate * np.exp(-rate * x)) / (rate**2 + 1)
    np.testing.assert_allclose(got, ref, atol=1e-10)
    tail = exp_tail_integral(f, 1.0 / n, rate)
    # int_x^1 e^{-rate (y - x)} cos y dy
    ref_t = (np.exp(-rate * (1 - x)) * (-rate * math.cos(1) + math.sin(1)) + rate * np.cos(x) - np.sin(x)) / (rate**2 + 1)
    np.testing.assert_allclose(tail, ref_t, atol=1e-10)


def test_bielecki_norm_oracles():
    one = IntervalFunction.from_callable(1.0, 100, lambda x: np.ones_like(x))
    assert abs(bielecki_norm(one, 1.0) - 1.0) < 1e-15
    ex = IntervalFunction.from_callable(1.0, 100, np.exp)
    assert abs(bielecki_norm(ex, 1.0) - math.exp(-1)) < 1e-14
    zero = IntervalFunction.from_callable(1.0, 100, lambda x: 0 * x)
    assert bielecki_norm(zero, 1.0) == 0.0


@given(st.floats(0.01, 5), st.floats(0.1, 3))
def test_bielecki_norm_dominated_by_sup(omega, c):
    f = IntervalFunction.from_callable(1.0, 50, lambda x: c * np.cos(x))
    assert 0 <= bielecki_norm(f, omega) <= f.sup() + 1e-15


def test_sup_distance_oracles():
    g = make_grid(StarGraphSpec(1, 1.0), 100)
    one = EdgeFunctionVec.constant(g, 1.0)
    zero = EdgeFunctionVec.constant(g, 0.0)
    assert sup_distance(one, one) == 0.0
    assert sup_distance(one, zero) == 1.0
    f = EdgeFunctionVec(g, g.x[None, :])
    q = EdgeFunctionVec(g, g.x[None, :] ** 2)
    assert abs(sup_distance(f, q) - 0.25) <= g.h**2


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_sup_distance_is_a_metric(a, b):
    g = make_grid(StarGraphSpec(2, 1.0), 20)
    f = EdgeFunctionVec(g, np.tile(a * np.cos(g.x), (2, 1)))
    q = EdgeFunctionVec(g, np.tile(b * g.x**2, (2, 1)))
    z = EdgeFunctionVec.constant(g, 0.0)
    assert sup_distance(f, q) == sup_distance(q, f)
    assert sup_distance(f, q) <= sup_distance(f, z) + sup_distance(z, q) + 1e-15


def test_center_consistency_enforced():
    g = make_grid(StarGraphSpec(2, 1.0), 10)
    vals = np.zeros((2, 11))
    vals[1, 0] = 1.0
    with pytest.raises(InvalidArgumentError):
        EdgeFunctionVec(g, vals)


def test_one_sided_derivative_oracles():
    g = make_grid(StarGraphSpec(1, 1.0), 100)
    f = EdgeFunctionVec(g, g.x[None, :])
    assert abs(one_sided_derivative(f, 0.0)[0] - 1.0) < 1e-10
    a = IntervalFunction.from_callable(1.0, 100, np.abs)
    assert abs(one_sided_derivative(a, 0.0, "+") - 1.0) < 1e-10
    assert abs(one_sided_derivative(a, 0.0, "-") + 1.0) < 1e-10
    sq = EdgeFunctionVec(g, g.x[None, :] ** 2)
    assert abs(one_sided_derivative(sq, 0.5)[0] - 1.0) <= g.h**2
