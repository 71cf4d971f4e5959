import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from membrane_lab.drift import ExpDecay, LineDrift, ZeroDrift, cumulative_exponent, scale_drift
from membrane_lab.errors import InvalidArgumentError, ResolutionError
from membrane_lab.grid import bielecki_norm, one_sided_derivative
from membrane_lab.sturm_liouville import (
    closed_form_limits,
    contraction_weight,
    default_horizon,
    limit_k_interval,
    lower_rate,
    solve_edge,
    solve_halfline,
    solve_interval,
    solve_j_halfline,
    solve_k_edge,
    solve_k_interval,
    solve_ell_edge,
)


def fd_defect(f, a, lam, h):
    d2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d1 = (f[2:] - f[:-2]) / (2 * h)
    return np.max(np.abs(0.5 * d2 + a[1:-1] * d1 - lam * f[1:-1]))


def test_interval_drift_free_reflected():
    b = solve_k_interval(0.5, LineDrift(), 1.0, 1.0, 2000)
    assert abs(b.values.right[-1] - math.cosh(2.0)) < 1e-8
    assert b.values.left[0] == 1.0 and b.deriv.left[0] == 0.0
    x = b.values.x
    np.testing.assert_allclose(b.values.values, np.cosh(x + 1), atol=1e-8)


def test_interval_transmission_ratio():
    b = solve_k_interval(0.5, LineDrift(), 0.25, 1.0, 2000)
    assert abs(b.deriv.right[0] - 0.25 * math.sinh(1.0)) < 1e-8
    assert abs(b.deriv.right[0] - 0.25 * b.deriv.left[-1]) < 1e-12
    lim = limit_k_interval(0.5, 1.0, 0.25, 2000)
    np.testing.assert_allclose(b.values.values, lim.values, atol=1e-8)


@given(st.floats(0.1, 3), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1.0))
def test_interval_boundary_data_and_positivity(gamma, a_neg, a_pos, eps):
    drift = LineDrift(ExpDecay(a_neg, 1.0), ExpDecay(a_pos, 2.0)).scaled(eps)
    n = int(math.ceil(20 / eps))
    b = solve_k_interval(1.0, drift, gamma, 1.0, n)
    assert b.values.left[0] == 1.0 and b.deriv.left[0] == 0.0
    assert abs(b.deriv.right[0] - gamma * b.deriv.left[-1]) <= 1e-12 * max(1, abs(b.deriv.left[-1]))
    assert np.all(np.diff(b.values.values) >= -1e-14)
    assert b.values.jump == 0.0


@given(st.floats(0.1, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_interval_wronskian_law(gamma, a_neg, a_pos):
    # w e^{2 int a} is constant on each side and jumps by gamma at 0
    line = LineDrift(ExpDecay(a_neg, 1.0), ExpDecay(a_pos, 1.0)).scaled(0.2)
    sol = solve_interval(1.0, line, gamma, 1.0, 400)
    h = 1.0 / 400
    x = sol.k.x_left
    frak_l = -cumulative_exponent(line.negative, -x[::-1], check=False)[::-1]
    frak_r = cumulative_exponent(line.positive, sol.k.x_right, check=False)
    wl = sol.wronskian.left * np.exp(frak_l - frak_l[-1])
    wr = sol.wronskian.right * np.exp(frak_r)
    assert np.ptp(wl) <= 1e-9 * abs(wl[0])
    assert np.ptp(wr) <= 1e-9 * abs(wr[0])
    assert abs(wr[0] - gamma * wl[-1]) <= 1e-9 * abs(wr[0])


def test_edge_drift_free():
    x = np.linspace(0, 1, 2001)
    k = solve_k_edge(0.5, ZeroDrift(), x)
    np.testing.assert_allclose(k.values, np.sinh(x), atol=1e-8)
    assert abs(k.values[-1] - 1.175201) < 1e-6
    assert k.values[0] == 0.0 and k.deriv[0] == 1.0
    ell = solve_ell_edge(0.5, ZeroDrift(), x)
    np.testing.assert_allclose(ell.values, np.cosh(1 - x), atol=1e-8)
    assert abs(ell.values[0] - 1.543081) < 1e-6
    assert ell.values[-1] == 1.0 and ell.deriv[-1] == 0.0


@pytest.mark.parametrize("which", ["k", "ell"])
def test_edge_defect_is_second_order(which):
    a = ExpDecay(1.0, 1.0)
    out = []
    for n in (200, 400):
        x = np.linspace(0, 1, n + 1)
        b = solve_k_edge(0.5, a, x) if which == "k" else solve_ell_edge(0.5, a, x)
        d = fd_defect(b.values, a(x), 0.5, 1.0 / n)
        assert d <= 10 * (1.0 / n) ** 2
        out.append(d)
    assert 3 <= out[0] / out[1] <= 5


def test_edge_picard_residual():
    x = np.linspace(0, 1, 1001)
    b = solve_k_edge(1.0, scale_drift(ExpDecay(1.0, 1.0), 0.05), x)
    assert b.residual <= 1e-12 * (1 + np.max(np.abs(b.values)))
    assert b.iterations < 10_000


def test_edge_resolution_guard():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ResolutionError):
        solve_k_edge(1.0, scale_drift(ExpDecay(1.0, 1.0), 0.05), x)


def test_contraction_weight():
    omega = contraction_weight(0.5, 0.3, 2.0)
    factor = 2 * 0.5 * math.exp(0.6) * 2.0 / omega**2
    assert abs(factor - 0.25) < 1e-14


def test_halfline_drift_free():
    s = solve_halfline(0.5, ZeroDrift(), 20.0, 2000)
    x = s.x
    np.testing.assert_allclose(s.j, np.cosh(x), rtol=1e-8)
    np.testing.assert_allclose(s.k, np.sinh(x), rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(s.ell / s.w, np.exp(-x), rtol=1e-8, atol=1e-14)
    assert s.j[0] == 1.0 and s.j_deriv[0] == 0.0
    assert abs(s.w - s.ell[0]) < 1e-8


def test_halfline_with_drift():
    a = ExpDecay(1.0, 1.0)
    lam = 0.5
    X = 40.0
    s = solve_halfline(lam, a, X, 8000)
    M = 1 - math.exp(-X)
    w1 = math.exp(-M)
    assert abs(lower_rate(lam, M) - w1) < 1e-14
    assert np.all(s.j >= np.cosh(w1 * s.x) * (1 - 1e-8))
    wr = np.exp(s.frak) * (s.k_deriv * s.ell - s.ell_deriv * s.k)
    assert np.ptp(wr) <= 1e-6 * abs(wr[0])
    assert abs(s.w - s.ell[0]) < 1e-8
    assert s.k[0] == 0.0
    assert np.all(np.diff(s.ell) < 0) and s.ell[-1] < 1e-5 * s.ell[0]


def test_halfline_horizon_guard():
    with pytest.raises(ResolutionError):
        solve_halfline(0.5, ZeroDrift(), 3.0, 300)
    assert default_horizon(0.5, 0.0) == 12.0


def test_closed_form_limits():
    lf = closed_form_limits(0.5, 1.0, [0.0, 0.5 * math.log(2)])
    assert abs(lf.w - math.cosh(1.0)) < 1e-15
    assert abs(lf.k(1.0, 0) - lf.k(1.0)) == 0.0
    assert abs(lf.k(1.0, 1) - math.sinh(1.0) / 2) < 1e-15
    assert lf.kernel_v(-1.0, 1.0, 0.25, 0.5) == 0.25 * math.exp(-1.0)
    assert lf.kernel_v(1.0, 1.0, 0.25, 0.5) == 1.0


def test_limit_kink_matches_transform():
    lim = limit_k_interval(1.0, 1.0, 0.25 * math.exp(-4.4), 2000)
    dp = one_sided_derivative(lim, 0.0, "+")
    dm = one_sided_derivative(lim, 0.0, "-")
    assert abs(dp / dm - 0.25 * math.exp(-4.4)) <= 1e-3 * 0.25 * math.exp(-4.4)


def test_invalid_lambda():
    x = np.linspace(0, 1, 11)
    for lam in (0.0, -1.0, float("nan")):
        with pytest.raises(InvalidArgumentError):
            solve_k_edge(lam, ZeroDrift(), x)
