"""Eigenfunctions of 1/2 f'' + a f' = lam f by contraction iteration.

Three settings are covered:

* the interval ``[-r, r]`` with a transmission condition
  ``k'(0+) = gamma k'(0-)`` at the origin,
* one edge ``[0, r]`` of a finite star graph,
* one ray ``[0, inf)`` of an infinite star graph, truncated at ``x_max``.

Each solution is the fixed point of a Volterra map written as two
nested cumulative integrals.  The iteration starts from 1 and is
stopped by an update test in the exponentially weighted sup norm plus a
pointwise relative test.  Derivatives come from the integral
representation, never from differencing the iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .drift import LineDrift, ZeroDrift, check_resolution, cumulative_exponent
from .errors import InvalidArgumentError, NumericFailure, ResolutionError
from .grid import (
    IntervalFunction,
    bielecki_norm,
    cumulative_integral,
    make_interval,
    tail_integral,
)

MAX_ITER = 10_000
TOL = 1e-12
RTOL = 1e-13


@dataclass(frozen=True)
class Branch:
    """One solved eigenfunction with its derivative."""

    values: object
    deriv: object
    iterations: int
    residual: float


@dataclass(frozen=True)
class SLSolution:
    """Increasing and decreasing solutions with their Wronskian.

    On an edge the fields are arrays over ``x``.  On the interval they are
    :class:`~membrane_lab.grid.IntervalFunction` objects and ``x`` is None.
    """

    lam: float
    x: np.ndarray | None
    k: object
    k_deriv: object
    ell: object
    ell_deriv: object
    wronskian: object
    iterations: int
    residual: float


@dataclass(frozen=True)
class HalfLineSolution:
    """Solutions on a truncated ray ``[0, x_max]``.

    ``w`` is the constant e^{frak}(k' ell - k ell'), equal to ``ell(0)``.
    ``frak`` is the cumulative exponent 2 int_0^x a.
    """

    lam: float
    x: np.ndarray
    frak: np.ndarray
    j: np.ndarray
    j_deriv: np.ndarray
    k: np.ndarray
    k_deriv: np.ndarray
    ell: np.ndarray
    ell_deriv: np.ndarray
    w: float
    omega1: float
    iterations: int
    residual: float

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * self.lam)


def _check_lam(lam):
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidArgumentError(f"lambda must be a positive real, got {lam}")
    return lam


def contraction_weight(lam: float, mass_bound: float, gamma: float = 1.0) -> float:
    """omega = 2 sqrt(2 lam e^{2M} max(1, gamma)); Lipschitz factor <= 1/4."""
    return 2.0 * math.sqrt(2.0 * lam * math.exp(2.0 * mass_bound) * max(1.0, gamma))


def _picard(update: Callable, start: np.ndarray, pos: np.ndarray, omega: float,
            tol: float = TOL, rtol: float = RTOL, max_iter: int = MAX_ITER):
    f = start
    for it in range(1, max_iter + 1):
        f_new, d_new = update(f)
        if not np.all(np.isfinite(f_new)):
            raise NumericFailure(f"non-finite iterate at step {it}")
        diff = f_new - f
        res = bielecki_norm(diff, omega, pos)
        rel = float(np.max(np.abs(diff) / np.maximum(np.abs(f_new), 1e-300)))
        if res <= tol * (1.0 + bielecki_norm(f_new, omega, pos)) and rel <= rtol:
            return f_new, d_new, it, res
        f = f_new
    raise NumericFailure(f"contraction iteration did not converge in {max_iter} steps")


def _volterra(lam: float, frak: np.ndarray, x: np.ndarray, f0: float, d0: float, omega: float):
    """Fixed point of f = f0 + int_0^x e^{-frak}(d0 + 2 lam int_0^y e^{frak} f)."""
    h = x[1] - x[0]
    ea = np.exp(frak)
    ema = np.exp(-frak)

    def update(f):
        inner = cumulative_integral(ea * f, h)
        deriv = ema * (d0 + 2.0 * lam * inner)
        return f0 + cumulative_integral(deriv, h), deriv

    return _picard(update, np.ones_like(x), x, omega)


def _mass_bound(a_vals: np.ndarray, h: float) -> float:
    return float(cumulative_integral(np.abs(a_vals), h)[-1])


def _edge_nodes(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 3 or x[0] != 0.0:
        raise InvalidArgumentError("edge nodes must be a uniform array starting at 0 with >= 3 entries")
    return x


# ---------------------------------------------------------------------------
# finite edge


def solve_k_edge(lam: float, drift, x) -> Branch:
    """Increasing solution on ``[0, r]`` with k(0) = 0 and k'(0) = 1.

    Parameters
    ----------
    lam : float
        Spectral parameter, positive.
    drift : Drift
        Edge drift, already scaled.
    x : ndarray
        Uniform nodes ``0 = x_0 < ... < x_n = r``.

    Returns
    -------
    Branch
    """
    lam = _check_lam(lam)
    x = _edge_nodes(x)
    drift = ZeroDrift() if drift is None else drift
    frak = cumulative_exponent(drift, x)
    omega = contraction_weight(lam, _mass_bound(drift(x), x[1]))
    k, kd, it, res = _volterra(lam, frak, x, 0.0, 1.0, omega)
    return Branch(k, kd, it, res)


def solve_ell_edge(lam: float, drift, x) -> Branch:
    """Decreasing solution on ``[0, r]`` with ell(r) = 1 and ell'(r) = 0.

    Solved as the increasing solution of the mirrored problem
    (s = r - x, drift -a(r - s)) and mapped back.
    """
    lam = _check_lam(lam)
    x = _edge_nodes(x)
    drift = ZeroDrift() if drift is None else drift
    frak = cumulative_exponent(drift, x)
    frak_m = frak[::-1] - frak[-1]
    omega = contraction_weight(lam, _mass_bound(drift(x), x[1]))
    lm, ldm, it, res = _volterra(lam, frak_m, x, 1.0, 0.0, omega)
    return Branch(lm[::-1].copy(), -ldm[::-1], it, res)


def solve_edge(lam: float, drift, x) -> SLSolution:
    """Both edge solutions and the pointwise Wronskian k' ell - k ell'."""
    x = _edge_nodes(x)
    kb = solve_k_edge(lam, drift, x)
    lb = solve_ell_edge(lam, drift, x)
    w = kb.deriv * lb.values - kb.values * lb.deriv
    if np.min(np.abs(w)) < 1e-12:
        raise NumericFailure("Wronskian vanishes on the grid")
    return SLSolution(
        float(lam), x, kb.values, kb.deriv, lb.values, lb.deriv, w,
        kb.iterations + lb.iterations, max(kb.residual, lb.residual),
    )


# ---------------------------------------------------------------------------
# interval


def solve_k_interval(lam: float, drift: LineDrift, gamma: float, r: float, n: int) -> Branch:
    """Increasing solution on ``[-r, r]``.

    k(-r) = 1, k'(-r) = 0 and k'(0+) = gamma k'(0-).

    Returns
    -------
    Branch
        ``values`` and ``deriv`` are :class:`IntervalFunction` objects.
    """
    lam = _check_lam(lam)
    if not gamma > 0:
        raise InvalidArgumentError("gamma must be positive")
    drift = LineDrift() if drift is None else drift
    x_l, x_r = make_interval(r, n)
    h = x_r[1]
    check_resolution(h, drift.eps)
    a_l = drift.left_values(x_l)
    a_r = drift.right_values(x_r)
    big_a_l = 2.0 * cumulative_integral(a_l, h)
    big_a_r = big_a_l[-1] + 2.0 * cumulative_integral(a_r, h)
    e_l, e_r = np.exp(big_a_l), np.exp(big_a_r)
    me_l, me_r = np.exp(-big_a_l), np.exp(-big_a_r)
    m = n + 1
    mass = _mass_bound(a_l, h) + _mass_bound(a_r, h)
    omega = contraction_weight(lam, mass, gamma)
    pos = np.concatenate([x_l, x_r]) + r

    def update(kk):
        kl, kr = kk[:m], kk[m:]
        il = cumulative_integral(e_l * kl, h)
        ir = cumulative_integral(e_r * kr, h)
        dl = 2.0 * lam * me_l * il
        dr = 2.0 * lam * me_r * (gamma * il[-1] + ir)
        kl_new = 1.0 + cumulative_integral(dl, h)
        kr_new = kl_new[-1] + cumulative_integral(dr, h)
        return np.concatenate([kl_new, kr_new]), np.concatenate([dl, dr])

    k, kd, it, res = _picard(update, np.ones(2 * m), pos, omega)
    return Branch(IntervalFunction(r, k[:m], k[m:]), IntervalFunction(r, kd[:m], kd[m:]), it, res)


def solve_interval(lam: float, drift: LineDrift, gamma: float, r: float, n: int) -> SLSolution:
    """k, ell and the Wronskian on ``[-r, r]``.

    ell is obtained by mirroring: with drift x -> -a(-x) and transmission
    ratio 1/gamma, the increasing solution k^ gives ell(x) = k^(-x).
    """
    drift = LineDrift() if drift is None else drift
    kb = solve_k_interval(lam, drift, gamma, r, n)
    hb = solve_k_interval(lam, drift.reflected(), 1.0 / gamma, r, n)
    kh, khd = hb.values, hb.deriv
    ell = IntervalFunction(r, kh.right[::-1], kh.left[::-1])
    ell_d = IntervalFunction(r, -khd.right[::-1], -khd.left[::-1])
    k, kd = kb.values, kb.deriv
    w = IntervalFunction(
        r,
        kd.left * ell.left - k.left * ell_d.left,
        kd.right * ell.right - k.right * ell_d.right,
    )
    if min(np.min(np.abs(w.left)), np.min(np.abs(w.right))) < 1e-12:
        raise NumericFailure("Wronskian vanishes on the grid")
    return SLSolution(
        float(lam), None, k, kd, ell, ell_d, w,
        kb.iterations + hb.iterations, max(kb.residual, hb.residual),
    )


# ---------------------------------------------------------------------------
# half-line


def lower_rate(lam: float, mass_bound: float) -> float:
    """omega_1 = sqrt(2 lam e^{-2M}), the guaranteed growth rate of j."""
    return math.sqrt(2.0 * lam * math.exp(-2.0 * mass_bound))


def default_horizon(lam: float, mass_bound: float) -> float:
    """x_max = 12 / min(omega_1, sqrt(2 lam))."""
    return 12.0 / min(lower_rate(lam, mass_bound), math.sqrt(2.0 * lam))


def solve_j_halfline(lam: float, drift, x, mass_bound: float | None = None) -> Branch:
    """Solution of j = 1 + 2 lam int_0^x e^{-frak} int_0^y e^{frak} j on ``[0, x_max]``.

    ``mass_bound`` is M (defaults to int |a| over the sampled ray).
    Raises :class:`ResolutionError` when exp(-omega_1 x_max) > 1e-5.
    """
    lam = _check_lam(lam)
    x = _edge_nodes(x)
    drift = ZeroDrift() if drift is None else drift
    frak = cumulative_exponent(drift, x)
    if mass_bound is None:
        mass_bound = _mass_bound(drift(x), x[1])
    om1 = lower_rate(lam, mass_bound)
    if om1 * x[-1] < 11.5:
        raise ResolutionError(
            f"horizon {x[-1]:.4g} too short: need omega_1 * x_max >= 11.5 (omega_1={om1:.4g})"
        )
    omega = contraction_weight(lam, mass_bound)
    j, jd, it, res = _volterra(lam, frak, x, 1.0, 0.0, omega)
    if np.any(j < np.cosh(np.minimum(om1 * x, 700.0)) * (1.0 - 1e-6)):
        raise NumericFailure("j violates its lower bound cosh(omega_1 x)")
    return Branch(j, jd, it, res)


def k_ell_from_j(lam: float, j: Branch, frak: np.ndarray, x) -> tuple:
    """k = j int_0^x e^{-frak}/j^2, ell = j int_x^inf e^{-frak}/j^2, w = ell(0).

    The integral beyond ``x_max`` is evaluated in closed form assuming
    the drift has died out there, so that j continues as
    j(X) cosh(kappa s) + j'(X)/kappa sinh(kappa s).

    Returns
    -------
    (k, k_deriv, ell, ell_deriv, w)
    """
    lam = _check_lam(lam)
    x = _edge_nodes(x)
    h = x[1] - x[0]
    kappa = math.sqrt(2.0 * lam)
    jv, jd = j.values, j.deriv
    ema = np.exp(-frak)
    q = ema / jv ** 2
    head = cumulative_integral(q, h)
    a_end, b_end = jv[-1], jd[-1] / kappa
    tail = ema[-1] / (kappa * a_end * (a_end + b_end))
    rest = tail_integral(q, h) + tail
    k = jv * head
    ell = jv * rest
    k_deriv = jd * head + ema / jv
    ell_deriv = jd * rest - ema / jv
    w = float(ell[0])
    return k, k_deriv, ell, ell_deriv, w


def solve_halfline(lam: float, drift, x_max: float | None = None, n: int | None = None,
                   mass_bound: float | None = None) -> HalfLineSolution:
    """j, k, ell and w on one ray of the infinite star graph.

    Parameters
    ----------
    lam : float
    drift : Drift
        Scaled edge drift.
    x_max : float, optional
        Sampling horizon; default 12 / min(omega_1, sqrt(2 lam)).
    n : int, optional
        Number of steps; default the coarsest with h <= eps / 20 and
        h <= 0.01.
    mass_bound : float, optional
        M used for omega_1; defaults to the drift's int |a|.
    """
    lam = _check_lam(lam)
    drift = ZeroDrift() if drift is None else drift
    if mass_bound is None:
        mass_bound = float(drift.abs_mass())
    if x_max is None:
        x_max = default_horizon(lam, mass_bound)
    if n is None:
        n = int(math.ceil(x_max / min(0.01, drift.eps / 20.0)))
    x = np.linspace(0.0, float(x_max), int(n) + 1)
    frak = cumulative_exponent(drift, x)
    jb = solve_j_halfline(lam, drift, x, mass_bound)
    k, kd, ell, ld, w = k_ell_from_j(lam, jb, frak, x)
    return HalfLineSolution(
        lam, x, frak, jb.values, jb.deriv, k, kd, ell, ld, w,
        lower_rate(lam, mass_bound), jb.iterations, jb.residual,
    )


# ---------------------------------------------------------------------------
# drift-free limits


@dataclass(frozen=True)
class LimitForms:
    """Closed-form limit eigenfunctions on an edge of length ``r``."""

    lam: float
    r: float
    alphas: np.ndarray

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * self.lam)

    @property
    def w(self) -> float:
        return math.cosh(self.kappa * self.r)

    def k(self, x, i: int | None = None):
        """sinh(kappa x)/kappa, times e^{-2 alpha_i} for edge ``i``."""
        base = np.sinh(self.kappa * np.asarray(x, dtype=float)) / self.kappa
        return base if i is None else math.exp(-2.0 * self.alphas[i]) * base

    def k_deriv(self, x, i: int | None = None):
        base = np.cosh(self.kappa * np.asarray(x, dtype=float))
        return base if i is None else math.exp(-2.0 * self.alphas[i]) * base

    def ell(self, x):
        return np.cosh(self.kappa * (self.r - np.asarray(x, dtype=float)))

    def ell_deriv(self, x):
        return -self.kappa * np.sinh(self.kappa * (self.r - np.asarray(x, dtype=float)))

    def w_i(self, i: int) -> float:
        return math.exp(-2.0 * self.alphas[i]) * self.w

    @staticmethod
    def kernel_v(y, z, gamma: float, alpha: float):
        """e^{-2 alpha} gamma [yz < 0] + [yz >= 0]."""
        y, z = np.asarray(y, dtype=float), np.asarray(z, dtype=float)
        return np.where(y * z < 0, math.exp(-2.0 * alpha) * gamma, 1.0)


def closed_form_limits(lam: float, r: float, alphas=(0.0,)) -> LimitForms:
    """Limit eigenfunctions k_i = e^{-2 alpha_i} sinh(kappa x)/kappa, ell, w."""
    lam = _check_lam(lam)
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    return LimitForms(lam, float(r), np.atleast_1d(np.asarray(alphas, dtype=float)))


def limit_k_interval(lam: float, r: float, gamma: float, n: int) -> IntervalFunction:
    """Drift-free increasing solution with transmission ratio ``gamma``.

    cosh(kappa (x + r)) on the left; on the right
    cosh(kappa r) cosh(kappa x) + gamma sinh(kappa r) sinh(kappa x).
    """
    lam = _check_lam(lam)
    kappa = math.sqrt(2.0 * lam)
    x_l, x_r = make_interval(r, n)
    left = np.cosh(kappa * (x_l + r))
    right = math.cosh(kappa * r) * np.cosh(kappa * x_r) + gamma * math.sinh(kappa * r) * np.sinh(kappa * x_r)
    return IntervalFunction(r, left, right)
