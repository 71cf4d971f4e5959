"""Resolvents on the infinite star graph.

Functions on a ray are samples on ``[0, x_max]`` plus a limit at
infinity.  Beyond ``x_max`` the drift is taken to have died out and the
function to equal its limit, so every tail integral has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drift import DriftFamily
from .errors import InvalidArgumentError, ResolutionError
from .grid import (
    EdgeFunctionVec,
    EdgeGrid,
    StarGraphSpec,
    exp_cumulative_integral,
    exp_tail_integral,
    make_grid,
)
from .resolvent import KernelResolvent, ResolventOp, _ResolventEstimator, _check_lam
from .sturm_liouville import HalfLineSolution, default_horizon, solve_halfline
from .transforms import check_weights, transform_walsh


@dataclass(frozen=True)
class HalfLineResolventData:
    """Per-ray solutions on a common grid.

    Attributes
    ----------
    lam : float
    grid : EdgeGrid
    solutions : tuple of HalfLineSolution
    alphas : ndarray
    weights : ndarray or None
    """

    lam: float
    grid: EdgeGrid
    solutions: tuple
    alphas: np.ndarray
    weights: np.ndarray | None = None

    @property
    def j(self):
        return np.vstack([s.j for s in self.solutions])

    @property
    def k(self):
        return np.vstack([s.k for s in self.solutions])

    @property
    def ell(self):
        return np.vstack([s.ell for s in self.solutions])

    @property
    def w(self):
        return np.array([s.w for s in self.solutions])


def infinite_grid(k: int, x_max: float, n: int) -> EdgeGrid:
    return make_grid(StarGraphSpec(k, math.inf, x_max), n)


def halfline_data(lam: float, family: DriftFamily, weights=None, x_max: float | None = None,
                  n: int | None = None) -> HalfLineResolventData:
    """Solve j, k, ell on every ray of a common grid.

    ``x_max`` defaults to 12 / min(omega_1, sqrt(2 lam)) with M taken from
    the family; ``n`` defaults to the coarsest grid with h <= eps/20 and
    h <= 0.01.
    """
    lam = _check_lam(lam)
    M = family.mass_bound
    if x_max is None:
        x_max = default_horizon(lam, M)
    if x_max < family.tail_length():
        raise ResolutionError(f"x_max={x_max:.4g} does not contain the drift support")
    if n is None:
        n = int(math.ceil(x_max / min(0.01, family.eps / 20.0)))
    grid = infinite_grid(family.k, x_max, n)
    sols = tuple(solve_halfline(lam, d, x_max, n, mass_bound=M) for d in family.drifts)
    p = None if weights is None else check_weights(weights)
    return HalfLineResolventData(lam, grid, sols, family.alpha, p)


def minimal_resolvent_inf(lam: float, data: HalfLineResolventData) -> KernelResolvent:
    """R0 on the infinite graph.

    The pointwise Wronskian is w e^{-frak}; the tail coefficient
    int_X^inf ell e^{frak} / w equals ell(X) e^{frak(X)} / (kappa w).
    """
    lam = _check_lam(lam)
    if abs(data.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    kappa = math.sqrt(2.0 * lam)
    sols = data.solutions
    x_max = data.grid.spec.horizon
    for s in sols:
        if s.omega1 * x_max < 11.5:
            raise ResolutionError("horizon too small for the requested tolerance")
    wron = np.vstack([s.w * np.exp(-s.frak) for s in sols])
    tail = np.array([s.ell[-1] * math.exp(s.frak[-1]) / (kappa * s.w) for s in sols])
    return KernelResolvent(
        lam, data.grid,
        np.vstack([s.k for s in sols]), np.vstack([s.ell for s in sols]), wron,
        np.vstack([s.k_deriv for s in sols]), np.vstack([s.ell_deriv for s in sols]),
        tail_coef=tail,
    )


def full_resolvent_inf(lam: float, data: HalfLineResolventData, weights=None) -> KernelResolvent:
    w = data.weights if weights is None else weights
    if w is None:
        raise InvalidArgumentError("weights required")
    return minimal_resolvent_inf(lam, data).with_weights(w)


class LimitInfiniteResolvent(ResolventOp):
    """Closed-form limit on the infinite star graph.

    (R0 g)(x) = (1/kappa) int_0^inf (e^{-kappa|x-y|} - e^{-kappa(x+y)}) g(y) dy,
    C_i(g) = 2 int_0^inf e^{-kappa y} g_i(y) dy, L = e^{-kappa x},
    vertex weights proportional to p_i e^{2 alpha_i}.
    """

    def __init__(self, lam, grid, alphas, weights):
        if not grid.spec.infinite:
            raise InvalidArgumentError("grid must be infinite")
        p = check_weights(weights)
        alphas = np.asarray(alphas, dtype=float).reshape(-1)
        if p.size != grid.k or alphas.size != grid.k:
            raise InvalidArgumentError("need one weight and one alpha per edge")
        self.alphas = alphas
        self.p = p
        super().__init__(lam, grid, "limit", transform_walsh(p, alphas))
        self.kappa = math.sqrt(2.0 * self.lam)
        self._e_x = np.exp(-self.kappa * grid.x)
        self._e_xr = np.exp(-self.kappa * (grid.spec.horizon - grid.x))

    def _p_inf(self, vals, limit):
        P = exp_tail_integral(vals, self.grid.h, self.kappa)
        return P + self._e_xr * (limit / self.kappa)[:, None]

    def _minimal_values(self, vals, limit):
        F = exp_cumulative_integral(vals, self.grid.h, self.kappa)
        P = self._p_inf(vals, limit)
        return (F + P - self._e_x * P[:, :1]) / self.kappa

    def _c_values(self, vals, limit):
        return 2.0 * self._p_inf(vals, limit)[:, 0]

    def _exit_law(self):
        vals = np.broadcast_to(self._e_x, (self.grid.k, self.grid.n + 1))
        return EdgeFunctionVec(self.grid, vals, limit=np.zeros(self.grid.k), check_center=False)


def limit_resolvent_inf(lam: float, alphas, weights, x_max: float = 12.0, n: int = 2400,
                        grid: EdgeGrid | None = None) -> LimitInfiniteResolvent:
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if grid is None:
        grid = infinite_grid(alphas.size, x_max, n)
    return LimitInfiniteResolvent(lam, grid, alphas, weights)


class InfiniteStarResolvent(_ResolventEstimator):
    """Resolvent of the drift-perturbed Walsh process on the infinite star graph.

    Parameters
    ----------
    lam : float, default=1.0
    family : DriftFamily, optional
        Edge drifts; zero drift on ``k`` rays if None.
    weights : array_like, optional
        Vertex probabilities; uniform if None.
    x_max : float, optional
        Sampling horizon.
    n : int, optional
        Steps per ray.
    kind : {'full', 'minimal'}, default='full'
    k : int, default=3

    Attributes
    ----------
    op_ : KernelResolvent
    data_ : HalfLineResolventData
    """

    def __init__(self, lam=1.0, family=None, weights=None, x_max=None, n=None, kind="full", k=3):
        self.lam = lam
        self.family = family
        self.weights = weights
        self.x_max = x_max
        self.n = n
        self.kind = kind
        self.k = k

    def fit(self, X=None, y=None):
        if self.kind not in ("full", "minimal"):
            raise InvalidArgumentError("kind must be 'full' or 'minimal'")
        fam = self.family if self.family is not None else DriftFamily.zero(self.k)
        w = np.full(fam.k, 1.0 / fam.k) if self.weights is None else self.weights
        self.data_ = halfline_data(self.lam, fam, w, self.x_max, self.n)
        op = minimal_resolvent_inf(self.lam, self.data_)
        self.op_ = op if self.kind == "minimal" else op.with_weights(w)
        return self


class LimitInfiniteStarResolvent(_ResolventEstimator):
    """Closed-form limit resolvent on the infinite star graph.

    Parameters
    ----------
    lam : float, default=1.0
    alphas : array_like, optional
    weights : array_like, optional
    x_max : float, default=12.0
    n : int, default=2400
    k : int, default=3
    """

    def __init__(self, lam=1.0, alphas=None, weights=None, x_max=12.0, n=2400, k=3):
        self.lam = lam
        self.alphas = alphas
        self.weights = weights
        self.x_max = x_max
        self.n = n
        self.k = k

    def fit(self, X=None, y=None):
        alphas = np.zeros(self.k) if self.alphas is None else np.asarray(self.alphas, dtype=float)
        w = np.full(alphas.size, 1.0 / alphas.size) if self.weights is None else self.weights
        self.op_ = limit_resolvent_inf(self.lam, alphas, w, self.x_max, self.n)
        return self
