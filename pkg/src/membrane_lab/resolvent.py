"""Resolvents on the interval and on finite star graphs.

The minimal resolvent R0 belongs to the process killed at the center.
The full resolvent adds the vertex term

    R g = R0 g + (sum_i p_i C_i(g)) / (lam sum_i p_i C_i(1)) * L,

where ``C_i(g)`` is the center derivative of ``(R0 g)_i`` and
``L = 1 - lam R0 1`` is the exit law.  Operators built from solved
eigenfunctions and the closed-form limit operators share this assembly.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .drift import DriftFamily, LineDrift, NegatedDrift, ZeroDrift
from .errors import InvalidArgumentError, NumericFailure
from .grid import (
    EdgeFunctionVec,
    EdgeGrid,
    IntervalFunction,
    StarGraphSpec,
    cumulative_integral,
    exp_cumulative_integral,
    exp_tail_integral,
    make_grid,
    tail_integral,
)
from .sturm_liouville import SLSolution, solve_edge, solve_interval
from .transforms import check_weights, transform_skew, transform_walsh

KINDS = ("minimal", "full", "limit")


def _check_lam(lam) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidArgumentError(f"lambda must be a positive real, got {lam}")
    return lam


class ResolventOp:
    """Linear map g -> R g on sampled star-graph functions.

    Subclasses supply :meth:`minimal` (R0 g) and :meth:`c_functional`.
    """

    def __init__(self, lam: float, grid: EdgeGrid, kind: str, weights=None):
        if kind not in KINDS:
            raise InvalidArgumentError(f"kind must be one of {KINDS}")
        self.lam = _check_lam(lam)
        self.grid = grid
        self.kind = kind
        self.weights = None if weights is None else np.asarray(weights, dtype=float)

    # subclasses -------------------------------------------------------
    def _minimal_values(self, vals: np.ndarray, limit) -> np.ndarray:
        raise NotImplementedError

    def _c_values(self, vals: np.ndarray, limit) -> np.ndarray:
        raise NotImplementedError

    # shared -----------------------------------------------------------
    def _coerce(self, g) -> EdgeFunctionVec:
        if isinstance(g, EdgeFunctionVec):
            if not g.grid.matches(self.grid):
                raise InvalidArgumentError("function lives on a different grid")
            return g
        return EdgeFunctionVec(self.grid, g)

    def minimal(self, g) -> EdgeFunctionVec:
        """R0 g, vanishing at the center."""
        g = self._coerce(g)
        vals = self._minimal_values(g.values, g.limit)
        lim = None if g.limit is None else g.limit / self.lam
        return EdgeFunctionVec(self.grid, vals, limit=lim, check_center=False)

    def c_functional(self, g) -> np.ndarray:
        """C_i(g) for every edge."""
        g = self._coerce(g)
        return self._c_values(g.values, g.limit)

    @cached_property
    def _one(self) -> EdgeFunctionVec:
        return EdgeFunctionVec.constant(self.grid, 1.0)

    @cached_property
    def exit_law(self) -> EdgeFunctionVec:
        """L = 1 - lam R0 1."""
        return self._exit_law()

    def _exit_law(self) -> EdgeFunctionVec:
        r0 = self.minimal(self._one)
        vals = 1.0 - self.lam * r0.values
        lim = None if r0.limit is None else np.zeros(self.grid.k)
        return EdgeFunctionVec(self.grid, vals, limit=lim, check_center=False)

    @cached_property
    def c_one(self) -> np.ndarray:
        c1 = self.c_functional(self._one)
        if np.any(c1 <= 0):
            raise NumericFailure("C_i(1) must be positive")
        return c1

    def _vertex_weights(self) -> np.ndarray:
        return self.weights

    def vertex_coefficient(self, g) -> float:
        """(sum p_i C_i(g)) / (lam sum p_i C_i(1))."""
        p = self._vertex_weights()
        return float(p @ self.c_functional(g) / (self.lam * (p @ self.c_one)))

    def apply(self, g) -> EdgeFunctionVec:
        g = self._coerce(g)
        r0 = self.minimal(g)
        if self.kind == "minimal":
            return r0
        coef = self.vertex_coefficient(g)
        out = r0 + coef * self.exit_law
        return EdgeFunctionVec(self.grid, out.values, limit=out.limit, check_center=False)

    __call__ = apply

    def center_value(self, g) -> float:
        return self.apply(g).center

    def __repr__(self):
        return f"{type(self).__name__}(lam={self.lam:g}, kind={self.kind!r}, k={self.grid.k}, n={self.grid.n})"


class KernelResolvent(ResolventOp):
    """Operator assembled from solved eigenfunctions on each edge.

    (R0 g)_i(x) = 2 k_i(x) int_x^r ell_i g_i / w_i + 2 ell_i(x) int_0^x k_i g_i / w_i

    ``wronskian`` is pointwise.  On a truncated ray, ``tail_coef[i]`` is
    int_X^inf ell_i / w_i per unit limit value of ``g_i``.
    """

    def __init__(self, lam, grid, k, ell, wronskian, k_deriv=None, ell_deriv=None,
                 kind="minimal", weights=None, tail_coef=None):
        super().__init__(lam, grid, kind, weights)
        self.k = np.asarray(k, dtype=float)
        self.ell = np.asarray(ell, dtype=float)
        self.wronskian = np.asarray(wronskian, dtype=float)
        self.k_deriv = None if k_deriv is None else np.asarray(k_deriv, dtype=float)
        self.ell_deriv = None if ell_deriv is None else np.asarray(ell_deriv, dtype=float)
        shape = (grid.k, grid.n + 1)
        for name in ("k", "ell", "wronskian"):
            if getattr(self, name).shape != shape:
                raise InvalidArgumentError(f"{name} must have shape {shape}")
        if np.min(np.abs(self.wronskian)) < 1e-12:
            raise NumericFailure("Wronskian too small to divide by")
        self.tail_coef = np.zeros(grid.k) if tail_coef is None else np.asarray(tail_coef, dtype=float)
        self._lw = self.ell / self.wronskian
        self._kw = self.k / self.wronskian

    def _tails(self, vals, limit):
        h = self.grid.h
        tail = tail_integral(self._lw * vals, h)
        if limit is not None:
            tail = tail + (self.tail_coef * limit)[:, None]
        return tail

    def _minimal_values(self, vals, limit):
        h = self.grid.h
        head = cumulative_integral(self._kw * vals, h)
        return 2.0 * self.k * self._tails(vals, limit) + 2.0 * self.ell * head

    def _c_values(self, vals, limit):
        return 2.0 * self._tails(vals, limit)[:, 0]

    def derivative(self, g) -> np.ndarray:
        """Derivative of R g from the representation, shape (k, n + 1)."""
        if self.k_deriv is None or self.ell_deriv is None:
            raise InvalidArgumentError("derivatives of k and ell were not supplied")
        g = self._coerce(g)
        h = self.grid.h
        head = cumulative_integral(self._kw * g.values, h)
        d0 = 2.0 * self.k_deriv * self._tails(g.values, g.limit) + 2.0 * self.ell_deriv * head
        if self.kind == "minimal":
            return d0
        one = self._one
        head1 = cumulative_integral(self._kw * one.values, h)
        d1 = 2.0 * self.k_deriv * self._tails(one.values, one.limit) + 2.0 * self.ell_deriv * head1
        return d0 - self.vertex_coefficient(g) * self.lam * d1

    def with_weights(self, weights) -> "KernelResolvent":
        p = check_weights(weights)
        if p.size != self.grid.k:
            raise InvalidArgumentError("need one weight per edge")
        return KernelResolvent(
            self.lam, self.grid, self.k, self.ell, self.wronskian, self.k_deriv,
            self.ell_deriv, kind="full", weights=p, tail_coef=self.tail_coef,
        )


class LimitFiniteResolvent(ResolventOp):
    """Drift-free limit on a finite star graph, in overflow-free form.

    With kappa = sqrt(2 lam) the eigenfunctions are sinh(kappa x)/kappa and
    cosh(kappa (r - x)).  All exponentials are written with non-positive
    exponents so the operator is usable for any lam.

    ``weighting='tilde'`` uses the normalised weights p~ with the
    drift-free C_i; ``weighting='drift'`` uses the raw p_i with
    C_i scaled by e^{2 alpha_i}.  The two agree to rounding.
    """

    def __init__(self, lam, grid, alphas, weights, weighting="tilde"):
        if grid.spec.infinite:
            raise InvalidArgumentError("use LimitInfiniteResolvent on infinite graphs")
        p = check_weights(weights)
        alphas = np.asarray(alphas, dtype=float).reshape(-1)
        if p.size != grid.k or alphas.size != grid.k:
            raise InvalidArgumentError("need one weight and one alpha per edge")
        if weighting not in ("tilde", "drift"):
            raise InvalidArgumentError("weighting must be 'tilde' or 'drift'")
        self.alphas = alphas
        self.p = p
        self.weighting = weighting
        w = transform_walsh(p, alphas) if weighting == "tilde" else p
        super().__init__(lam, grid, "limit", w)
        self.kappa = math.sqrt(2.0 * self.lam)
        r = grid.spec.edge_length
        x = grid.x
        kr = self.kappa * r
        self._d = 1.0 + math.exp(-2.0 * kr)
        self._e_x = np.exp(-self.kappa * x)
        self._e_rx = np.exp(-self.kappa * (r - x))
        self._e_2rx = np.exp(-self.kappa * (2.0 * r - x))
        self._e_r = math.exp(-kr)

    def _passes(self, vals):
        h = self.grid.h
        P = exp_tail_integral(vals, h, self.kappa)
        F = exp_cumulative_integral(vals, h, self.kappa)
        Q = F[:, -1:] - self._e_rx * F
        return P, F, Q

    def _minimal_values(self, vals, limit):
        P, F, Q = self._passes(vals)
        G0 = P[:, :1] - self._e_x * P
        a = (1.0 - self._e_x ** 2) * (P + self._e_rx * Q)
        b = F * (1.0 + self._e_rx ** 2) - G0 * (self._e_x + self._e_2rx)
        return (a + b) / (self.kappa * self._d)

    def _c_values(self, vals, limit):
        P, F, Q = self._passes(vals)
        c = 2.0 / self._d * (P[:, 0] + self._e_r * Q[:, 0])
        if self.weighting == "drift":
            c = c * np.exp(2.0 * self.alphas)
        return c

    def _exit_law(self):
        vals = np.broadcast_to((self._e_x + self._e_2rx) / self._d, (self.grid.k, self.grid.n + 1))
        return EdgeFunctionVec(self.grid, vals, check_center=False)


# ---------------------------------------------------------------------------
# operations


def minimal_resolvent(lam: float, solutions, grid: EdgeGrid) -> KernelResolvent:
    """R0 from one :class:`SLSolution` per edge."""
    lam = _check_lam(lam)
    sols = list(solutions)
    if len(sols) != grid.k:
        raise InvalidArgumentError("need one solution per edge")
    for s in sols:
        if abs(s.lam - lam) > 1e-14 * lam:
            raise InvalidArgumentError(f"solution computed at lambda={s.lam}, expected {lam}")
        if s.x is None or s.x.size != grid.n + 1:
            raise InvalidArgumentError("solution grid does not match")
    return KernelResolvent(
        lam, grid,
        np.vstack([s.k for s in sols]), np.vstack([s.ell for s in sols]),
        np.vstack([s.wronskian for s in sols]),
        np.vstack([s.k_deriv for s in sols]), np.vstack([s.ell_deriv for s in sols]),
    )


def exit_law(lam: float, op: ResolventOp) -> EdgeFunctionVec:
    if abs(op.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    return op.exit_law


def c_functional(lam: float, op: ResolventOp, i: int, g) -> float:
    if abs(op.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    return float(op.c_functional(g)[i])


def full_resolvent(lam: float, op: KernelResolvent, weights) -> KernelResolvent:
    if abs(op.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    return op.with_weights(weights)


def limit_resolvent(lam: float, r: float, alphas, weights, n: int = 2000,
                    weighting: str = "tilde") -> LimitFiniteResolvent:
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    grid = make_grid(StarGraphSpec(alphas.size, r), n)
    return LimitFiniteResolvent(lam, grid, alphas, weights, weighting)


def finite_resolvent(lam: float, family: DriftFamily, weights, r: float = 1.0, n: int = 2000,
                     kind: str = "full") -> KernelResolvent:
    """Solve every edge and assemble the minimal or full resolvent."""
    grid = make_grid(StarGraphSpec(family.k, r), n)
    sols = [solve_edge(lam, d, grid.x) for d in family.drifts]
    op = minimal_resolvent(lam, sols, grid)
    return op if kind == "minimal" else op.with_weights(weights)


def green_kernel_interval(lam: float, sol: SLSolution, x: float, y: float) -> float:
    """2 k(min) ell(max) / w(y) from an interval solution.

    Values between nodes are linearly interpolated; ``y == 0`` uses the
    right-hand Wronskian.
    """
    if abs(sol.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    r = sol.k.r
    if not (-r <= x <= r and -r <= y <= r):
        raise InvalidArgumentError("points must lie in [-r, r]")

    def ev(f: IntervalFunction, z):
        if z < 0:
            return float(np.interp(z, f.x_left, f.left))
        return float(np.interp(z, f.x_right, f.right))

    w = ev(sol.wronskian, y)
    if x <= y:
        return 2.0 * ev(sol.k, x) * ev(sol.ell, y) / w
    return 2.0 * ev(sol.k, y) * ev(sol.ell, x) / w


def interval_resolvent_apply(sol: SLSolution, g: IntervalFunction) -> IntervalFunction:
    """R g(x) = 2 ell(x) int_{-r}^x k g / w + 2 k(x) int_x^r ell g / w."""
    k, ell, w = sol.k, sol.ell, sol.wronskian
    if g.n != k.n or g.r != k.r:
        raise InvalidArgumentError("grid mismatch")
    h = g.h
    head_l = cumulative_integral(k.left * g.left / w.left, h)
    head_r = head_l[-1] + cumulative_integral(k.right * g.right / w.right, h)
    tail_r = tail_integral(ell.right * g.right / w.right, h)
    tail_l = tail_r[0] + tail_integral(ell.left * g.left / w.left, h)
    left = 2.0 * ell.left * head_l + 2.0 * k.left * tail_l
    right = 2.0 * ell.right * head_r + 2.0 * k.right * tail_r
    return IntervalFunction(g.r, left, right)


class GraphData:
    """Two-edge description of an interval problem.

    Edge 0 is ``[0, r]`` (the right half-line) and edge 1 is the left
    half read outward, ``s = -x``, with drift ``s -> -a(-s)``.
    """

    def __init__(self, p: float, drift: LineDrift):
        self.p = float(p)
        self.drift = LineDrift() if drift is None else drift
        self.weights = check_weights([self.p, 1.0 - self.p])
        self.edge_drifts = (self.drift.positive, NegatedDrift(self.drift.negative))
        self.alphas = np.array([d.mass() for d in self.edge_drifts])

    @property
    def alpha(self) -> float:
        return float(self.alphas[0] - self.alphas[1])

    @property
    def gamma(self) -> float:
        return (1.0 - self.p) / self.p

    @property
    def p_tilde(self) -> float:
        return transform_skew(self.p, self.alpha).p

    def family(self) -> DriftFamily:
        bases = tuple(_unscale(d) for d in self.edge_drifts)
        return DriftFamily(bases, self.drift.eps)

    @staticmethod
    def to_edges(f: IntervalFunction, grid: EdgeGrid) -> EdgeFunctionVec:
        if grid.k != 2 or grid.n != f.n:
            raise InvalidArgumentError("grid must have two edges matching the interval")
        return EdgeFunctionVec(grid, np.vstack([f.right, f.left[::-1]]), check_center=False)

    @staticmethod
    def from_edges(g: EdgeFunctionVec) -> IntervalFunction:
        return IntervalFunction(g.grid.spec.edge_length, g.values[1, ::-1], g.values[0])


def _unscale(d):
    # ScaledDrift(base, eps) -> base; NegatedDrift(ScaledDrift) -> NegatedDrift(base)
    from .drift import ScaledDrift
    if isinstance(d, ScaledDrift):
        return d.base
    if isinstance(d, NegatedDrift):
        return NegatedDrift(_unscale(d.base))
    return d


def interval_adapter(p: float, drift: LineDrift) -> GraphData:
    """Map skew data ``(p, a)`` on the line to two-edge graph data."""
    return GraphData(p, drift)


def excursion_identity_check(lam: float, op: LimitFiniteResolvent, g) -> float:
    """|R g(center) - sum p~_i C(g_i) / (lam C(1))| with an independent C.

    C(g) = 2/cosh(kappa r) int_0^r cosh(kappa (r - y)) g(y) dy is evaluated
    with scipy's composite Simpson rule directly from the closed form.
    """
    from scipy.integrate import simpson

    if not isinstance(op, LimitFiniteResolvent) or op.weighting != "tilde":
        raise InvalidArgumentError("need a limit operator with p~ weights")
    if abs(op.lam - lam) > 1e-14 * lam:
        raise InvalidArgumentError("lambda mismatch")
    g = op._coerce(g)
    x = op.grid.x
    r = op.grid.spec.edge_length
    kappa = math.sqrt(2.0 * lam)
    ker = np.cosh(kappa * (r - x)) / math.cosh(kappa * r)
    c = 2.0 * simpson(ker * g.values, x=x, axis=-1)
    c1 = 2.0 * simpson(ker, x=x)
    rhs = float(op.weights @ c) / (lam * c1)
    return abs(op.center_value(g) - rhs)


# ---------------------------------------------------------------------------
# estimators


class _ResolventEstimator(TransformerMixin, BaseEstimator):
    """Common transform logic: apply the fitted operator to functions."""

    def transform(self, X):
        """Apply the resolvent.

        Parameters
        ----------
        X : EdgeFunctionVec or array_like of shape (k, n + 1) or (m, k, n + 1)

        Returns
        -------
        Same type as ``X``.
        """
        check_is_fitted(self, "op_")
        if isinstance(X, EdgeFunctionVec):
            return self.op_.apply(X)
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 2:
            return self.op_.apply(arr).values
        if arr.ndim == 3:
            return np.stack([self.op_.apply(a).values for a in arr])
        raise InvalidArgumentError("expected an array of shape (k, n+1) or (m, k, n+1)")

    def fit_transform(self, X, y=None):
        return self.fit().transform(X)

    @property
    def grid_(self) -> EdgeGrid:
        check_is_fitted(self, "op_")
        return self.op_.grid


class StarResolvent(_ResolventEstimator):
    """Resolvent of the drift-perturbed Walsh process on a finite star graph.

    Parameters
    ----------
    lam : float, default=1.0
        Spectral parameter.
    family : DriftFamily, optional
        Edge drifts with their scale; zero drift on ``k`` edges if None.
    weights : array_like, optional
        Vertex probabilities p_i; uniform if None.
    edge_length : float, default=1.0
    n : int, default=2000
        Steps per edge.  Must satisfy h <= eps / 20.
    kind : {'full', 'minimal'}, default='full'
    k : int, default=3
        Edge count used when ``family`` is None.

    Attributes
    ----------
    op_ : KernelResolvent
    solutions_ : list of SLSolution
    """

    def __init__(self, lam=1.0, family=None, weights=None, edge_length=1.0, n=2000, kind="full", k=3):
        self.lam = lam
        self.family = family
        self.weights = weights
        self.edge_length = edge_length
        self.n = n
        self.kind = kind
        self.k = k

    def fit(self, X=None, y=None):
        if self.kind not in ("full", "minimal"):
            raise InvalidArgumentError("kind must be 'full' or 'minimal'")
        fam = self.family if self.family is not None else DriftFamily.zero(self.k)
        w = np.full(fam.k, 1.0 / fam.k) if self.weights is None else self.weights
        grid = make_grid(StarGraphSpec(fam.k, self.edge_length), self.n)
        self.solutions_ = [solve_edge(self.lam, d, grid.x) for d in fam.drifts]
        op = minimal_resolvent(self.lam, self.solutions_, grid)
        self.op_ = op if self.kind == "minimal" else op.with_weights(w)
        return self


class LimitStarResolvent(_ResolventEstimator):
    """Closed-form limit resolvent on a finite star graph.

    Parameters
    ----------
    lam : float, default=1.0
    alphas : array_like, optional
        Drift masses per edge (zeros if None).
    weights : array_like, optional
        Raw vertex probabilities p_i; uniform if None.
    edge_length : float, default=1.0
    n : int, default=2000
    weighting : {'tilde', 'drift'}, default='tilde'
    k : int, default=3
    """

    def __init__(self, lam=1.0, alphas=None, weights=None, edge_length=1.0, n=2000, weighting="tilde", k=3):
        self.lam = lam
        self.alphas = alphas
        self.weights = weights
        self.edge_length = edge_length
        self.n = n
        self.weighting = weighting
        self.k = k

    def fit(self, X=None, y=None):
        alphas = np.zeros(self.k) if self.alphas is None else np.asarray(self.alphas, dtype=float)
        w = np.full(alphas.size, 1.0 / alphas.size) if self.weights is None else self.weights
        self.op_ = limit_resolvent(self.lam, self.edge_length, alphas, w, self.n, self.weighting)
        return self


class IntervalGreenResolvent(TransformerMixin, BaseEstimator):
    """Resolvent on ``[-r, r]`` from the Green kernel of the skew problem.

    Parameters
    ----------
    lam : float, default=1.0
    p : float, default=0.5
        Skewness; the transmission ratio is gamma = (1 - p)/p.
    drift : LineDrift, optional
        Already-scaled drift on the line.
    r : float, default=1.0
    n : int, default=2000
        Steps per half.

    Attributes
    ----------
    solution_ : SLSolution
    """

    def __init__(self, lam=1.0, p=0.5, drift=None, r=1.0, n=2000):
        self.lam = lam
        self.p = p
        self.drift = drift
        self.r = r
        self.n = n

    def fit(self, X=None, y=None):
        gamma = (1.0 - self.p) / self.p
        self.solution_ = solve_interval(self.lam, self.drift, gamma, self.r, self.n)
        return self

    def transform(self, X):
        check_is_fitted(self, "solution_")
        if not isinstance(X, IntervalFunction):
            raise InvalidArgumentError("expected an IntervalFunction")
        return interval_resolvent_apply(self.solution_, X)

    def kernel(self, x: float, y: float) -> float:
        check_is_fitted(self, "solution_")
        return green_kernel_interval(self.lam, self.solution_, x, y)
