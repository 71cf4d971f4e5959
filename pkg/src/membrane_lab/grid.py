"""Star-graph geometry, sampled functions, quadrature and norms.

Every function in the package lives on a uniform grid: either the ``k``
edges of a star graph, parameterised by the distance ``x`` from the
center, or the interval ``[-r, r]`` stored as two halves that share a
doubled node at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammainc

from .errors import InvalidArgumentError

INFINITE = math.inf

__all__ = [
    "INFINITE",
    "StarGraphSpec",
    "EdgeGrid",
    "EdgeFunctionVec",
    "IntervalFunction",
    "make_grid",
    "make_interval",
    "cumulative_integral",
    "tail_integral",
    "exp_cumulative_integral",
    "exp_tail_integral",
    "bielecki_norm",
    "sup_distance",
    "one_sided_derivative",
]


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class StarGraphSpec:
    """Star graph with ``k`` edges of length ``edge_length``.

    An infinite graph uses ``edge_length=INFINITE`` and samples each ray
    on ``[0, x_max]``.
    """

    k: int
    edge_length: float = 1.0
    x_max: float | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError(f"edge count must be an integer >= 1, got {self.k}")
        r = float(self.edge_length)
        if math.isinf(r):
            if self.x_max is None or not self.x_max > 0 or math.isinf(self.x_max):
                raise InvalidArgumentError("infinite graph needs a finite x_max > 0")
        elif not r > 0:
            raise InvalidArgumentError(f"edge length must be positive, got {r}")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.edge_length)

    @property
    def horizon(self) -> float:
        """Right end of the sampled edge: ``r`` or ``x_max``."""
        return float(self.x_max) if self.infinite else float(self.edge_length)


@dataclass(frozen=True, eq=False)
class EdgeGrid:
    """Uniform grid shared by all edges of a star graph."""

    spec: StarGraphSpec
    n: int

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(0.0, self.spec.horizon, self.n + 1)
        x.flags.writeable = False
        return x

    @property
    def h(self) -> float:
        return self.spec.horizon / self.n

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def points(self) -> tuple[np.ndarray, ...]:
        return (self.x,) * self.spec.k

    def matches(self, other: "EdgeGrid") -> bool:
        return (
            self is other
            or (self.n == other.n and self.spec == other.spec)
        )


def make_grid(spec: StarGraphSpec, n: int) -> EdgeGrid:
    """Equispaced grid with ``n`` subintervals on every edge."""
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"need n >= 2 subintervals, got {n}")
    return EdgeGrid(spec, int(n))


# ---------------------------------------------------------------------------
# sampled functions


class EdgeFunctionVec:
    """Real function on a star graph, sampled edge by edge.

    Parameters
    ----------
    grid : EdgeGrid
    values : array_like of shape (k, n + 1)
        ``values[i, j]`` is the value on edge ``i`` at ``grid.x[j]``.
    limit : array_like of shape (k,), optional
        Limits at infinity, used on infinite graphs.  Defaults to the
        last sample on every edge.
    check_center : bool, default=True
        Require the center values to agree across edges.
    """

    __slots__ = ("grid", "values", "limit")

    def __init__(self, grid: EdgeGrid, values, limit=None, check_center: bool = True):
        vals = np.array(values, dtype=float)
        if vals.ndim == 1:
            vals = np.broadcast_to(vals, (grid.k, vals.size)).copy()
        if vals.shape != (grid.k, grid.n + 1):
            raise InvalidArgumentError(
                f"values must have shape {(grid.k, grid.n + 1)}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("values must be finite")
        if check_center and grid.k > 1:
            scale = 1.0 + np.max(np.abs(vals[:, 0]))
            if np.ptp(vals[:, 0]) > 1e-9 * scale:
                raise InvalidArgumentError("center values differ between edges")
        if grid.spec.infinite:
            lim = vals[:, -1].copy() if limit is None else np.array(limit, dtype=float).reshape(grid.k)
        else:
            lim = None
        vals.flags.writeable = False
        if lim is not None:
            lim.flags.writeable = False
        self.grid = grid
        self.values = vals
        self.limit = lim

    @classmethod
    def from_callable(cls, grid: EdgeGrid, funcs, limit=None, check_center: bool = True):
        """Sample ``funcs`` (one callable, or one per edge) on ``grid``."""
        if callable(funcs):
            funcs = [funcs] * grid.k
        if len(funcs) != grid.k:
            raise InvalidArgumentError("need one callable per edge")
        vals = np.vstack([np.broadcast_to(np.asarray(f(grid.x), dtype=float), grid.x.shape) for f in funcs])
        return cls(grid, vals, limit=limit, check_center=check_center)

    @classmethod
    def constant(cls, grid: EdgeGrid, c: float = 1.0):
        return cls(grid, np.full((grid.k, grid.n + 1), float(c)), limit=np.full(grid.k, float(c)) if grid.spec.infinite else None)

    @property
    def center(self) -> float:
        return float(self.values[0, 0])

    def sup(self) -> float:
        m = float(np.max(np.abs(self.values)))
        if self.limit is not None:
            m = max(m, float(np.max(np.abs(self.limit))))
        return m

    def _combine(self, other, op):
        if isinstance(other, EdgeFunctionVec):
            if not self.grid.matches(other.grid):
                raise InvalidArgumentError("grid mismatch")
            vals = op(self.values, other.values)
            lim = None if self.limit is None else op(self.limit, other.limit)
        else:
            vals = op(self.values, float(other))
            lim = None if self.limit is None else op(self.limit, float(other))
        return EdgeFunctionVec(self.grid, vals, limit=lim, check_center=False)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"EdgeFunctionVec(k={self.grid.k}, n={self.grid.n}, sup={self.sup():.6g})"


class IntervalFunction:
    """Function on ``[-r, r]`` with a doubled node at 0.

    ``left`` holds samples on ``linspace(-r, 0, n + 1)`` (last entry is
    the value at ``0-``) and ``right`` on ``linspace(0, r, n + 1)``.
    """

    __slots__ = ("r", "left", "right")

    def __init__(self, r: float, left, right):
        left = np.array(left, dtype=float)
        right = np.array(right, dtype=float)
        if left.shape != right.shape or left.ndim != 1 or left.size < 3:
            raise InvalidArgumentError("left and right halves need equal length >= 3")
        left.flags.writeable = False
        right.flags.writeable = False
        self.r = float(r)
        self.left = left
        self.right = right

    @classmethod
    def from_callable(cls, r: float, n: int, f: Callable, f_left: Callable | None = None):
        x_l, x_r = _interval_nodes(float(r), int(n))
        fl = f if f_left is None else f_left
        return cls(r, np.broadcast_to(fl(x_l), x_l.shape), np.broadcast_to(f(x_r), x_r.shape))

    @property
    def n(self) -> int:
        return self.left.size - 1

    @property
    def h(self) -> float:
        return self.r / self.n

    @property
    def x_left(self) -> np.ndarray:
        return _interval_nodes(self.r, self.n)[0]

    @property
    def x_right(self) -> np.ndarray:
        return _interval_nodes(self.r, self.n)[1]

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x_left, self.x_right])

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.left, self.right])

    @property
    def jump(self) -> float:
        return float(self.right[0] - self.left[-1])

    def sup(self) -> float:
        return float(max(np.max(np.abs(self.left)), np.max(np.abs(self.right))))

    def _combine(self, other, op):
        if isinstance(other, IntervalFunction):
            if other.n != self.n or other.r != self.r:
                raise InvalidArgumentError("grid mismatch")
            return IntervalFunction(self.r, op(self.left, other.left), op(self.right, other.right))
        return IntervalFunction(self.r, op(self.left, float(other)), op(self.right, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"IntervalFunction(r={self.r}, n={self.n}, sup={self.sup():.6g})"


@lru_cache(maxsize=64)
def _interval_nodes(r: float, n: int):
    x_l = np.linspace(-r, 0.0, n + 1)
    x_r = np.linspace(0.0, r, n + 1)
    x_l.flags.writeable = False
    x_r.flags.writeable = False
    return x_l, x_r


def make_interval(r: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Left and right node arrays for ``[-r, r]`` with ``n`` steps per side."""
    if not r > 0:
        raise InvalidArgumentError(f"r must be positive, got {r}")
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"need n >= 2 subintervals, got {n}")
    return _interval_nodes(float(r), int(n))


# ---------------------------------------------------------------------------
# quadrature
#
# Cumulative integrals are built panel by panel from the cubic through
# four neighbouring nodes (three when n == 2).  The optional exponential
# weight e^{-rate (x_{j+1} - y)} is integrated exactly against that cubic,
# so kernels such as e^{-kappa |x - y|} stay accurate for any kappa*h.


def _moments(c: float, q_max: int) -> np.ndarray:
    """m_q = int_0^1 exp(-c v) v^q dv for q = 0..q_max."""
    q = np.arange(q_max + 1, dtype=float)
    if c < 1e-3:
        l = np.arange(14, dtype=float)
        terms = (-c) ** l / np.cumprod(np.concatenate([[1.0], l[1:]]))
        return np.array([np.sum(terms / (qq + l + 1.0)) for qq in q])
    fact = np.array([math.factorial(int(qq)) for qq in q])
    return gammainc(q + 1.0, c) * fact / c ** (q + 1.0)


@lru_cache(maxsize=512)
def _panel_weights(offsets: tuple, c: float) -> np.ndarray:
    # nodes at u = offsets (units of h, panel is [0, 1]); weight exp(-c (1-u))
    v = 1.0 - np.asarray(offsets, dtype=float)
    vander = np.vander(v, len(v), increasing=True)
    w = np.linalg.solve(vander.T, _moments(c, len(v) - 1))
    w.flags.writeable = False
    return w


def _panel_integrals(f: np.ndarray, c: float) -> np.ndarray:
    """Integrals over each panel, in units of h, along the last axis."""
    n = f.shape[-1] - 1
    out = np.empty(f.shape[:-1] + (n,))
    if n == 1:
        w = _panel_weights((0.0, 1.0), c)
        out[..., 0] = w[0] * f[..., 0] + w[1] * f[..., 1]
        return out
    if n == 2:
        w0 = _panel_weights((0.0, 1.0, 2.0), c)
        w1 = _panel_weights((-1.0, 0.0, 1.0), c)
        out[..., 0] = f[..., 0:3] @ w0
        out[..., 1] = f[..., 0:3] @ w1
        return out
    wf = _panel_weights((0.0, 1.0, 2.0, 3.0), c)
    wi = _panel_weights((-1.0, 0.0, 1.0, 2.0), c)
    wl = _panel_weights((-2.0, -1.0, 0.0, 1.0), c)
    out[..., 0] = f[..., 0:4] @ wf
    out[..., n - 1] = f[..., n - 3:n + 1] @ wl
    if n > 2:
        out[..., 1:n - 1] = (
            wi[0] * f[..., 0:n - 2]
            + wi[1] * f[..., 1:n - 1]
            + wi[2] * f[..., 2:n]
            + wi[3] * f[..., 3:n + 1]
        )
    return out


def exp_cumulative_integral(values, h: float, rate: float = 0.0) -> np.ndarray:
    """F(x_j) = int_0^{x_j} exp(-rate (x_j - y)) f(y) dy along the last axis.

    Parameters
    ----------
    values : array_like
        Samples of ``f`` on a uniform grid (last axis).
    h : float
        Grid step.
    rate : float, default=0
        Non-negative decay rate of the weight.

    Returns
    -------
    ndarray
        Same shape as ``values`` with ``F[..., 0] == 0``.
    """
    f = np.asarray(values, dtype=float)
    if f.shape[-1] < 2:
        raise InvalidArgumentError("need at least two samples")
    if rate < 0:
        raise InvalidArgumentError("rate must be non-negative")
    c = float(rate) * float(h)
    panels = h * _panel_integrals(f, c)
    F = np.zeros(f.shape)
    if c == 0.0:
        F[..., 1:] = np.cumsum(panels, axis=-1)
    else:
        F[..., 1:] = lfilter([1.0], [1.0, -math.exp(-c)], panels, axis=-1)
    return F


def exp_tail_integral(values, h: float, rate: float = 0.0) -> np.ndarray:
    """P(x_j) = int_{x_j}^{x_n} exp(-rate (y - x_j)) f(y) dy along the last axis."""
    f = np.asarray(values, dtype=float)
    return exp_cumulative_integral(f[..., ::-1], h, rate)[..., ::-1]


def cumulative_integral(values, h: float) -> np.ndarray:
    """F(x_j) = int_0^{x_j} f with F(0) = 0; exact for cubics when n >= 2.

    Examples
    --------
    >>> x = np.linspace(0, 1, 11)
    >>> float(cumulative_integral(x, 0.1)[-1])
    0.5
    """
    return exp_cumulative_integral(values, h, 0.0)


def tail_integral(values, h: float) -> np.ndarray:
    """P(x_j) = int_{x_j}^{x_n} f, accumulated from the right end.

    Summing from the far end keeps relative accuracy when the integrand
    decays, where ``F[-1] - F`` would cancel.
    """
    return exp_tail_integral(values, h, 0.0)


# ---------------------------------------------------------------------------
# norms and derivatives


def bielecki_norm(f, omega: float, x=None) -> float:
    """max exp(-omega (x - x_0)) |f(x)| over the grid nodes.

    ``f`` is an :class:`IntervalFunction` (weight measured from ``-r``)
    or an array sampled at ``x`` (weight measured from ``x[0]``).
    """
    if not omega > 0:
        raise InvalidArgumentError("omega must be positive")
    if isinstance(f, IntervalFunction):
        vals, x = f.values, f.x + f.r
    else:
        vals = np.asarray(f, dtype=float)
        if x is None:
            raise InvalidArgumentError("abscissae required for array input")
        x = np.asarray(x, dtype=float) - x[0]
    weighted = np.exp(-omega * x) * np.abs(vals)
    return float(np.max(weighted)) if weighted.size else 0.0


def sup_distance(f, g) -> float:
    """Largest nodewise absolute difference, limits at infinity included."""
    if isinstance(f, EdgeFunctionVec) and isinstance(g, EdgeFunctionVec):
        if not f.grid.matches(g.grid):
            raise InvalidArgumentError("grid mismatch")
        return (f - g).sup()
    if isinstance(f, IntervalFunction) and isinstance(g, IntervalFunction):
        return (f - g).sup()
    raise InvalidArgumentError("arguments must be two EdgeFunctionVec or two IntervalFunction")


def _stencil(vals: np.ndarray, i: int, h: float, side: str) -> np.ndarray:
    n = vals.shape[-1] - 1
    if side == "+":
        if i + 2 > n:
            raise InvalidArgumentError("need two nodes to the right for a '+' stencil")
        return (-3.0 * vals[..., i] + 4.0 * vals[..., i + 1] - vals[..., i + 2]) / (2.0 * h)
    if side == "-":
        if i - 2 < 0:
            raise InvalidArgumentError("need two nodes to the left for a '-' stencil")
        return (3.0 * vals[..., i] - 4.0 * vals[..., i - 1] + vals[..., i - 2]) / (2.0 * h)
    raise InvalidArgumentError(f"side must be '+' or '-', got {side!r}")


def one_sided_derivative(f, at: float = 0.0, side: str = "+", h: float | None = None):
    """Second-order one-sided difference that never straddles the center.

    Parameters
    ----------
    f : IntervalFunction, EdgeFunctionVec or 1-D array
        Sampled function.  Arrays are taken to start at ``x = 0`` with
        step ``h``.
    at : float
        Node coordinate.  On an interval, ``at=0`` with ``side='+'``
        uses the right half and ``side='-'`` the left half.
    side : {'+', '-'}

    Returns
    -------
    float or ndarray
        A scalar, or one value per edge for an ``EdgeFunctionVec``.
    """
    if isinstance(f, IntervalFunction):
        h = f.h
        if at > 0 or (at == 0 and side == "+"):
            i = int(round(at / h))
            return float(_stencil(f.right, i, h, side))
        i = f.n + int(round(at / h))
        return float(_stencil(f.left, i, h, side))
    if isinstance(f, EdgeFunctionVec):
        h = f.grid.h
        i = int(round(at / h))
        return _stencil(f.values, i, h, side)
    if h is None:
        raise InvalidArgumentError("step h required for array input")
    vals = np.asarray(f, dtype=float)
    return float(_stencil(vals, int(round(at / h)), h, side))
