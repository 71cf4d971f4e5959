"""Drift families a_eps(x) = a(x / eps) / eps and their integrals.

Edge drifts are functions of the distance ``x >= 0`` from the center.
A drift on the whole line is a :class:`LineDrift`: its negative half is
stored as a function of ``|x|`` so that ``a(0-)`` and ``a(0+)`` are both
available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, ResolutionError
from .grid import cumulative_integral

# h <= eps / RESOLUTION on every grid that samples a scaled drift
RESOLUTION = 20.0


class Drift:
    """Base class for edge drifts on ``[0, inf)``."""

    #: intrinsic length of the concentration zone, used for horizons and grids
    eps: float = 1.0

    def __call__(self, x):
        raise NotImplementedError

    @property
    def decay_scale(self) -> float:
        """Length after which the drift is negligible (per unit e-fold)."""
        return 1.0

    @property
    def sup_abs(self) -> float:
        """sup |a| of the unscaled profile."""
        raise NotImplementedError

    def mass(self, horizon: float | None = None) -> float:
        """int_0^inf a, numerically unless a closed form is known."""
        return alpha_of(self, horizon)

    def abs_mass(self, horizon: float | None = None) -> float:
        """int_0^inf |a|."""
        return alpha_of(_Abs(self), horizon)

    def scaled(self, eps: float) -> "Drift":
        _check_eps(eps)
        return self if eps == 1.0 else ScaledDrift(self, float(eps))

    def negated(self) -> "Drift":
        return NegatedDrift(self)


@dataclass(frozen=True)
class ZeroDrift(Drift):
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def sup_abs(self):
        return 0.0

    def mass(self, horizon=None):
        return 0.0

    def abs_mass(self, horizon=None):
        return 0.0

    def scaled(self, eps):
        _check_eps(eps)
        return self


@dataclass(frozen=True)
class ExpDecay(Drift):
    """a(x) = alpha * rate * exp(-rate x); integrates to ``alpha``."""

    alpha: float
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidArgumentError("rate must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * self.rate * np.exp(-self.rate * x)

    @property
    def decay_scale(self):
        return 1.0 / self.rate

    @property
    def sup_abs(self):
        return abs(self.alpha) * self.rate

    def mass(self, horizon=None):
        return float(self.alpha)

    def abs_mass(self, horizon=None):
        return abs(float(self.alpha))


@dataclass(frozen=True, eq=False)
class TabulatedDrift(Drift):
    """Linear interpolation of samples ``(x, a)``; zero beyond the table."""

    x: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if x.ndim != 1 or x.shape != a.shape or x.size < 2:
            raise InvalidArgumentError("table needs matching 1-D x and a with >= 2 entries")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise InvalidArgumentError("table abscissae must start at 0 and increase")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.x, self.a, right=0.0)

    @property
    def decay_scale(self):
        return float(self.x[-1]) / 40.0

    @property
    def sup_abs(self):
        return float(np.max(np.abs(self.a)))

    def mass(self, horizon=None):
        return float(np.trapezoid(self.a, self.x))

    def abs_mass(self, horizon=None):
        return float(np.trapezoid(np.abs(self.a), self.x))


@dataclass(frozen=True)
class ScaledDrift(Drift):
    """x -> base(x / eps) / eps."""

    base: Drift
    eps: float = 1.0

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) / self.eps) / self.eps

    @property
    def decay_scale(self):
        return self.eps * self.base.decay_scale

    @property
    def sup_abs(self):
        return self.base.sup_abs

    def mass(self, horizon=None):
        return self.base.mass(None if horizon is None else horizon / self.eps)

    def abs_mass(self, horizon=None):
        return self.base.abs_mass(None if horizon is None else horizon / self.eps)

    def scaled(self, eps):
        _check_eps(eps)
        return ScaledDrift(self.base, self.eps * eps)


@dataclass(frozen=True)
class NegatedDrift(Drift):
    base: Drift

    def __call__(self, x):
        return -self.base(x)

    @property
    def eps(self):
        return self.base.eps

    @property
    def decay_scale(self):
        return self.base.decay_scale

    @property
    def sup_abs(self):
        return self.base.sup_abs

    def mass(self, horizon=None):
        return -self.base.mass(horizon)

    def abs_mass(self, horizon=None):
        return self.base.abs_mass(horizon)

    def scaled(self, eps):
        return NegatedDrift(self.base.scaled(eps))

    def negated(self):
        return self.base


@dataclass(frozen=True)
class _Abs(Drift):
    base: Drift

    def __call__(self, x):
        return np.abs(self.base(x))

    @property
    def eps(self):
        return self.base.eps

    @property
    def decay_scale(self):
        return self.base.decay_scale


@dataclass(frozen=True)
class LineDrift:
    """Drift on the real line.

    Parameters
    ----------
    negative : Drift
        ``d -> a(-d)`` for ``d >= 0``, so ``negative(0)`` is ``a(0-)``.
    positive : Drift
        ``x -> a(x)`` for ``x >= 0``, so ``positive(0)`` is ``a(0+)``.
    """

    negative: Drift = field(default_factory=ZeroDrift)
    positive: Drift = field(default_factory=ZeroDrift)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.negative(np.abs(x)), self.positive(np.abs(x)))

    def left_values(self, x_left):
        """Samples on nodes ``<= 0``; the node 0 gets ``a(0-)``."""
        return self.negative(-np.asarray(x_left, dtype=float))

    def right_values(self, x_right):
        return self.positive(np.asarray(x_right, dtype=float))

    @property
    def eps(self):
        return min(self.negative.eps, self.positive.eps)

    @property
    def decay_scale(self):
        return max(self.negative.decay_scale, self.positive.decay_scale)

    @property
    def sup_abs(self):
        return max(self.negative.sup_abs, self.positive.sup_abs)

    def scaled(self, eps):
        return LineDrift(self.negative.scaled(eps), self.positive.scaled(eps))

    def reflected(self) -> "LineDrift":
        """x -> -a(-x)."""
        return LineDrift(self.positive.negated(), self.negative.negated())

    def mass(self, horizon=None) -> float:
        return self.negative.mass(horizon) + self.positive.mass(horizon)

    def abs_mass(self, horizon=None) -> float:
        return self.negative.abs_mass(horizon) + self.positive.abs_mass(horizon)


def fig1_drift() -> LineDrift:
    """a(x) = exp(x/2) for x < 0 and exp(-5x) for x >= 0."""
    return LineDrift(negative=ExpDecay(2.0, 0.5), positive=ExpDecay(0.2, 5.0))


# ---------------------------------------------------------------------------
# operations


def _check_eps(eps):
    if not (isinstance(eps, (int, float, np.floating)) and eps > 0 and math.isfinite(eps)):
        raise InvalidArgumentError(f"eps must be a positive real, got {eps!r}")


def scale_drift(a, eps: float):
    """Return ``x -> a(x / eps) / eps``.

    Works for edge drifts and for :class:`LineDrift`.
    """
    _check_eps(eps)
    if isinstance(a, (Drift, LineDrift)):
        return a.scaled(float(eps))
    if callable(a):
        return lambda x: a(np.asarray(x, dtype=float) / eps) / eps
    raise InvalidArgumentError("drift must be callable")


def _quad_points(length: float, scale: float) -> int:
    n = int(math.ceil(1000.0 * length / max(scale, 1e-300)))
    return max(4000, min(n, 4_000_000))


def alpha_of(a, horizon: float | None = None) -> float:
    """Numerical mass ``int a`` over ``[0, horizon]`` or ``[-horizon, horizon]``.

    The default horizon is 40 decay scales.  The grid is fine enough
    that the cubic rule is accurate to about 1e-12 for exponential
    profiles.
    """
    scale = getattr(a, "decay_scale", 1.0)
    if horizon is None:
        horizon = 40.0 * scale
    if not horizon > 0:
        raise InvalidArgumentError("horizon must be positive")
    if isinstance(a, LineDrift):
        return alpha_of(a.negative, horizon) + alpha_of(a.positive, horizon)
    n = _quad_points(horizon, scale)
    x = np.linspace(0.0, horizon, n + 1)
    return float(cumulative_integral(np.asarray(a(x), dtype=float), x[1])[-1])


def window_integral(a, y: float, z: float) -> float:
    """int_y^z a on a fine grid (``a`` may be an edge or a line drift)."""
    if not y < z:
        raise InvalidArgumentError(f"need y < z, got [{y}, {z}]")
    scale = getattr(a, "decay_scale", 1.0)
    eps = getattr(a, "eps", 1.0)
    n = _quad_points(z - y, min(scale, eps))
    if isinstance(a, LineDrift) and y < 0 < z:
        return window_integral(a, y, 0.0) + window_integral(a, 0.0, z)
    x = np.linspace(y, z, n + 1)
    if isinstance(a, LineDrift):
        vals = a.left_values(x) if z <= 0 else a.right_values(x)
    else:
        vals = a(x)
    return float(cumulative_integral(vals, x[1] - x[0])[-1])


def check_resolution(h: float, eps: float) -> None:
    """Raise :class:`ResolutionError` unless ``h <= eps / 20``."""
    if h > eps / RESOLUTION * (1.0 + 1e-9):
        raise ResolutionError(
            f"grid step {h:.4g} too coarse for eps={eps:.4g}; need h <= {eps / RESOLUTION:.4g}"
        )


def cumulative_exponent(a, x, check: bool = True) -> np.ndarray:
    """2 int_0^x a on the uniform nodes ``x`` (which start at 0)."""
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    if check:
        check_resolution(h, getattr(a, "eps", 1.0))
    return 2.0 * cumulative_integral(a(x), h)


@dataclass(frozen=True)
class DriftFamily:
    """Per-edge base drifts together with a scale ``eps``.

    Attributes
    ----------
    bases : tuple of Drift
        Unscaled edge drifts ``a_i``.
    eps : float
        Scale; the edges carry ``a_i(x / eps) / eps``.
    """

    bases: tuple
    eps: float = 1.0

    def __post_init__(self):
        _check_eps(self.eps)
        if len(self.bases) < 1:
            raise InvalidArgumentError("need at least one edge drift")
        object.__setattr__(self, "bases", tuple(self.bases))

    @classmethod
    def zero(cls, k: int, eps: float = 1.0):
        return cls(tuple(ZeroDrift() for _ in range(k)), eps)

    @property
    def k(self) -> int:
        return len(self.bases)

    @property
    def drifts(self) -> tuple:
        return tuple(scale_drift(b, self.eps) for b in self.bases)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([b.mass() for b in self.bases])

    @property
    def mass_bound(self) -> float:
        return float(max(b.abs_mass() for b in self.bases))

    @property
    def sup_abs(self) -> float:
        return float(max(b.sup_abs for b in self.bases))

    @property
    def is_zero(self) -> bool:
        return all(isinstance(b, ZeroDrift) for b in self.bases)

    def with_eps(self, eps: float) -> "DriftFamily":
        return DriftFamily(self.bases, eps)

    def tail_length(self) -> float:
        """Distance beyond which every scaled drift is below ~1e-13 relative."""
        scales = [self.eps * b.decay_scale for b in self.bases if not isinstance(b, ZeroDrift)]
        return 30.0 * max(scales, default=0.0)
