"""Membrane parameters and their drift-induced limits.

A skew parameter has four equivalent forms: the probability ``p``, the
ratio ``gamma = (1-p)/p``, ``c = 2p - 1`` and ``beta = -ln(gamma)/2``,
with ``c = tanh(beta)``.  A drift of total mass ``alpha`` concentrating
at the membrane maps ``beta`` to ``beta + alpha``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from .errors import InvalidArgumentError

P_CLAMP = 1e-12


def _check_p(p) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise InvalidArgumentError(f"p must lie in the open interval (0, 1), got {p}")
    if p < P_CLAMP or p > 1.0 - P_CLAMP:
        warnings.warn(f"p={p} clamped to [{P_CLAMP}, 1-{P_CLAMP}]", RuntimeWarning, stacklevel=3)
        p = min(max(p, P_CLAMP), 1.0 - P_CLAMP)
    return p


@dataclass(frozen=True)
class SkewParams:
    """Skew parameter in its four representations."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))

    @property
    def gamma(self) -> float:
        return (1.0 - self.p) / self.p

    @property
    def c(self) -> float:
        return 2.0 * self.p - 1.0

    @property
    def beta(self) -> float:
        # -ln(gamma)/2 written through log1p for accuracy near p = 1/2
        return 0.5 * (math.log(self.p) - math.log1p(-self.p))

    @classmethod
    def from_gamma(cls, gamma: float) -> "SkewParams":
        if not gamma > 0:
            raise InvalidArgumentError("gamma must be positive")
        return cls(1.0 / (1.0 + gamma))

    @classmethod
    def from_c(cls, c: float) -> "SkewParams":
        if not -1.0 < c < 1.0:
            raise InvalidArgumentError("c must lie in (-1, 1)")
        return cls(0.5 * (1.0 + c))

    @classmethod
    def from_beta(cls, beta: float) -> "SkewParams":
        return cls(float(expit(2.0 * beta)))

    def as_dict(self) -> dict:
        return {"p": self.p, "gamma": self.gamma, "c": self.c, "beta": self.beta}


def transform_skew(p, alpha: float) -> SkewParams:
    """Limit skew parameter after a drift of mass ``alpha``.

    p~ = p / (p + (1 - p) exp(-2 alpha)), so that gamma~ = exp(-2 alpha) gamma
    and c~ = tanh(alpha + beta).

    Parameters
    ----------
    p : float or SkewParams
        Skewness in (0, 1).
    alpha : float
        Total drift mass.

    Returns
    -------
    SkewParams

    Examples
    --------
    >>> round(transform_skew(0.5, 1.0).p, 6)
    0.880797
    """
    sp = p if isinstance(p, SkewParams) else SkewParams(p)
    # logistic form is the numerically stable evaluation of p / (p + (1-p)e^{-2a})
    return SkewParams(float(expit(2.0 * (sp.beta + float(alpha)))))


def transform_walsh(p, alpha) -> np.ndarray:
    """Vertex weights p~_i = p_i exp(2 alpha_i) / sum_j p_j exp(2 alpha_j)."""
    p = check_weights(p)
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape != p.shape:
        raise InvalidArgumentError("p and alpha must have the same length")
    return softmax(np.log(p) + 2.0 * alpha)


def check_weights(p, tol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector and renormalise it exactly."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size < 1 or not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise InvalidArgumentError("weights must be positive")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidArgumentError(f"weights must sum to 1, got {p.sum()!r}")
    return p / p.sum()


def roundtrip_reps(sp: SkewParams) -> SkewParams:
    """Convert p -> gamma -> c -> beta -> p."""
    g = SkewParams.from_gamma(sp.gamma)
    c = SkewParams.from_c(g.c)
    return SkewParams.from_beta(c.beta)


def skew_from_walsh(p_pair, alpha_pair) -> tuple[float, float]:
    """Two-edge weights as a skew pair ``(p, alpha)`` with ``alpha = alpha_1 - alpha_2``."""
    p = check_weights(p_pair)
    a = np.asarray(alpha_pair, dtype=float)
    if p.size != 2 or a.size != 2:
        raise InvalidArgumentError("need two edges")
    return float(p[0]), float(a[0] - a[1])
