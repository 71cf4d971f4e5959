"""Path simulation of drift-perturbed Walsh processes.

Each path follows an Euler scheme on its current edge,

    x <- x + a_eps(x) dt + sqrt(dt) xi,

with a step that grows away from the center, dt(x) = clamp((eta x)^2,
dt, dt_max), and a Brownian-bridge test for crossings of the center
inside a step.  On reaching the center the path picks edge ``i`` with
probability ``p_i`` and restarts at distance ``delta``.  Outer nodes of a
finite graph reflect by folding; on an infinite graph paths are absorbed
at a far truncation radius.

Random numbers are a pure function of (seed, path, counter), so the
statistics do not depend on the number of threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np
from numba import njit, prange
from scipy.stats import norm

from ._rng import normal_pair, path_key, seed_to_uint64, substream, uniform
from .drift import DriftFamily, LineDrift, ZeroDrift, scale_drift
from .errors import InvalidArgumentError
from .grid import EdgeFunctionVec, StarGraphSpec, cumulative_integral
from .transforms import check_weights

THREADS_ENV = "MEMBRANE_LAB_THREADS"


class StarGraphPoint(NamedTuple):
    edge: int
    x: float


class MCEstimate(NamedTuple):
    value: float
    stderr: float
    n_paths: int


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Parameters
    ----------
    spec : StarGraphSpec
    weights : sequence of float
        Vertex probabilities p_i.
    dt : float
        Smallest time step, used near the center.
    t : float
        Time horizon.
    n_paths : int
    seed : int, default=0
    family : DriftFamily, optional
        Edge drifts with their scale; zero if None.
    delta : float, optional
        Restart distance; default 3 sqrt(dt).  Must be >= sqrt(dt).
    eta : float, default=0.2
        Step growth: dt(x) = (eta x)^2 away from the center.
    dt_max : float, optional
        Largest step; default min(1e-2, (r / 20)^2) on finite graphs.
    vertex_correction : bool, default=False
        Reweight restarts by p_i / s_i(delta), s_i the edge scale
        function, which removes the O(delta) loss of drift mass.
    r_big : float, optional
        Absorption radius on infinite graphs.
    """

    spec: StarGraphSpec
    weights: tuple
    dt: float
    t: float
    n_paths: int
    seed: int = 0
    family: DriftFamily | None = None
    delta: float | None = None
    eta: float = 0.2
    dt_max: float | None = None
    vertex_correction: bool = False
    r_big: float | None = None

    def __post_init__(self):
        w = check_weights(self.weights)
        if w.size != self.spec.k:
            raise InvalidArgumentError("need one weight per edge")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidArgumentError("dt must be positive")
        if not self.t >= 0:
            raise InvalidArgumentError("t must be non-negative")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidArgumentError("n_paths must be a positive integer")
        if self.delta is None:
            object.__setattr__(self, "delta", 3.0 * math.sqrt(self.dt))
        if not self.delta >= math.sqrt(self.dt) * (1 - 1e-12):
            raise InvalidArgumentError("delta must be at least sqrt(dt)")
        if not self.eta > 0:
            raise InvalidArgumentError("eta must be positive")
        if self.family is not None:
            if self.family.k != self.spec.k:
                raise InvalidArgumentError("drift family and graph disagree on k")
            sup = self.family.sup_abs
            if sup > 0:
                bound = (self.family.eps / (10.0 * sup)) ** 2
                if self.dt > bound * (1 + 1e-9):
                    raise InvalidArgumentError(
                        f"dt={self.dt:.3g} violates dt <= (eps/(10 max|a|))^2 = {bound:.3g}"
                    )
        if self.dt_max is None:
            cap = 1e-2 if self.spec.infinite else min(1e-2, (self.spec.edge_length / 20.0) ** 2)
            object.__setattr__(self, "dt_max", max(cap, self.dt))
        if self.dt_max < self.dt:
            raise InvalidArgumentError("dt_max must be >= dt")

    @property
    def drift_family(self) -> DriftFamily:
        return self.family if self.family is not None else DriftFamily.zero(self.spec.k)


@dataclass(frozen=True)
class OccupationStats:
    """Edge occupation at the horizon.

    Attributes
    ----------
    frequencies : ndarray
        Fraction of paths on each edge (absorbed paths counted on their edge).
    stderr : ndarray
        Binomial standard errors.
    n_paths : int
    seed : int
    absorbed_fraction : float
    mean_distance : float
        Mean distance from the center.
    edges, positions : ndarray, optional
        Per-path final state when requested.
    """

    frequencies: np.ndarray
    stderr: np.ndarray
    n_paths: int
    seed: int
    absorbed_fraction: float = 0.0
    mean_distance: float = 0.0
    edges: np.ndarray | None = field(default=None, repr=False)
    positions: np.ndarray | None = field(default=None, repr=False)
    absorbed: np.ndarray | None = field(default=None, repr=False)


def set_threads_from_env() -> int:
    """Apply the thread cap from the environment (0 or unset means all)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    top = numba.config.NUMBA_NUM_THREADS
    n = top if n <= 0 else min(n, top)
    numba.set_num_threads(n)
    return n


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _table(tab, e, x, dx):
    pos = x / dx
    m = tab.shape[1]
    if pos >= m - 1:
        return 0.0
    i = int(pos)
    f = pos - i
    return tab[e, i] * (1.0 - f) + tab[e, i + 1] * f


@njit(cache=True, inline="always")
def _pick(cum, u):
    for i in range(cum.shape[0] - 1):
        if u < cum[i]:
            return i
    return cum.shape[0] - 1


@njit(parallel=True, cache=True)
def _walsh_kernel(n_paths, seed, edge0, x0, t_end, dt, dt_max, eta, delta,
                  r, finite, r_big, cum_w, tab, dx):
    edges = np.empty(n_paths, np.int64)
    pos = np.empty(n_paths)
    absorbed = np.zeros(n_paths, np.bool_)
    for pth in prange(n_paths):
        key = path_key(seed, pth)
        ukey = substream(key, 1)
        step = 0
        e = edge0
        x = x0
        if x <= 0.0:
            e = _pick(cum_w, uniform(ukey, 0))
            x = delta if t_end > 0.0 else 0.0
        z_next = 0.0
        t = 0.0
        while t_end - t > 1e-14 * t_end:
            dtl = (eta * x) * (eta * x)
            if dtl < dt:
                dtl = dt
            if dtl > dt_max:
                dtl = dt_max
            if dtl > t_end - t:
                dtl = t_end - t
            if step % 2 == 0:
                z, z_next = normal_pair(key, step // 2)
            else:
                z = z_next
            step += 1
            a = _table(tab, e, x, dx)
            xn = x + a * dtl + np.sqrt(dtl) * z
            hit = xn <= 0.0
            if not hit:
                expo = 2.0 * x * xn / dtl
                if expo < 40.0 and uniform(ukey, 2 * step) < np.exp(-expo):
                    hit = True
            if hit:
                e = _pick(cum_w, uniform(ukey, 2 * step + 1))
                x = delta
            elif finite:
                while xn > r or xn < 0.0:
                    if xn > r:
                        xn = 2.0 * r - xn
                    else:
                        xn = -xn
                x = xn
            else:
                if xn >= r_big:
                    absorbed[pth] = True
                    x = r_big
                    break
                x = xn
            t += dtl
        edges[pth] = e
        pos[pth] = x
    return edges, pos, absorbed


@njit(parallel=True, cache=True)
def _line_exit_kernel(n_paths, seed, x0, t_end, dt, dt_max, eta, level, tab, dx):
    # tab[0]: drift on x < 0 as a function of |x|; tab[1]: drift on x >= 0
    hit = np.zeros(n_paths, np.bool_)
    for pth in prange(n_paths):
        key = path_key(seed, pth)
        ukey = substream(key, 1)
        step = 0
        z_next = 0.0
        x = x0
        t = 0.0
        while t_end - t > 1e-14 * t_end:
            ax = abs(x)
            dtl = (eta * ax) * (eta * ax)
            gap = level - ax
            g2 = (eta * gap) * (eta * gap)
            if g2 < dtl:
                dtl = g2
            if dtl < dt:
                dtl = dt
            if dtl > dt_max:
                dtl = dt_max
            if dtl > t_end - t:
                dtl = t_end - t
            if x < 0.0:
                a = _table(tab, 0, ax, dx)
            else:
                a = _table(tab, 1, ax, dx)
            if step % 2 == 0:
                z, z_next = normal_pair(key, step // 2)
            else:
                z = z_next
            step += 1
            xn = x + a * dtl + np.sqrt(dtl) * z
            if abs(xn) >= level:
                hit[pth] = True
                break
            # bridge test for both barriers
            e_up = 2.0 * (level - x) * (level - xn) / dtl
            e_dn = 2.0 * (level + x) * (level + xn) / dtl
            pc = 0.0
            if e_up < 40.0:
                pc += np.exp(-e_up)
            if e_dn < 40.0:
                pc += np.exp(-e_dn)
            if pc > 0.0 and uniform(ukey, step) < pc:
                hit[pth] = True
                break
            x = xn
            t += dtl
    return hit


# ---------------------------------------------------------------------------
# public operations


def _drift_table(drifts, dx_target: float, length: float):
    if length <= 0:
        return np.zeros((len(drifts), 2)), 1.0
    m = int(math.ceil(length / dx_target)) + 1
    xs = np.linspace(0.0, length, m)
    tab = np.vstack([np.asarray(d(xs), dtype=float) for d in drifts])
    return tab, xs[1] - xs[0]


def _scale_at(drift, delta: float) -> float:
    """s(delta) = int_0^delta exp(-2 int_0^y a)."""
    x = np.linspace(0.0, delta, 401)
    frak = 2.0 * cumulative_integral(drift(x), x[1])
    return float(cumulative_integral(np.exp(-frak), x[1])[-1])


def restart_weights(config: SimConfig) -> np.ndarray:
    """Edge probabilities used at each restart."""
    p = np.asarray(config.weights)
    if not config.vertex_correction or config.family is None:
        return p
    s = np.array([_scale_at(d, config.delta) for d in config.family.drifts])
    q = p / s
    return q / q.sum()


def default_r_big(config: SimConfig, x0: float) -> float:
    """Radius that a path from x0 exceeds before t with probability < 1e-4."""
    M = config.drift_family.mass_bound
    tail = 1e-4 * math.exp(-2.0 * M) / 2.0
    return x0 + math.sqrt(max(config.t, 1e-300)) * float(norm.isf(tail)) + config.drift_family.tail_length()


def simulate_paths(config: SimConfig, x0: StarGraphPoint | tuple = (0, 0.0),
                   keep_paths: bool = False) -> OccupationStats:
    """Simulate ``config.n_paths`` paths to time ``config.t``.

    Parameters
    ----------
    config : SimConfig
    x0 : StarGraphPoint
        Start ``(edge, distance)``; distance 0 starts at the center.
    keep_paths : bool, default=False
        Keep the per-path final edges and positions.

    Returns
    -------
    OccupationStats
    """
    edge0, pos0 = int(x0[0]), float(x0[1])
    spec = config.spec
    if not 0 <= edge0 < spec.k:
        raise InvalidArgumentError("start edge out of range")
    if pos0 < 0 or (not spec.infinite and pos0 > spec.edge_length):
        raise InvalidArgumentError("start position outside the edge")
    fam = config.drift_family
    drifts = fam.drifts
    if fam.is_zero:
        tab, dx = np.zeros((spec.k, 2)), 1.0
    else:
        length = fam.tail_length()
        if not spec.infinite:
            length = min(length, spec.edge_length)
        dx_target = min(fam.eps * min(b.decay_scale for b in fam.bases if not isinstance(b, ZeroDrift)) / 50.0,
                        math.sqrt(config.dt))
        tab, dx = _drift_table(drifts, dx_target, length)
    cum = np.cumsum(restart_weights(config))
    cum[-1] = 1.0
    r = spec.edge_length if not spec.infinite else math.inf
    r_big = config.r_big if config.r_big is not None else (default_r_big(config, pos0) if spec.infinite else math.inf)
    set_threads_from_env()
    edges, pos, absorbed = _walsh_kernel(
        int(config.n_paths), np.uint64(seed_to_uint64(config.seed)), edge0, pos0, float(config.t),
        float(config.dt), float(config.dt_max), float(config.eta), float(config.delta),
        float(r), not spec.infinite, float(r_big), cum, tab, float(dx),
    )
    counts = np.bincount(edges, minlength=spec.k)
    n = config.n_paths
    freq = counts / n
    se = np.sqrt(freq * (1.0 - freq) / n)
    return OccupationStats(
        freq, se, n, int(config.seed), float(np.mean(absorbed)), float(np.mean(pos)),
        edges if keep_paths else None, pos if keep_paths else None,
        absorbed if keep_paths else None,
    )


def exact_walsh_sample(p_tilde, t: float, n_paths: int, seed: int = 0,
                       keep_paths: bool = False) -> OccupationStats:
    """Exact position at time ``t`` of a Walsh process started at the center.

    The edge is drawn from ``p_tilde`` and the distance is |N(0, t)|.
    """
    p = check_weights(p_tilde)
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if n_paths < 1:
        raise InvalidArgumentError("n_paths must be positive")
    rng = np.random.default_rng(seed_to_uint64(seed))
    edges = rng.choice(p.size, size=n_paths, p=p)
    pos = np.abs(rng.standard_normal(n_paths)) * math.sqrt(t)
    freq = np.bincount(edges, minlength=p.size) / n_paths
    se = np.sqrt(freq * (1.0 - freq) / n_paths)
    return OccupationStats(
        freq, se, int(n_paths), int(seed), 0.0, float(np.mean(pos)),
        edges if keep_paths else None, pos if keep_paths else None,
    )


def estimate_exit_prob(drift, eps: float, rho: float, r: float, t: float, n_paths: int,
                       seed: int = 0, x0: float = 0.0, dt: float | None = None) -> MCEstimate:
    """P_x0(sup_{s <= t} |Z_s| >= r) for the line diffusion with drift a_eps.

    Parameters
    ----------
    drift : LineDrift or Drift or None
        Unscaled drift; an edge drift is used on both sides as ``a(|x|)``
        on the right and ``-a(|x|)`` on the left.
    eps : float
    rho : float
        Bound on the start, ``|x0| <= rho < r``.
    r : float
    t : float
    n_paths : int
    seed : int
    x0 : float, default=0
    dt : float, optional
        Smallest step, default (eps/(10 max|a|))^2 capped at 1e-4.
    """
    if not abs(x0) <= rho < r:
        raise InvalidArgumentError("need |x0| <= rho < r")
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if t == 0:
        return MCEstimate(0.0, 0.0, int(n_paths))
    if drift is None:
        line = LineDrift()
    elif isinstance(drift, LineDrift):
        line = drift
    else:
        line = LineDrift(drift.negated(), drift)
    scaled = scale_drift(line, eps)
    sup = line.sup_abs
    if dt is None:
        dt = 1e-4 if sup == 0 else min(1e-4, (eps / (10.0 * sup)) ** 2)
    if sup == 0:
        tab, dx = np.zeros((2, 2)), 1.0
    else:
        length = min(30.0 * eps * line.decay_scale, r)
        tab, dx = _drift_table([scaled.negative, scaled.positive], min(eps * 0.02, math.sqrt(dt)), length)
    set_threads_from_env()
    hit = _line_exit_kernel(
        int(n_paths), np.uint64(seed_to_uint64(seed)), float(x0), float(t), float(dt),
        min(1e-2, (r / 20.0) ** 2), 0.2, float(r), tab, float(dx),
    )
    p = float(np.mean(hit))
    return MCEstimate(p, math.sqrt(max(p * (1 - p), 1.0 / n_paths) / n_paths), int(n_paths))


def evaluate_at(f: EdgeFunctionVec, edges: np.ndarray, positions: np.ndarray,
                absorbed: np.ndarray | None = None) -> np.ndarray:
    """Values of ``f`` at per-path states (linear interpolation)."""
    x = f.grid.x
    out = np.empty(positions.shape)
    for i in range(f.grid.k):
        sel = edges == i
        out[sel] = np.interp(positions[sel], x, f.values[i])
        if f.limit is not None:
            beyond = sel & (positions > x[-1])
            out[beyond] = f.limit[i]
    if absorbed is not None and f.limit is not None:
        out[absorbed] = f.limit[edges[absorbed]]
    return out


def estimate_semigroup(f: EdgeFunctionVec, config: SimConfig,
                       x0: StarGraphPoint | tuple = (0, 0.0)) -> MCEstimate:
    """Monte Carlo E_x0 f(X_t) with its standard error."""
    stats = simulate_paths(config, x0, keep_paths=True)
    vals = evaluate_at(f, stats.edges, stats.positions, stats.absorbed)
    n = vals.size
    return MCEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0, n)
