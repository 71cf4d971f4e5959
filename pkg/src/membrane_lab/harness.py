"""Convergence sweeps, semigroup evaluation and report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .drift import DriftFamily, ExpDecay, LineDrift, ZeroDrift
from .errors import InvalidArgumentError, NumericFailure
from .grid import EdgeFunctionVec, EdgeGrid, IntervalFunction, StarGraphSpec, make_grid, sup_distance
from .montecarlo import THREADS_ENV
from .resolvent import (
    GraphData,
    LimitFiniteResolvent,
    finite_resolvent,
    interval_resolvent_apply,
    limit_resolvent,
)
from .resolvent_infinite import (
    LimitInfiniteResolvent,
    full_resolvent_inf,
    halfline_data,
    infinite_grid,
    minimal_resolvent_inf,
)
from .sturm_liouville import default_horizon, limit_k_interval, solve_halfline, solve_interval, solve_k_interval
from .transforms import transform_skew

SCENARIOS = ("interval", "finite", "infinite")
PANEL = ("one", "x", "x2", "cos", "bump")


# ---------------------------------------------------------------------------
# test functions


def panel_function(name: str, grid: EdgeGrid) -> EdgeFunctionVec:
    """One member of the test panel on ``grid``.

    Finite edges use x/r, (x/r)^2, cos(pi x/r) and a bump on edge 0.
    Rays use x/(1+x), its square, e^{-x} cos(pi x) and x^2 e^{-x} on edge 0,
    each with its limit at infinity.
    """
    k = grid.k
    x = grid.x
    if grid.spec.infinite:
        u = x / (1.0 + x)
        table = {
            "one": (np.ones_like(x), 1.0),
            "x": (u, 1.0),
            "x2": (u * u, 1.0),
            "cos": (np.exp(-x) * np.cos(np.pi * x), 0.0),
        }
        if name == "bump":
            vals = np.zeros((k, x.size))
            vals[0] = x * x * np.exp(-x)
            return EdgeFunctionVec(grid, vals, limit=np.zeros(k))
        if name not in table:
            raise InvalidArgumentError(f"unknown panel function {name!r}")
        v, lim = table[name]
        return EdgeFunctionVec(grid, np.tile(v, (k, 1)), limit=np.full(k, lim))
    r = grid.spec.edge_length
    s = x / r
    table = {"one": np.ones_like(x), "x": s, "x2": s * s, "cos": np.cos(np.pi * s)}
    if name == "bump":
        vals = np.zeros((k, x.size))
        vals[0] = 16.0 * s * s * (1.0 - s) ** 2
        return EdgeFunctionVec(grid, vals)
    if name not in table:
        raise InvalidArgumentError(f"unknown panel function {name!r}")
    return EdgeFunctionVec(grid, np.tile(table[name], (k, 1)))


# ---------------------------------------------------------------------------
# sweep specification and report


@dataclass(frozen=True)
class SweepSpec:
    """Parameters of an eps ladder eps_m = eps0 * factor^m, m = 0..steps-1.

    Attributes
    ----------
    lambdas : tuple of float
    eps0 : float
    factor : float
    steps : int
    panel : tuple of str
    bases : tuple of Drift
        Unscaled edge drifts (finite and infinite scenarios).
    line : LineDrift
        Unscaled drift on the line (interval scenario).
    weights : tuple of float
        Vertex weights; the interval uses (p, 1 - p).
    r : float
        Edge length / half-interval length.
    n_min : int
        Minimum steps per edge; finer grids follow h <= eps/20.
    x_max : float, optional
        Ray horizon for the infinite scenario.
    """

    lambdas: tuple = (0.5, 1.0, 2.0)
    eps0: float = 0.2
    factor: float = 0.5
    steps: int = 5
    panel: tuple = PANEL
    bases: tuple = (ExpDecay(0.5, 1.0), ZeroDrift(), ExpDecay(-0.25, 1.0))
    line: LineDrift = field(default_factory=lambda: LineDrift(ExpDecay(0.25, 1.0), ExpDecay(0.5, 1.0)))
    weights: tuple = (0.2, 0.3, 0.5)
    r: float = 1.0
    n_min: int = 1000
    x_max: float | None = None

    def __post_init__(self):
        if not (0 < self.factor < 1):
            raise InvalidArgumentError("factor must lie in (0, 1)")
        if self.steps < 2:
            raise InvalidArgumentError("need at least two ladder steps")
        if not self.eps0 > 0:
            raise InvalidArgumentError("eps0 must be positive")
        for lam in self.lambdas:
            if not lam > 0:
                raise InvalidArgumentError("lambdas must be positive")
        for g in self.panel:
            if g not in PANEL:
                raise InvalidArgumentError(f"unknown panel function {g!r}")

    @property
    def ladder(self) -> np.ndarray:
        return self.eps0 * self.factor ** np.arange(self.steps)

    def grid_steps(self, eps: float, length: float) -> int:
        """Coarsest n with h <= eps/20, at least ``n_min``."""
        return max(self.n_min, int(math.ceil(20.0 * length / eps - 1e-9)))


@dataclass
class ConvergenceReport:
    """Errors per (lam, g, eps) with the derived pass/fail flags."""

    scenario: str
    rows: list = field(default_factory=list)
    panel_rows: list = field(default_factory=list)
    tolerance: float = 0.01
    noise_floor: float = 1e-6

    def add(self, lam, g, eps, n, error, norm):
        self.rows.append({"lam": lam, "g": g, "eps": eps, "n": n, "error": error, "norm": norm})

    def finalize(self):
        self.panel_rows = []
        for lam in sorted({r["lam"] for r in self.rows}):
            sub = [r for r in self.rows if r["lam"] == lam]
            eps_vals = sorted({r["eps"] for r in sub}, reverse=True)
            prev = None
            for eps in eps_vals:
                cell = [r for r in sub if r["eps"] == eps]
                err = max(r["error"] / max(r["norm"], 1e-300) for r in cell)
                order = math.log2(prev / err) if prev is not None and err > 0 else math.nan
                self.panel_rows.append({"lam": lam, "eps": eps, "n": cell[0]["n"], "error": err, "order": order})
                prev = err
        for r in self.rows:
            same = sorted((q for q in self.rows if q["lam"] == r["lam"] and q["g"] == r["g"]), key=lambda q: -q["eps"])
            i = same.index(r)
            prev = same[i - 1]["error"] if i > 0 else None
            r["order"] = math.log2(prev / r["error"]) if prev and r["error"] > 0 else math.nan
        return self

    def errors(self, lam) -> np.ndarray:
        return np.array([r["error"] for r in self.panel_rows if r["lam"] == lam])

    def monotone(self, lam) -> bool:
        """Strictly decreasing, or flat at quadrature noise (all <= noise_floor)."""
        e = self.errors(lam)
        return bool(np.all(np.diff(e) < 0) or np.all(e <= self.noise_floor))

    def final_ok(self, lam) -> bool:
        return bool(self.errors(lam)[-1] <= self.tolerance)

    @property
    def passed(self) -> bool:
        lams = sorted({r["lam"] for r in self.panel_rows})
        return all(self.monotone(l) and self.final_ok(l) for l in lams)


def _scenario_cell(spec: SweepSpec, scenario: str, lam: float, eps: float):
    """Errors of every panel function at one (lam, eps)."""
    out = []
    if scenario == "interval":
        gd = GraphData(spec.weights[0], spec.line.scaled(eps))
        n = spec.grid_steps(eps, spec.r)
        grid = make_grid(StarGraphSpec(2, spec.r), n)
        sol = solve_interval(lam, gd.drift, gd.gamma, spec.r, n)
        lim = LimitFiniteResolvent(lam, grid, gd.alphas, gd.weights)
        for name in spec.panel:
            g = panel_function(name, grid)
            f_eps = GraphData.to_edges(interval_resolvent_apply(sol, GraphData.from_edges(g)), grid)
            out.append((name, n, sup_distance(f_eps, lim(g)), g.sup()))
        return out
    fam = DriftFamily(spec.bases, eps)
    if scenario == "finite":
        n = spec.grid_steps(eps, spec.r)
        op = finite_resolvent(lam, fam, spec.weights, spec.r, n)
        lim = LimitFiniteResolvent(lam, op.grid, fam.alpha, spec.weights)
    elif scenario == "infinite":
        x_max = spec.x_max if spec.x_max is not None else default_horizon(lam, fam.mass_bound)
        n = max(spec.grid_steps(eps, x_max), int(math.ceil(x_max / 0.01)))
        data = halfline_data(lam, fam, spec.weights, x_max, n)
        op = full_resolvent_inf(lam, data)
        lim = LimitInfiniteResolvent(lam, op.grid, fam.alpha, spec.weights)
    else:
        raise InvalidArgumentError(f"scenario must be one of {SCENARIOS}")
    for name in spec.panel:
        g = panel_function(name, op.grid)
        out.append((name, n, sup_distance(op(g), lim(g)), g.sup()))
    return out


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    n = int(raw)
    return os.cpu_count() or 1 if n <= 0 else n


def run_convergence(spec: SweepSpec, scenario: str, tolerance: float = 0.01) -> ConvergenceReport:
    """Sweep the eps ladder and compare against the limit resolvent.

    Returns a :class:`ConvergenceReport`; ``report.passed`` requires the
    panel sup-errors to decrease strictly along the ladder for every
    lambda and to end below ``tolerance`` (relative to ||g||).
    """
    if scenario not in SCENARIOS:
        raise InvalidArgumentError(f"scenario must be one of {SCENARIOS}")
    cells = [(lam, float(eps)) for lam in spec.lambdas for eps in spec.ladder]
    with ThreadPoolExecutor(max_workers=max(1, min(_workers(), len(cells)))) as pool:
        results = list(pool.map(lambda c: _scenario_cell(spec, scenario, *c), cells))
    report = ConvergenceReport(scenario, tolerance=tolerance)
    for (lam, eps), res in zip(cells, results):
        for name, n, err, nrm in res:
            report.add(float(lam), name, eps, n, err, nrm)
    return report.finalize()


# ---------------------------------------------------------------------------
# eigenfunction limits on rays


def lemma_sweep(lam: float, bases, eps_ladder, compact: float = 2.0, x_max: float | None = None,
                panel: Sequence[str] = PANEL, weights=None) -> dict:
    """Errors of j, k, ell/w and R0 against their drift-free limits.

    Returns a dict with keys 'j', 'k', 'ell_w', 'r0', each an array over
    the ladder.  'j' and 'k' are sup-errors on ``[0, compact]``, the
    others on the whole sampled ray.
    """
    fam0 = DriftFamily(tuple(bases), float(eps_ladder[0]))
    M = fam0.mass_bound
    kappa = math.sqrt(2.0 * lam)
    if x_max is None:
        x_max = default_horizon(lam, M)
    alphas = fam0.alpha
    out = {"j": [], "k": [], "ell_w": [], "r0": []}
    w = np.full(fam0.k, 1.0 / fam0.k) if weights is None else weights
    for eps in eps_ladder:
        fam = fam0.with_eps(float(eps))
        n = max(int(math.ceil(20.0 * x_max / eps - 1e-9)), int(math.ceil(x_max / 0.01)))
        data = halfline_data(lam, fam, w, x_max, n)
        x = data.grid.x
        near = x <= compact
        ej = ek = el = 0.0
        for i, s in enumerate(data.solutions):
            ej = max(ej, float(np.max(np.abs(s.j[near] - np.cosh(kappa * x[near])))))
            k_lim = math.exp(-2.0 * alphas[i]) * np.sinh(kappa * x[near]) / kappa
            ek = max(ek, float(np.max(np.abs(s.k[near] - k_lim))))
            el = max(el, float(np.max(np.abs(s.ell / s.w - np.exp(-kappa * x)))))
        op = minimal_resolvent_inf(lam, data)
        lim = LimitInfiniteResolvent(lam, data.grid, alphas, w)
        er = max(sup_distance(op.minimal(g), lim.minimal(g)) / g.sup()
                 for g in (panel_function(nm, data.grid) for nm in panel))
        out["j"].append(ej)
        out["k"].append(ek)
        out["ell_w"].append(el)
        out["r0"].append(er)
    return {key: np.array(v) for key, v in out.items()}


# ---------------------------------------------------------------------------
# semigroup


@dataclass(frozen=True)
class SemigroupResult:
    """(n/t R_{n/t})^n f together with the change from n/2 steps."""

    values: EdgeFunctionVec
    n: int
    increment: float


def semigroup_via_resolvent(provider: Callable, t: float, n: int, f: EdgeFunctionVec) -> SemigroupResult:
    """Backward-Euler product approximation of the semigroup at time ``t``.

    Parameters
    ----------
    provider : callable
        ``provider(lam)`` returns an operator with ``apply`` on the grid of ``f``.
    t : float
        Positive time.
    n : int
        Power of two, number of resolvent steps.
    f : EdgeFunctionVec

    Returns
    -------
    SemigroupResult
        ``increment`` is the sup-distance to the ``n/2``-step result
        (0 when n == 1).
    """
    if not t > 0:
        raise InvalidArgumentError("t must be positive")
    if n < 1 or (n & (n - 1)) != 0:
        raise InvalidArgumentError("n must be a power of two")

    def power(m):
        lam = m / t
        op = provider(lam)
        g = f
        for _ in range(m):
            g = op.apply(g) * lam
        return g

    res = power(n)
    inc = 0.0 if n == 1 else sup_distance(res, power(n // 2))
    return SemigroupResult(res, n, inc)


# ---------------------------------------------------------------------------
# figure 1


def fig1_curves(lam: float = 1.0, r: float = 1.0, gamma: float = 0.25,
                eps_list=(1.0, 0.5, 0.25, 0.125), line: LineDrift | None = None, n: int = 1000) -> dict:
    """Increasing eigenfunction k_eps on [-r, r] for each eps plus the limit.

    Returns
    -------
    dict
        'x' (with the doubled node at 0), one array per eps keyed by the
        float value, 'limit', and 'gamma_tilde'.
    """
    from .drift import fig1_drift

    line = fig1_drift() if line is None else line
    n = max(n, int(math.ceil(20.0 * r / min(eps_list))))
    alpha = line.mass()
    g_t = transform_skew(1.0 / (1.0 + gamma), alpha).gamma
    curves = {}
    for eps in eps_list:
        b = solve_k_interval(lam, line.scaled(float(eps)), gamma, r, n)
        curves[float(eps)] = b.values
    lim = limit_k_interval(lam, r, g_t, n)
    out = {"x": lim.x, "limit": lim.values, "gamma_tilde": g_t, "limit_fn": lim}
    for eps, kf in curves.items():
        out[eps] = kf.values
    out["functions"] = curves
    return out


# ---------------------------------------------------------------------------
# CSV output


def fmt(v) -> str:
    """12 significant digits for reals; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(config, seed=None, grid=None) -> dict:
    return {
        "config_hash": config_hash(config),
        "seed": "" if seed is None else str(int(seed)),
        "grid": "" if grid is None else str(grid),
        "version": __version__,
    }


def write_csv(path: str, header: Sequence[str], rows, prov: dict | None = None) -> str:
    """Write an RFC-4180 CSV with CRLF line ends; provenance becomes columns.

    Returns the text written, so callers can compare runs byte for byte.
    """
    cols = list(header)
    extra = list(prov) if prov else []
    buf = io.StringIO(newline="")
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(cols + extra)
    for row in rows:
        w.writerow([fmt(v) for v in row] + [prov[c] for c in extra])
    text = buf.getvalue()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return text


def report_rows(report: ConvergenceReport):
    """Rows for convergence.csv, sorted by (lam, g, -eps)."""
    rows = []
    for r in sorted(report.rows, key=lambda q: (q["lam"], q["g"], -q["eps"])):
        rows.append([report.scenario, r["lam"], r["g"], r["eps"], r["n"], r["error"] / max(r["norm"], 1e-300), r["order"], ""])
    for r in sorted(report.panel_rows, key=lambda q: (q["lam"], -q["eps"])):
        flag = report.monotone(r["lam"]) and report.final_ok(r["lam"])
        rows.append([report.scenario, r["lam"], "panel_sup", r["eps"], r["n"], r["error"], r["order"], flag])
    return rows


CONVERGENCE_HEADER = ("scenario", "lam", "g", "eps", "n", "error", "order", "passed")
