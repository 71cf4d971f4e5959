"""Command-line entry point: ``membrane-lab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from .errors import InvalidArgumentError, NumericFailure
from .harness import (
    CONVERGENCE_HEADER,
    PANEL,
    SCENARIOS,
    SweepSpec,
    fig1_curves,
    panel_function,
    provenance,
    report_rows,
    run_convergence,
    semigroup_via_resolvent,
    write_csv,
)
from .transforms import SkewParams, transform_skew, transform_walsh

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidArgumentError(message)


def _common(p):
    p.add_argument("--config", help="JSON config file (or a bundled name such as fig1.json)")
    p.add_argument("--out", default=".", help="directory for CSV outputs")
    p.add_argument("--seed", type=int, default=None, help="integer seed (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="membrane-lab", description="Drift approximation of skew Brownian motion and Walsh processes.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("transform", help="limit skew/Walsh parameters")
    _common(p)
    p.add_argument("--p", type=float, nargs="+", help="skewness p, or Walsh weights p_1 .. p_k")
    p.add_argument("--alpha", type=float, nargs="+", help="drift mass alpha, or alpha_1 .. alpha_k")

    p = sub.add_parser("solve-sl", help="eigenfunction tables (Figure-1 curves for interval configs)")
    _common(p)

    p = sub.add_parser("resolvent", help="apply the eps-resolvent and its limit to a panel function")
    _common(p)
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--g", choices=PANEL)

    p = sub.add_parser("converge", help="eps-ladder convergence table")
    _common(p)
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--strict", action="store_true", help="exit 1 when the report fails its checks")

    p = sub.add_parser("simulate", help="Monte Carlo edge occupation")
    _common(p)
    p.add_argument("--n-paths", type=int, default=None)

    p = sub.add_parser("semigroup", help="semigroup via resolvent powers")
    _common(p)
    p.add_argument("--scenario", choices=SCENARIOS)
    return ap


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _scenario(cfg, given):
    if given:
        return given
    sc = cfg.get("scenario")
    if sc:
        return sc
    if math.isinf(cfgmod.graph_spec(cfg).edge_length):
        return "infinite"
    d = cfg.get("drift") or {}
    return "interval" if "line" in d else "finite"


# ---------------------------------------------------------------------------


def cmd_transform(args, cfg):
    if args.p is None:
        raise InvalidArgumentError("--p is required")
    alpha = args.alpha if args.alpha is not None else [0.0] * len(args.p)
    rows = []
    if len(args.p) == 1:
        if len(alpha) != 1:
            raise InvalidArgumentError("one --alpha for a single --p")
        sp = SkewParams(args.p[0])
        st = transform_skew(sp, alpha[0])
        rows += [(k, v) for k, v in sp.as_dict().items()]
        rows.append(("alpha", alpha[0]))
        rows += [(k + "_tilde", v) for k, v in st.as_dict().items()]
    else:
        if len(alpha) != len(args.p):
            raise InvalidArgumentError("--alpha needs one value per weight")
        pt = transform_walsh(args.p, alpha)
        for i, (pi, ai, ti) in enumerate(zip(args.p, alpha, pt)):
            rows += [(f"p_{i}", pi), (f"alpha_{i}", ai), (f"p_tilde_{i}", ti)]
    for k, v in rows:
        print(f"{k}={v:.12g}")
    if args.config is not None or args.out != ".":
        write_csv(os.path.join(_outdir(args.out), "transform.csv"), ("name", "value"), rows,
                  provenance({"p": args.p, "alpha": alpha}))
    return EXIT_OK


def cmd_solve_sl(args, cfg):
    from .sturm_liouville import solve_edge, solve_halfline

    out = _outdir(args.out)
    lam = float(cfg["lambda"])
    spec = cfgmod.graph_spec(cfg)
    prov = provenance(cfg, grid=f"n={cfg['n']}")
    d = cfg.get("drift") or {}
    if "line" in d and not spec.infinite:
        fig = cfg.get("figure") or {}
        eps_list = tuple(float(e) for e in fig.get("eps", [cfg["eps"]]))
        p = float(cfg.get("p", 0.5))
        res = fig1_curves(lam, spec.edge_length, (1.0 - p) / p, eps_list, cfgmod.line_drift(cfg),
                          int(fig.get("n", cfg["n"])))
        header = ["x"] + [f"k_eps_{e:g}" for e in eps_list] + ["k_limit"]
        cols = [res["x"]] + [res[e] for e in eps_list] + [res["limit"]]
        rows = list(zip(*cols))
        prov["grid"] = f"n={res['limit_fn'].n}"
        write_csv(os.path.join(out, "sl.csv"), header, rows, prov)
        print(f"gamma_tilde={res['gamma_tilde']:.12g}")
        return EXIT_OK
    fam = cfgmod.family(cfg)
    rows = []
    if spec.infinite:
        from .resolvent_infinite import halfline_data
        data = halfline_data(lam, fam, None, spec.x_max, None)
        for i, s in enumerate(data.solutions):
            for xi, row in zip(s.x, zip(s.j, s.k, s.k_deriv, s.ell, s.ell_deriv)):
                rows.append((i, xi) + row)
        header = ("edge", "x", "j", "k", "k_deriv", "ell", "ell_deriv")
        prov["grid"] = f"n={data.grid.n};x_max={spec.horizon:g}"
    else:
        n = max(int(cfg["n"]), int(math.ceil(20.0 * spec.edge_length / fam.eps)))
        x = np.linspace(0.0, spec.edge_length, n + 1)
        for i, dr in enumerate(fam.drifts):
            s = solve_edge(lam, dr, x)
            for row in zip(s.x, s.k, s.k_deriv, s.ell, s.ell_deriv):
                rows.append((i,) + row)
        header = ("edge", "x", "k", "k_deriv", "ell", "ell_deriv")
        prov["grid"] = f"n={n}"
    write_csv(os.path.join(out, "sl.csv"), header, rows, prov)
    return EXIT_OK


def _operators(cfg, scenario, lam, eps, n=None):
    """(eps-resolvent, limit resolvent) on a shared grid."""
    from .resolvent import GraphData, LimitFiniteResolvent, finite_resolvent
    from .resolvent_infinite import LimitInfiniteResolvent, full_resolvent_inf, halfline_data

    spec = cfgmod.graph_spec(cfg)
    if scenario == "interval":
        gd = GraphData(float(cfg.get("p", 0.5)), cfgmod.line_drift(cfg))
        fam = gd.family().with_eps(eps)
        w = gd.weights
    else:
        fam = cfgmod.family(cfg, eps)
        w = cfgmod.weights(cfg, fam.k)
    if scenario == "infinite":
        data = halfline_data(lam, fam, w, cfgmod.raw_x_max(cfg), n)
        op = full_resolvent_inf(lam, data)
        return op, LimitInfiniteResolvent(lam, op.grid, fam.alpha, w)
    r = 1.0 if spec.infinite else spec.edge_length
    nn = max(int(cfg["n"]) if n is None else n, int(math.ceil(20.0 * r / eps)))
    op = finite_resolvent(lam, fam, w, r, nn)
    return op, LimitFiniteResolvent(lam, op.grid, fam.alpha, w)


def cmd_resolvent(args, cfg):
    scenario = _scenario(cfg, args.scenario)
    rc = cfg.get("resolvent") or {}
    g_name = args.g or rc.get("g", "one")
    lam, eps = float(cfg["lambda"]), float(cfg["eps"])
    op, lim = _operators(cfg, scenario, lam, eps)
    g = panel_function(g_name, op.grid)
    f, fl = op(g), lim(g)
    rows = []
    for i in range(op.grid.k):
        for xi, a, b, gv in zip(op.grid.x, f.values[i], fl.values[i], g.values[i]):
            rows.append((i, xi, gv, a, b))
    prov = provenance(cfg, grid=f"n={op.grid.n}")
    write_csv(os.path.join(_outdir(args.out), "resolvent.csv"), ("edge", "x", "g", "value", "limit"), rows, prov)
    print(f"scenario={scenario}")
    print(f"center_value={f.center:.12g}")
    print(f"limit_center_value={fl.center:.12g}")
    return EXIT_OK


def sweep_from_config(cfg, scenario) -> SweepSpec:
    sw = dict(cfg.get("sweep") or {})
    kw = {}
    for key in ("eps0", "factor"):
        if key in sw:
            kw[key] = float(sw[key])
    for key in ("steps", "n_min"):
        if key in sw:
            kw[key] = int(sw[key])
    if "lambdas" in sw:
        kw["lambdas"] = tuple(float(v) for v in sw["lambdas"])
    if "panel" in sw:
        kw["panel"] = tuple(sw["panel"])
    spec = cfgmod.graph_spec(cfg)
    if scenario == "interval":
        p = float(cfg.get("p", 0.5))
        kw.update(line=cfgmod.line_drift(cfg), weights=(p, 1.0 - p), r=spec.edge_length)
    else:
        bases = cfgmod.edge_bases(cfg)
        kw.update(bases=bases, weights=tuple(cfgmod.weights(cfg, len(bases))))
        if scenario == "infinite":
            kw["x_max"] = cfgmod.raw_x_max(cfg)
        elif not spec.infinite:
            kw["r"] = spec.edge_length
    return SweepSpec(**kw)


def cmd_converge(args, cfg):
    sweep = sweep_from_config(cfg, args.scenario)
    tol = float((cfg.get("sweep") or {}).get("tolerance", 0.01))
    report = run_convergence(sweep, args.scenario, tol)
    prov = provenance(cfg, seed=cfg.get("seed"), grid=f"h<=eps/20;n_min={sweep.n_min}")
    write_csv(os.path.join(_outdir(args.out), "convergence.csv"), CONVERGENCE_HEADER, report_rows(report), prov)
    for lam in sweep.lambdas:
        e = report.errors(lam)
        print(f"lam={lam:g} final_error={e[-1]:.6g} monotone={report.monotone(lam)} ok={report.final_ok(lam)}")
    print(f"passed={report.passed}")
    return EXIT_OK if report.passed or not args.strict else EXIT_FAILED


def sim_config(cfg, seed=None, n_paths=None):
    from .montecarlo import SimConfig
    from .resolvent import GraphData

    sim = cfg.get("simulation") or {}
    spec = cfgmod.graph_spec(cfg)
    eps = float(sim.get("eps", cfg["eps"]))
    d = cfg.get("drift") or {}
    if "line" in d:
        gd = GraphData(float(cfg.get("p", 0.5)), cfgmod.line_drift(cfg))
        fam, w = gd.family().with_eps(eps), gd.weights
        spec = cfgmod.StarGraphSpec(2, spec.edge_length, spec.x_max)
    else:
        fam = cfgmod.family(cfg, eps)
        w = cfgmod.weights(cfg, fam.k)
    if sim.get("drift_free"):
        fam = None
    return SimConfig(
        spec, tuple(w), float(sim.get("dt", 1e-5)), float(sim.get("t", 1.0)),
        int(n_paths if n_paths is not None else sim.get("n_paths", 10000)),
        seed=int(seed if seed is not None else cfg.get("seed", 0)),
        family=fam, delta=sim.get("delta"), eta=float(sim.get("eta", 0.2)),
        dt_max=sim.get("dt_max"), vertex_correction=bool(sim.get("vertex_correction", False)),
        r_big=sim.get("r_big"),
    )


def cmd_simulate(args, cfg):
    from .montecarlo import simulate_paths
    conf = sim_config(cfg, args.seed, args.n_paths)
    start = (cfg.get("simulation") or {}).get("start", {"edge": 0, "x": 0.0})
    stats = simulate_paths(conf, (int(start.get("edge", 0)), float(start.get("x", 0.0))))
    alphas = conf.drift_family.alpha
    pt = transform_walsh(conf.weights, alphas)
    n, seed = stats.n_paths, stats.seed
    rows = []
    for i in range(conf.spec.k):
        rows.append((f"occupation_edge_{i}", stats.frequencies[i], stats.stderr[i], n, seed))
    for i in range(conf.spec.k):
        rows.append((f"limit_weight_edge_{i}", pt[i], 0.0, n, seed))
    rows.append(("absorbed_fraction", stats.absorbed_fraction, "", n, seed))
    rows.append(("mean_distance", stats.mean_distance, "", n, seed))
    eff = {**cfg, "seed": seed, "n_paths": n}
    prov = provenance(eff, grid=f"dt={conf.dt:g};dt_max={conf.dt_max:g};eta={conf.eta:g};delta={conf.delta:g}")
    prov.pop("seed")
    write_csv(os.path.join(_outdir(args.out), "simulate.csv"), ("name", "value", "stderr", "n_paths", "seed"), rows, prov)
    for i in range(conf.spec.k):
        print(f"edge_{i} occupation={stats.frequencies[i]:.6f} stderr={stats.stderr[i]:.2g} limit={pt[i]:.6f}")
    return EXIT_OK


def cmd_semigroup(args, cfg):
    scenario = _scenario(cfg, args.scenario)
    sg = cfg.get("semigroup") or {}
    t, n = float(sg.get("t", 1.0)), int(sg.get("n", 64))
    eps = float(cfg["eps"])
    use_limit = bool(sg.get("limit", False))
    lam_min = max(n // 2, 1) / t
    if scenario == "infinite" and cfgmod.raw_x_max(cfg) is None:
        # one ray horizon for every lambda so all powers share a grid
        from .sturm_liouville import default_horizon
        x_max = default_horizon(lam_min, cfgmod.family(cfg, eps).mass_bound)
        cfg = {**cfg, "graph": {**(cfg.get("graph") or {}), "x_max": x_max}}
    probe, _ = _operators(cfg, scenario, lam_min, eps)
    grid = probe.grid

    def provider(lam):
        op, lim = _operators(cfg, scenario, lam, eps, grid.n)
        if op.grid.n != grid.n:
            raise NumericFailure("grid changed between resolvent evaluations")
        return lim if use_limit else op

    f = panel_function(sg.get("f", "cos"), grid)
    res = semigroup_via_resolvent(provider, t, n, f)
    rows = []
    for i in range(grid.k):
        for xi, v in zip(grid.x, res.values.values[i]):
            rows.append((i, xi, v, res.increment))
    prov = provenance(cfg, grid=f"n={grid.n}")
    write_csv(os.path.join(_outdir(args.out), "semigroup.csv"), ("edge", "x", "value", "increment"), rows, prov)
    print(f"cauchy_increment={res.increment:.6g}")
    return EXIT_OK


COMMANDS = {
    "transform": cmd_transform,
    "solve-sl": cmd_solve_sl,
    "resolvent": cmd_resolvent,
    "converge": cmd_converge,
    "simulate": cmd_simulate,
    "semigroup": cmd_semigroup,
}


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        ap.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            ap.print_usage(sys.stderr)
            return EXIT_INVALID
        cfg = cfgmod.load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        return COMMANDS[args.command](args, cfg)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericFailure, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
