"""JSON run configurations (schema in docs/config_schema.md)."""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .drift import DriftFamily, ExpDecay, LineDrift, TabulatedDrift, ZeroDrift, fig1_drift
from .errors import InvalidArgumentError
from .grid import StarGraphSpec

DEFAULTS = {
    "graph": {"k": 3, "edge_length": 1.0, "x_max": None},
    "weights": None,
    "p": 0.5,
    "drift": {"edges": [{"type": "exp_decay", "alpha": 0.5, "rate": 1.0},
                        {"type": "zero"},
                        {"type": "exp_decay", "alpha": -0.25, "rate": 1.0}]},
    "lambda": 1.0,
    "eps": 0.05,
    "n": 2000,
    "seed": 0,
}


def load_config(path: str | None) -> dict:
    """Read a JSON config; ``None`` gives the defaults.

    A bare name such as ``fig1.json`` that is not an existing file is
    looked up among the bundled configs.
    """
    cfg = json.loads(json.dumps(DEFAULTS))
    if path is None:
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except FileNotFoundError:
        try:
            text = resources.files("membrane_lab").joinpath("configs", str(path)).read_text(encoding="utf-8")
        except (FileNotFoundError, OSError):
            raise InvalidArgumentError(f"config file not found: {path}") from None
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(user, dict):
        raise InvalidArgumentError("config must be a JSON object")
    for key, val in user.items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict) and key != "drift":
            cfg[key] = {**cfg[key], **val}
        else:
            cfg[key] = val
    return cfg


def _num(v, name) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"{name} must be a number, got {v!r}") from None
    if math.isnan(out):
        raise InvalidArgumentError(f"{name} is NaN")
    return out


def parse_drift(d) -> object:
    """One edge drift from ``{"type": "exp_decay" | "zero" | "table", ...}``."""
    if d is None:
        return ZeroDrift()
    if not isinstance(d, dict) or "type" not in d:
        raise InvalidArgumentError(f"drift entries need a 'type', got {d!r}")
    kind = d["type"]
    if kind == "zero":
        return ZeroDrift()
    if kind == "exp_decay":
        return ExpDecay(_num(d.get("alpha", 1.0), "alpha"), _num(d.get("rate", 1.0), "rate"))
    if kind == "table":
        return TabulatedDrift(np.asarray(d["x"], dtype=float), np.asarray(d["a"], dtype=float))
    raise InvalidArgumentError(f"unknown drift type {kind!r}")


def line_drift(cfg) -> LineDrift:
    d = cfg.get("drift") or {}
    line = d.get("line")
    if line == "fig1":
        return fig1_drift()
    if isinstance(line, dict):
        return LineDrift(parse_drift(line.get("negative")), parse_drift(line.get("positive")))
    if "edges" in d:
        edges = d["edges"]
        if len(edges) != 2:
            raise InvalidArgumentError("an interval needs a 'line' drift or exactly two edge drifts")
        # edge 0 is the right half, edge 1 the left half read outward with s -> -a(-s)
        return LineDrift(parse_drift(edges[1]).negated(), parse_drift(edges[0]))
    raise InvalidArgumentError("config has no drift")


def edge_bases(cfg) -> tuple:
    d = cfg.get("drift") or {}
    if "edges" in d:
        return tuple(parse_drift(e) for e in d["edges"])
    if "line" in d:
        from .resolvent import GraphData
        return GraphData(float(cfg.get("p", 0.5)), line_drift(cfg)).family().bases
    raise InvalidArgumentError("config has no drift")


def raw_x_max(cfg):
    x_max = (cfg.get("graph") or {}).get("x_max")
    return None if x_max is None else _num(x_max, "x_max")


def graph_spec(cfg, k: int | None = None) -> StarGraphSpec:
    """Graph from the config; a missing ray horizon gets the solver default at ``lambda``."""
    from .sturm_liouville import default_horizon

    g = cfg.get("graph") or {}
    kk = int(g.get("k", 3)) if k is None else k
    length = _num(g.get("edge_length", 1.0), "edge_length")
    x_max = raw_x_max(cfg)
    if math.isinf(length) and x_max is None:
        bases = edge_bases(cfg)
        x_max = default_horizon(_num(cfg.get("lambda", 1.0), "lambda"), DriftFamily(bases, 1.0).mass_bound)
    return StarGraphSpec(kk, length, x_max)


def weights(cfg, k: int) -> np.ndarray:
    w = cfg.get("weights")
    if w is None:
        if k == 2 and "p" in cfg:
            p = _num(cfg["p"], "p")
            return np.array([p, 1.0 - p])
        return np.full(k, 1.0 / k)
    w = np.asarray(w, dtype=float)
    if w.size != k:
        raise InvalidArgumentError(f"need {k} weights, got {w.size}")
    return w


def family(cfg, eps: float | None = None) -> DriftFamily:
    e = _num(cfg.get("eps", 1.0), "eps") if eps is None else eps
    return DriftFamily(edge_bases(cfg), e)
