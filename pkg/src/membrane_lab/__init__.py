"""Drift approximation of skew Brownian motion and Walsh spider processes."""

__version__ = "0.1.0"

from .errors import InvalidArgumentError, MembraneLabError, NumericFailure, ResolutionError
from .grid import (
    INFINITE,
    EdgeFunctionVec,
    EdgeGrid,
    IntervalFunction,
    StarGraphSpec,
    bielecki_norm,
    make_grid,
    make_interval,
    one_sided_derivative,
    sup_distance,
)
from .drift import (
    DriftFamily,
    ExpDecay,
    LineDrift,
    TabulatedDrift,
    ZeroDrift,
    alpha_of,
    fig1_drift,
    scale_drift,
    window_integral,
)
from .transforms import SkewParams, check_weights, roundtrip_reps, skew_from_walsh, transform_skew, transform_walsh
from .sturm_liouville import (
    closed_form_limits,
    limit_k_interval,
    solve_edge,
    solve_halfline,
    solve_interval,
    solve_k_interval,
)
from .resolvent import (
    GraphData,
    IntervalGreenResolvent,
    LimitStarResolvent,
    StarResolvent,
    c_functional,
    excursion_identity_check,
    exit_law,
    finite_resolvent,
    full_resolvent,
    green_kernel_interval,
    interval_adapter,
    limit_resolvent,
    minimal_resolvent,
)
from .resolvent_infinite import (
    InfiniteStarResolvent,
    LimitInfiniteStarResolvent,
    full_resolvent_inf,
    halfline_data,
    limit_resolvent_inf,
    minimal_resolvent_inf,
)
from .montecarlo import (
    MCEstimate,
    OccupationStats,
    SimConfig,
    StarGraphPoint,
    estimate_exit_prob,
    estimate_semigroup,
    exact_walsh_sample,
    simulate_paths,
)
from .harness import ConvergenceReport, SweepSpec, lemma_sweep, run_convergence, semigroup_via_resolvent
