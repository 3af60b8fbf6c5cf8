"""Projection-free online convex optimization toolkit.

Feasible-set oracles, Frank-Wolfe subroutines, infeasible-projection
oracles built on linear-optimization or separation access, online
learners with sublinear (adaptive) regret at sublinear oracle budgets,
and a benchmark harness that checks measured regret and call counts
against the governing bounds.
"""

from .frankwolfe import (
    FWState,
    SeparationResult,
    exact_line_search_quadratic,
    frank_wolfe_min_distance,
    fw_stop_ceiling,
    separating_hyperplane_fw,
)
from .geometry import (
    Ball,
    Box,
    FeasibleSet,
    L1Ball,
    OracleContractError,
    OracleCounters,
    Polytope,
    SeparationAnswer,
    Simplex,
    SqueezedSetView,
    Vector,
    as_vector,
    exact_project,
    loo_query,
    so_query,
    squeeze,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RegretReport,
    exhaustive_intervals,
    interval_regret_report,
    parse_config_dict,
    parse_config_file,
    read_trace_csv,
    run_experiment,
    run_one,
    static_regret,
    strided_intervals,
    write_trace_csv,
)
from .learners import (
    LearnerParams,
    RunTrace,
    loo_bbgd_params,
    loo_bbgd_run,
    loo_bogd_params,
    loo_bogd_run,
    loo_bogd_sc_params,
    ogd_wf_run,
    so_bgd_params,
    so_bgd_run,
    so_ogd_params,
    so_ogd_run,
    theoretical_bounds,
)
from .losses import (
    AbsDevLoss,
    LinearLoss,
    LossSchedule,
    QuadraticLoss,
    bandit_gradient_estimate,
    make_iid_absdev_schedule,
    make_iid_linear_schedule,
    make_iid_quadratic_schedule,
    make_switching_linear_schedule,
    make_switching_quadratic_schedule,
    sample_unit_ball,
    sample_unit_sphere,
    smoothed_value_mc,
)
from .projection import LooProjection, SoProjection, cip_loo, cip_so, pull_toward

__all__ = [
    "AbsDevLoss",
    "ConfigError",
    "ExperimentConfig",
    "FWState",
    "LearnerParams",
    "LinearLoss",
    "LooProjection",
    "LossSchedule",
    "QuadraticLoss",
    "RegretReport",
    "RunTrace",
    "SeparationResult",
    "SoProjection",
    "bandit_gradient_estimate",
    "cip_loo",
    "cip_so",
    "exact_line_search_quadratic",
    "exhaustive_intervals",
    "frank_wolfe_min_distance",
    "fw_stop_ceiling",
    "interval_regret_report",
    "loo_bbgd_params",
    "loo_bbgd_run",
    "loo_bogd_params",
    "loo_bogd_run",
    "loo_bogd_sc_params",
    "make_iid_absdev_schedule",
    "make_iid_linear_schedule",
    "make_iid_quadratic_schedule",
    "make_switching_linear_schedule",
    "make_switching_quadratic_schedule",
    "ogd_wf_run",
    "parse_config_dict",
    "parse_config_file",
    "pull_toward",
    "read_trace_csv",
    "run_experiment",
    "run_one",
    "sample_unit_ball",
    "sample_unit_sphere",
    "separating_hyperplane_fw",
    "smoothed_value_mc",
    "so_bgd_params",
    "so_bgd_run",
    "so_ogd_params",
    "so_ogd_run",
    "static_regret",
    "theoretical_bounds",
    "write_trace_csv",
    "Ball",
    "Box",
    "FeasibleSet",
    "L1Ball",
    "OracleContractError",
    "OracleCounters",
    "Polytope",
    "SeparationAnswer",
    "Simplex",
    "SqueezedSetView",
    "Vector",
    "as_vector",
    "exact_project",
    "loo_query",
    "so_query",
    "squeeze",
]
