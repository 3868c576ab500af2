"""Boosted gradient methods for continuous (weakly) DR-submodular maximization.

Offline solvers (boosted projected ascent, boosted Frank-Wolfe and the usual
baselines) live in ``drboost.offline``; online and delayed-feedback solvers in
``drboost.online``; the experiment harness in ``drboost.bench``.
"""

from .boosting import BoostConfig, boost_constants, boost_grad, boost_grad_draws, grad_F_ref, sample_z, value_F_ref
from .estimators import (
    BoostingFrankWolfe,
    BoostingGradientAscent,
    ContinuousGreedy,
    GradientAscent,
    OnlineBoostingGradientAscent,
    StochasticContinuousGreedy,
)
from .exceptions import ArgumentError, ConfigError, ConvergenceError, DomainError, InfeasibleError
from .feasible import Box, Cardinality, FeasibleSet, Polytope
from .numerics import RngStream
from .objectives import (
    FunctionObjective,
    Objective,
    ObjectiveMeta,
    QuadraticObjective,
    SpecialCaseObjective,
    online_qp_sequence,
    qp_generate,
)
from .offline import OfflineConfig, run_bfw, run_bga, run_cg, run_ga, run_scg
from .online import OnlineConfig, build_schedule, run_meta_fw, run_obga, run_oga

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "BoostConfig", "BoostingFrankWolfe", "BoostingGradientAscent", "Box", "Cardinality",
    "ConfigError", "ContinuousGreedy", "ConvergenceError", "DomainError", "FeasibleSet", "FunctionObjective",
    "GradientAscent", "InfeasibleError", "Objective", "ObjectiveMeta", "OfflineConfig",
    "OnlineBoostingGradientAscent", "OnlineConfig", "Polytope", "QuadraticObjective", "RngStream",
    "SpecialCaseObjective", "StochasticContinuousGreedy", "boost_constants", "boost_grad", "boost_grad_draws",
    "build_schedule", "grad_F_ref", "online_qp_sequence", "qp_generate", "run_bfw", "run_bga", "run_cg",
    "run_ga", "run_meta_fw", "run_obga", "run_oga", "run_scg", "sample_z", "value_F_ref",
]
