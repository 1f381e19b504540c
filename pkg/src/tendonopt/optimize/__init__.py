"""Three-stage actuation-parameter optimization with outlier exclusion."""

from .equilibrium import PoseSolve, pre_contact_pose, spring_torques, sprung_dofs
from .manifolds import ManifoldSamples, pca_fit, sample_manifolds, simplex_grid
from .results import DesignReport, StageResult, root_sum_squares
from .stability import StabilityResult, grasp_stability_qp, stability_start, torque_target
from .stages import (
    StageError,
    grasp_contexts,
    optimize_inter_tendon,
    optimize_intra_tendon,
    optimize_torque_manifold,
    run_pipeline,
    spring_balance_qp,
    spring_units,
    travel_error,
)

__all__ = [
    "PoseSolve",
    "pre_contact_pose",
    "spring_torques",
    "sprung_dofs",
    "ManifoldSamples",
    "pca_fit",
    "sample_manifolds",
    "simplex_grid",
    "DesignReport",
    "StageResult",
    "root_sum_squares",
    "StabilityResult",
    "grasp_stability_qp",
    "stability_start",
    "torque_target",
    "StageError",
    "grasp_contexts",
    "optimize_inter_tendon",
    "optimize_intra_tendon",
    "optimize_torque_manifold",
    "run_pipeline",
    "spring_balance_qp",
    "spring_units",
    "travel_error",
]
