"""Result containers shared by the pipeline stages and the report writer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def root_sum_squares(values) -> float:
    return math.sqrt(sum(v * v for v in values))


@dataclass(frozen=True)
class StageResult:
    stage: int  # 1 torque manifold, 2 inter-tendon, 3 intra-tendon
    params: dict[str, float]  # slots determined (or held fixed) by this stage
    per_grasp: dict[str, float]  # considered grasp id -> metric at the optimum
    excluded: dict[str, int]  # grasp id -> exclusion-loop iteration (1-based)
    objective: float  # root of squared sum of considered metrics
    evaluations: int
    seed: int
    converged: bool
    infeasible: tuple[str, ...] = ()  # excluded because no feasible QP exists
    f_trq_min: float | None = None  # stage 1 saves its minimum for stage 2
    notes: tuple[str, ...] = ()
    iteration_objectives: tuple[float, ...] = ()  # per exclusion-loop pass

    def __post_init__(self):
        overlap = set(self.per_grasp) & set(self.excluded)
        if overlap:
            raise ValueError(f"grasps both considered and excluded: {sorted(overlap)}")
        rss = root_sum_squares(self.per_grasp.values())
        if abs(rss - self.objective) > 1e-9 * max(1.0, abs(self.objective)):
            raise ValueError(
                f"objective {self.objective} does not match per-grasp metrics ({rss})"
            )

    def excluded_count(self) -> int:
        return len(self.excluded)


@dataclass(frozen=True)
class DesignReport:
    hand_name: str
    design_case: str
    seed: int
    config_hash: str
    version: str
    stages: tuple[StageResult, ...]
    params: dict[str, float] = field(default_factory=dict)  # final merged vector
    failed_stage: int | None = None
    error: str | None = None
