from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

from ..model import Placement, placement_to_dict
from ..power import PowerBreakdown, evaluate
from ._data import Objective


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    TIMEOUT = "TIMEOUT"


@dataclass(frozen=True)
class SolveResult:
    placement: Placement | None
    breakdown: PowerBreakdown
    status: Status
    lower_bound_w: float
    nodes_explored: int
    runtime_ms: float
    objective: Objective = Objective.PC_PLUS_PN

    @property
    def objective_value(self) -> float:
        if self.placement is None:
            return math.inf
        return self.objective.value_of(self.breakdown)

    @property
    def gap(self) -> float:
        """Relative gap between incumbent and lower bound (0 when proven)."""
        v = self.objective_value
        if not math.isfinite(v) or not math.isfinite(self.lower_bound_w):
            return math.inf
        if v == 0:
            return 0.0
        return max(0.0, (v - self.lower_bound_w) / v)

    def to_dict(self, timing=True) -> dict:
        def num(x):
            return x if math.isfinite(x) else None
        return {
            "status": self.status.value,
            "objective": self.objective.value,
            "objective_w": num(self.objective_value),
            **self.breakdown.to_dict(),
            "lower_bound_w": num(self.lower_bound_w),
            "nodes": self.nodes_explored,
            "runtime_ms": self.runtime_ms if timing else 0.0,
            "placement": placement_to_dict(self.placement) if self.placement else None,
        }


EMPTY = PowerBreakdown(0.0, 0.0, 0.0, 0, 0)


def finish(inst, objective, routing, host, status, lower_bound, nodes, t0) -> SolveResult:
    """Assemble a result; the breakdown always comes from ``evaluate`` so every
    solver reports identical numbers for identical placements."""
    ms = (time.perf_counter() - t0) * 1e3
    if host is None:
        return SolveResult(None, EMPTY, status, lower_bound, nodes, ms, objective)
    placement = host if isinstance(host, Placement) else Placement(host)
    breakdown, _ = evaluate(inst, placement, routing)
    if lower_bound is None:
        lower_bound = objective.value_of(breakdown)
    return SolveResult(placement, breakdown, status, lower_bound, nodes, ms, objective)
