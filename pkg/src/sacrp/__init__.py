"""Energy-minimal retrieval planning for side-access stack slices."""

from .dp import DpOptions, DpStats, solve_dp
from .geometry import Batch, GeometryError, Rule, classify_extension, enumerate_batches, plan_cycle
from .greedy import GreedyTrace, solve_greedy
from .model import (
    AccessibilityError,
    CyclePlan,
    InfeasibleError,
    Instance,
    InstanceError,
    SacrpError,
    SliceState,
    Solution,
    SolutionError,
    check_feasibility,
    derive_sparse,
    load_solution,
    parse_instance,
    simulate_cycle,
    simulate_solution,
    write_instance,
    write_solution,
)
from .oracle import solve_oracle

__all__ = [
    "AccessibilityError",
    "Batch",
    "CyclePlan",
    "DpOptions",
    "DpStats",
    "GeometryError",
    "GreedyTrace",
    "InfeasibleError",
    "Instance",
    "InstanceError",
    "Rule",
    "SacrpError",
    "SliceState",
    "Solution",
    "SolutionError",
    "check_feasibility",
    "classify_extension",
    "derive_sparse",
    "enumerate_batches",
    "load_solution",
    "parse_instance",
    "plan_cycle",
    "simulate_cycle",
    "simulate_solution",
    "solve_dp",
    "solve_greedy",
    "solve_oracle",
    "write_instance",
    "write_solution",
]
