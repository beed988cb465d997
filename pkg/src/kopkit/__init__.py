"""Kinematic orienteering: time-optimal bounded-acceleration legs, cost
tensors over (heading, speed) states, Dubins baselines, exact and LNS
solvers."""
from .kinematics import (AxisBoundary, KinematicLimits, NoCommonDuration, NoFeasibleDuration, PatternKind,
                         PatternSolution, SyncResult, axis_feasible_at, axis_time_optimal, candidate_times,
                         feasibility_oracle, feasible_intervals, naive_sync_time, optimal_sync_time,
                         sample_trajectory)
from .orienteering import (FewerThanTwoLocations, InfeasibleBudget, Instance, MalformedLine, SearchSpaceTooLarge,
                           Solution, evaluate, export_milp, is_feasible, parse_instance, solve_exact)
from .steering_cost import (AxisLimitPolicy, CostMatrix, Discretization, Location, PoseState, build_cost_matrix,
                            leg_cost, tour_trajectory)

__all__ = [
    "AxisBoundary", "KinematicLimits", "NoCommonDuration", "NoFeasibleDuration", "PatternKind",
    "PatternSolution", "SyncResult", "axis_feasible_at", "axis_time_optimal", "candidate_times",
    "feasibility_oracle", "feasible_intervals", "naive_sync_time", "optimal_sync_time", "sample_trajectory",
    "FewerThanTwoLocations", "InfeasibleBudget", "Instance", "MalformedLine", "SearchSpaceTooLarge",
    "Solution", "evaluate", "export_milp", "is_feasible", "parse_instance", "solve_exact",
    "AxisLimitPolicy", "CostMatrix", "Discretization", "Location", "PoseState", "build_cost_matrix",
    "leg_cost", "tour_trajectory",
]
