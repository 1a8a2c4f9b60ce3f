"""
Game layer - hemisphere geometry, the one-on-one breach game and expert matching.
"""

from perimeter_defense.game.breach import (
    BreachInstance,
    BreachSolution,
    beta_of_theta,
    deviation_payoffs,
    payoff,
    residuals,
    solve_breach,
    solve_pair,
    tau_defender,
    tau_intruder,
    theta_residual,
)
from perimeter_defense.game.geometry import (
    DefenderPose,
    IntruderPose,
    IntruderStatus,
    Point3,
    RelativeCoord,
    capture_distance,
    central_angle,
    chord_matrix,
    defender_cartesian,
    intruder_cartesian,
    perimeter_point,
    step_defender,
    step_intruder,
    wrap_angle,
)
from perimeter_defense.game.matching import (
    MatchingResult,
    PayoffMatrix,
    brute_force_matching,
    expert_matching,
    strong_edges,
)

__all__ = [
    # geometry
    "DefenderPose",
    "IntruderPose",
    "IntruderStatus",
    "Point3",
    "RelativeCoord",
    "wrap_angle",
    "central_angle",
    "defender_cartesian",
    "intruder_cartesian",
    "perimeter_point",
    "chord_matrix",
    "capture_distance",
    "step_defender",
    "step_intruder",
    # breach
    "BreachInstance",
    "BreachSolution",
    "beta_of_theta",
    "theta_residual",
    "solve_breach",
    "solve_pair",
    "tau_defender",
    "tau_intruder",
    "payoff",
    "residuals",
    "deviation_payoffs",
    # matching
    "PayoffMatrix",
    "MatchingResult",
    "strong_edges",
    "expert_matching",
    "brute_force_matching",
]
