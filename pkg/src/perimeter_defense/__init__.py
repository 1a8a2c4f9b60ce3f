"""
perimeter-defense-lab - multi-robot perimeter defense on a hemispherical dome.

Expert matching over one-on-one breach games, a graph network that imitates
it from local perception, baselines and an experiment harness.
"""

__version__ = "0.1.0"

from perimeter_defense.errors import PerimeterDefenseError
from perimeter_defense.game import (
    BreachInstance,
    BreachSolution,
    MatchingResult,
    PayoffMatrix,
    expert_matching,
    solve_breach,
)
from perimeter_defense.sim import GameConfig, WorldState, init_random, run_episode
from perimeter_defense.policies import PolicyName, make_policy

__all__ = [
    "__version__",
    "PerimeterDefenseError",
    "BreachInstance",
    "BreachSolution",
    "solve_breach",
    "PayoffMatrix",
    "MatchingResult",
    "expert_matching",
    "GameConfig",
    "WorldState",
    "init_random",
    "run_episode",
    "PolicyName",
    "make_policy",
]
