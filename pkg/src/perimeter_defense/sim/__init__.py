"""
Simulation layer - world state, decentralized perception and the episode engine.
"""

from perimeter_defense.sim.perception import (
    CommGraph,
    LocalPerception,
    PerceptionConfig,
    TeamPerception,
    build_comm_graph,
    extract_features,
    hop_distances,
    khop_sensible,
    perceive_team,
    relative_coord,
    visibility_matrix,
    visible,
)
from perimeter_defense.sim.simulator import (
    EpisodeEvent,
    EpisodeLog,
    EventKind,
    Policy,
    PolicyDecision,
    advance,
    full_information_matching,
    pair_payoffs,
    run_episode,
    step,
)
from perimeter_defense.sim.world import (
    GameConfig,
    OpponentRule,
    WorldState,
    init_random,
    scale_radius,
)

__all__ = [
    # world
    "GameConfig",
    "OpponentRule",
    "WorldState",
    "init_random",
    "scale_radius",
    # perception
    "PerceptionConfig",
    "LocalPerception",
    "CommGraph",
    "TeamPerception",
    "visible",
    "visibility_matrix",
    "relative_coord",
    "extract_features",
    "build_comm_graph",
    "hop_distances",
    "khop_sensible",
    "perceive_team",
    # simulator
    "PolicyDecision",
    "Policy",
    "pair_payoffs",
    "full_information_matching",
    "EventKind",
    "EpisodeEvent",
    "EpisodeLog",
    "advance",
    "step",
    "run_episode",
]
