"""
Expert policy - maximum matching over the pairs each defender can see.
"""

from __future__ import annotations

from perimeter_defense.game.matching import expert_matching
from perimeter_defense.policies.base import PolicyDecision, PolicyName
from perimeter_defense.sim.perception import visibility_matrix
from perimeter_defense.sim.simulator import pair_payoffs
from perimeter_defense.sim.world import GameConfig, WorldState


def expert_policy(world: WorldState, cfg: GameConfig) -> PolicyDecision:
    """Centralized expert: payoffs absent where the defender cannot see the intruder."""
    vis = visibility_matrix(world, cfg.perception.fov)
    result = expert_matching(pair_payoffs(world, cfg, mask=vis))
    return PolicyDecision(targets=result.assignment, slots=(None,) * len(result.assignment))


class ExpertPolicy:
    name = PolicyName.EXPERT.value

    def reset(self, seed: int) -> None:
        pass

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        return expert_policy(world, cfg)


__all__ = ["expert_policy", "ExpertPolicy"]
