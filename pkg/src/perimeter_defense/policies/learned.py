"""
Learned policies - per-defender masked argmax over the network's slot logits.
"""

from __future__ import annotations

from typing import List, Optional

from perimeter_defense.errors import ShapeError
from perimeter_defense.learning.network import ModelParams, forward, masked_argmax
from perimeter_defense.policies.base import PolicyDecision, PolicyName
from perimeter_defense.sim.perception import PerceptionConfig, perceive_team
from perimeter_defense.sim.world import GameConfig, WorldState


def _check_layout(model: ModelParams, perception: PerceptionConfig) -> None:
    hp = model.hyper
    if (hp.n_af, hp.n_df) != (perception.n_af, perception.n_df):
        raise ShapeError(
            f"model expects n_af={hp.n_af}, n_df={hp.n_df}; perception has "
            f"n_af={perception.n_af}, n_df={perception.n_df}"
        )


def _decide(world: WorldState, cfg: GameConfig, model: ModelParams) -> PolicyDecision:
    _check_layout(model, cfg.perception)
    team = perceive_team(world, cfg.perception)
    logits = forward(model, team.x, team.graph.s)
    best = masked_argmax(logits, team.valid)
    targets: List[Optional[int]] = []
    slots: List[Optional[int]] = []
    for i, slot in enumerate(best):
        if slot < 0:
            targets.append(None)
            slots.append(None)
        else:
            targets.append(int(team.ids[i, slot]))
            slots.append(int(slot))
    return PolicyDecision(targets=tuple(targets), slots=tuple(slots))


def gnn_policy(world: WorldState, cfg: GameConfig, model: ModelParams) -> PolicyDecision:
    """Local features + comm graph -> network -> best valid slot per defender."""
    return _decide(world, cfg, model)


def mlp_policy(world: WorldState, cfg: GameConfig, mlp_model: ModelParams) -> PolicyDecision:
    """Same decoding with the graph-free variant; no defender sees another's features."""
    if mlp_model.hyper.use_graph:
        raise ShapeError("mlp_policy needs a model built with use_graph=False")
    return _decide(world, cfg, mlp_model)


class GNNPolicy:
    name = PolicyName.GNN.value

    def __init__(self, model: ModelParams):
        self.model = model

    def reset(self, seed: int) -> None:
        pass

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        return gnn_policy(world, cfg, self.model)


class MLPPolicy:
    name = PolicyName.MLP.value

    def __init__(self, model: ModelParams):
        self.model = model

    def reset(self, seed: int) -> None:
        pass

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        return mlp_policy(world, cfg, self.model)


__all__ = ["gnn_policy", "mlp_policy", "GNNPolicy", "MLPPolicy"]
