"""
Policy names and the shared decision type.
"""

from enum import Enum

from perimeter_defense.sim.simulator import Policy, PolicyDecision


class PolicyName(str, Enum):
    EXPERT = "expert"
    GNN = "gnn"
    GREEDY = "greedy"
    RANDOM = "random"
    MLP = "mlp"

    @property
    def learned(self) -> bool:
        return self in (PolicyName.GNN, PolicyName.MLP)


__all__ = ["PolicyName", "Policy", "PolicyDecision"]
