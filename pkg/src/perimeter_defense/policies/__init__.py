"""
Assignment policies: expert matching, the learned GNN and MLP, greedy and random.
"""

# expert before learned: importing the learning package pulls in policies.expert
from perimeter_defense.policies.base import Policy, PolicyDecision, PolicyName
from perimeter_defense.policies.expert import ExpertPolicy, expert_policy
from perimeter_defense.policies.baselines import (  # noqa: I001
    GreedyPolicy,
    RandomPolicy,
    argmin_payoff,
    greedy_policy,
    random_policy,
)
from perimeter_defense.policies.learned import GNNPolicy, MLPPolicy, gnn_policy, mlp_policy
from perimeter_defense.policies.factory import make_policy

__all__ = [
    "Policy",
    "PolicyDecision",
    "PolicyName",
    "expert_policy",
    "ExpertPolicy",
    "argmin_payoff",
    "greedy_policy",
    "random_policy",
    "GreedyPolicy",
    "RandomPolicy",
    "gnn_policy",
    "mlp_policy",
    "GNNPolicy",
    "MLPPolicy",
    "make_policy",
]
