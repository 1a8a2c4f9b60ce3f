"""
Build a policy object from its name.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from perimeter_defense.errors import CheckpointError
from perimeter_defense.learning.checkpoint import load_checkpoint
from perimeter_defense.learning.network import ModelParams
from perimeter_defense.policies.base import Policy, PolicyName
from perimeter_defense.policies.baselines import DEFAULT_HOPS, GreedyPolicy, RandomPolicy
from perimeter_defense.policies.expert import ExpertPolicy
from perimeter_defense.policies.learned import GNNPolicy, MLPPolicy


def make_policy(
    name: Union[str, PolicyName],
    model: Optional[ModelParams] = None,
    model_path: Optional[Union[str, Path]] = None,
    k: int = DEFAULT_HOPS,
) -> Policy:
    """Instantiate a policy; learned ones need a model or a checkpoint path."""
    kind = PolicyName(name)
    if kind is PolicyName.EXPERT:
        return ExpertPolicy()
    if kind is PolicyName.GREEDY:
        return GreedyPolicy(k)
    if kind is PolicyName.RANDOM:
        return RandomPolicy(k)

    if model is None:
        if model_path is None:
            raise CheckpointError(f"policy {kind.value!r} needs a model checkpoint")
        model = load_checkpoint(model_path)
    if kind is PolicyName.GNN:
        return GNNPolicy(model)
    return MLPPolicy(model)


__all__ = ["make_policy"]
