"""
Dataset aggregation - label the states the learned policy actually visits.

Each round plays episodes with the current network, keeps every
`stride`-th decision state, labels those states with the expert, appends
them to the training split and continues training the same model.
Validation and test splits stay fixed so losses remain comparable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from perimeter_defense.learning.dataset import DatasetSplit, GraphSample, label_world
from perimeter_defense.learning.network import ModelParams
from perimeter_defense.learning.training import TrainConfig, TrainingHistory, train
from perimeter_defense.policies.learned import GNNPolicy
from perimeter_defense.sim.simulator import Policy, PolicyDecision, run_episode
from perimeter_defense.sim.world import GameConfig, WorldState

log = logging.getLogger(__name__)


class AggregationConfig(BaseModel):
    rounds: int = Field(default=2, ge=0)
    episodes: int = Field(default=20, ge=1)
    stride: int = Field(default=25, ge=1)
    team_size: int = Field(default=10, ge=1)
    seed: int = 0


@dataclass
class AggregationResult:
    model: ModelParams
    histories: List[TrainingHistory] = field(default_factory=list)
    added: List[int] = field(default_factory=list)
    train_size: int = 0


class _StateRecorder:
    """Policy wrapper that remembers every `stride`-th world it is asked about."""

    def __init__(self, inner: Policy, stride: int):
        self.inner = inner
        self.name = inner.name
        self.stride = stride
        self.worlds: List[WorldState] = []
        self._calls = 0

    def reset(self, seed: int) -> None:
        self.inner.reset(seed)
        self._calls = 0

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        if self._calls % self.stride == 0:
            self.worlds.append(world)
        self._calls += 1
        return self.inner.decide(world, cfg)


def episode_seed(seed: int, round_index: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, round_index, k]).generate_state(1)[0])


def collect_visited_states(
    model: ModelParams,
    agg: AggregationConfig,
    round_index: int = 0,
) -> List[Tuple[WorldState, GameConfig]]:
    """Worlds met by the network during `agg.episodes` episodes."""
    visited: List[Tuple[WorldState, GameConfig]] = []
    for k in range(agg.episodes):
        seed = episode_seed(agg.seed, round_index, k)
        cfg = GameConfig.for_team(agg.team_size, seed=seed)
        recorder = _StateRecorder(GNNPolicy(model), agg.stride)
        run_episode(cfg, recorder, seed)
        visited.extend((w, cfg) for w in recorder.worlds if not w.done)
    return visited


def label_visited(visited: List[Tuple[WorldState, GameConfig]]) -> List[GraphSample]:
    """Expert labels for visited states; states with no labelled defender are dropped."""
    samples = []
    for world, cfg in visited:
        sample, _ = label_world(world, cfg)
        if sample.n_labeled:
            samples.append(sample)
    return samples


def aggregate_and_train(
    model: ModelParams,
    data: DatasetSplit,
    train_cfg: TrainConfig,
    agg: Optional[AggregationConfig] = None,
) -> AggregationResult:
    """
    Train on `data`, then run `agg.rounds` aggregation rounds.

    Later rounds keep the input scaling fitted in the first one.
    """
    agg = agg or AggregationConfig()
    model, history = train(model, data, train_cfg)
    result = AggregationResult(model=model, histories=[history], train_size=len(data.train))
    train_set = list(data.train)

    for rnd in range(agg.rounds):
        new = label_visited(collect_visited_states(result.model, agg, rnd))
        train_set.extend(new)
        log.info(
            "Aggregation round %d: +%d visited states, %d training snapshots",
            rnd + 1, len(new), len(train_set),
        )
        grown = DatasetSplit(train=train_set, val=data.val, test=data.test)
        result.model, history = train(result.model, grown, train_cfg)
        result.histories.append(history)
        result.added.append(len(new))
        result.train_size = len(train_set)
    return result


__all__ = [
    "AggregationConfig",
    "AggregationResult",
    "episode_seed",
    "collect_visited_states",
    "label_visited",
    "aggregate_and_train",
]
