"""
Uncoordinated baselines over the k-hop sensible region.

Both see what the GNN could learn about through k communication exchanges,
but each defender decides alone, so several may chase the same intruder.
"""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from perimeter_defense.errors import AlreadyAtPerimeter, NoBracket, SolverError
from perimeter_defense.game.breach import solve_pair
from perimeter_defense.policies.base import PolicyDecision, PolicyName
from perimeter_defense.sim.perception import (
    build_comm_graph,
    hop_distances,
    khop_sensible,
    visibility_matrix,
)
from perimeter_defense.sim.world import GameConfig, WorldState

log = logging.getLogger(__name__)

DEFAULT_HOPS = 1
RANDOM_SEED_OFFSET = 7919


def _sensible_sets(world: WorldState, cfg: GameConfig, k: int) -> List[List[int]]:
    vis = visibility_matrix(world, cfg.perception.fov)
    hops = hop_distances(build_comm_graph(world.defenders, cfg.perception.r_c, world.radius))
    out: List[List[int]] = []
    for i, d in enumerate(world.defenders):
        if not d.alive:
            out.append([])
        else:
            out.append(sorted(khop_sensible(i, world, cfg.perception, k, vis=vis, hops=hops)))
    return out


def argmin_payoff(row: Sequence[Optional[float]]) -> Optional[int]:
    """Index of the smallest present payoff; ties go to the lowest index."""
    best: Optional[int] = None
    best_p = math.inf
    for j, p in enumerate(row):
        if p is not None and p < best_p:
            best, best_p = j, p
    return best


def greedy_policy(world: WorldState, cfg: GameConfig, k: int = DEFAULT_HOPS) -> PolicyDecision:
    """Each defender takes the sensible intruder with the smallest payoff."""
    R = world.radius
    targets: List[Optional[int]] = []
    for i, cands in enumerate(_sensible_sets(world, cfg, k)):
        d = world.defenders[i]
        row: List[Optional[float]] = []
        for j in cands:
            try:
                row.append(solve_pair(d, world.intruders[j], R, cfg.nu, tol=cfg.solver_tol).payoff)
            except (NoBracket, SolverError, AlreadyAtPerimeter) as e:
                log.debug("greedy payoff (%d, %d) absent: %s", i, j, e)
                row.append(None)
        pick = argmin_payoff(row)
        targets.append(None if pick is None else cands[pick])
    return PolicyDecision(targets=tuple(targets), slots=(None,) * len(targets))


def random_policy(
    world: WorldState,
    cfg: GameConfig,
    k: int = DEFAULT_HOPS,
    rng: Optional[np.random.Generator] = None,
) -> PolicyDecision:
    """Each defender picks uniformly among its sensible intruders."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed + RANDOM_SEED_OFFSET)
    targets: List[Optional[int]] = []
    for cands in _sensible_sets(world, cfg, k):
        targets.append(cands[int(rng.integers(len(cands)))] if cands else None)
    return PolicyDecision(targets=tuple(targets), slots=(None,) * len(targets))


class GreedyPolicy:
    name = PolicyName.GREEDY.value

    def __init__(self, k: int = DEFAULT_HOPS):
        self.k = k

    def reset(self, seed: int) -> None:
        pass

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        return greedy_policy(world, cfg, self.k)


class RandomPolicy:
    name = PolicyName.RANDOM.value

    def __init__(self, k: int = DEFAULT_HOPS, seed: int = 0):
        self.k = k
        self.rng = np.random.default_rng(seed + RANDOM_SEED_OFFSET)

    def reset(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed + RANDOM_SEED_OFFSET)

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision:
        return random_policy(world, cfg, self.k, self.rng)


__all__ = [
    "argmin_payoff",
    "greedy_policy",
    "random_policy",
    "GreedyPolicy",
    "RandomPolicy",
]
