"""
N-vs-N episode engine.

One step: policy decisions -> breaching targets -> unit-speed motion ->
capture resolution -> intrusion resolution -> clock. Targets for every
agent are computed from the world at the start of the step, then all
agents move simultaneously.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Any, Dict, List, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, Field

from perimeter_defense.errors import AlreadyAtPerimeter, NoBracket, SolverError
from perimeter_defense.game.breach import solve_pair
from perimeter_defense.game.geometry import (
    DefenderPose,
    IntruderPose,
    IntruderStatus,
    Point3,
    capture_distance,
    intruder_cartesian,
    perimeter_point,
    step_defender,
    step_intruder,
)
from perimeter_defense.game.matching import MatchingResult, PayoffMatrix, expert_matching
from perimeter_defense.sim.world import GameConfig, OpponentRule, WorldState, init_random

log = logging.getLogger(__name__)

# r <= R * (1 + INTRUSION_RTOL) counts as reaching the perimeter
INTRUSION_RTOL = 1e-9


# ============================================================================
# Policy contract
# ============================================================================

@dataclass(frozen=True)
class PolicyDecision:
    """Per-defender intruder choice (world index) and, for learned policies, the local slot."""

    targets: Tuple[Optional[int], ...]
    slots: Tuple[Optional[int], ...] = ()

    @classmethod
    def none(cls, n: int) -> "PolicyDecision":
        return cls(targets=(None,) * n, slots=(None,) * n)

    def without_consumed(self, world: WorldState) -> "PolicyDecision":
        """Drop choices that point at intruders no longer active."""
        targets = tuple(
            j if j is not None and world.intruders[j].active else None for j in self.targets
        )
        return replace(self, targets=targets)


class Policy(Protocol):
    """Anything that assigns defenders to intruders."""

    name: str

    def reset(self, seed: int) -> None: ...

    def decide(self, world: WorldState, cfg: GameConfig) -> PolicyDecision: ...


# ============================================================================
# Payoffs over a world
# ============================================================================

def pair_payoffs(
    world: WorldState,
    cfg: GameConfig,
    mask: Optional[np.ndarray] = None,
) -> PayoffMatrix:
    """
    One-on-one payoffs for every (alive defender, active intruder) pair.

    Pairs outside `mask`, intruders already at the ring and pairs whose
    breach solve fails are absent.
    """
    n_def, n_int = len(world.defenders), len(world.intruders)
    P = PayoffMatrix.empty(n_def, n_int)
    R = world.radius
    for i, d in enumerate(world.defenders):
        if not d.alive:
            continue
        for j, a in enumerate(world.intruders):
            if not a.active or a.r <= R:
                continue
            if mask is not None and not mask[i, j]:
                continue
            try:
                P.p[i, j] = solve_pair(d, a, R, cfg.nu, tol=cfg.solver_tol).payoff
            except (NoBracket, SolverError, AlreadyAtPerimeter) as e:
                log.debug("payoff (%d, %d) absent: %s", i, j, e)
    return P


def full_information_matching(world: WorldState, cfg: GameConfig) -> MatchingResult:
    """Expert matching with every live pair sensible (omniscient intruders)."""
    return expert_matching(pair_payoffs(world, cfg))


# ============================================================================
# Events and logs
# ============================================================================

class EventKind(str, Enum):
    CAPTURE = "capture"
    INTRUSION = "intrusion"


class EpisodeEvent(BaseModel):
    time: float
    kind: EventKind
    defender: Optional[int] = None
    intruder: int
    location: Tuple[float, float, float]


class EpisodeLog(BaseModel):
    """Outcome of one episode; one JSON document per episode."""

    config: Dict[str, Any]
    seed: int
    policy: str
    n: int
    events: List[EpisodeEvent] = Field(default_factory=list)
    terminal_time: float = 0.0
    captures: int = 0
    intrusions: int = 0
    timeouts: int = 0
    initial_fingerprint: str = ""
    snapshots: List[Dict[str, Any]] = Field(default_factory=list)

    @property
    def fraction_caught(self) -> float:
        return self.captures / self.n if self.n else 0.0


# ============================================================================
# Stepping
# ============================================================================

def _radial_foot(a: IntruderPose) -> Tuple[float, float]:
    return a.psi, 0.0


def _defender_target(
    d: DefenderPose,
    a: IntruderPose,
    cfg: GameConfig,
    R: float,
) -> Tuple[float, float]:
    if a.r <= cfg.near_perimeter_factor * R:
        return _radial_foot(a)
    try:
        sol = solve_pair(d, a, R, cfg.nu, tol=cfg.solver_tol)
    except (NoBracket, SolverError, AlreadyAtPerimeter) as e:
        log.debug("defender falls back to radial target: %s", e)
        return _radial_foot(a)
    return sol.breach_psi_abs, 0.0


def _nearest_defender(world: WorldState, a: IntruderPose) -> Optional[int]:
    best: Optional[int] = None
    best_dist = float("inf")
    for i, d in enumerate(world.defenders):
        if not d.alive:
            continue
        dist = capture_distance(d, a, world.radius)
        if dist < best_dist:
            best, best_dist = i, dist
    return best


def _intruder_target(
    world: WorldState,
    j: int,
    cfg: GameConfig,
    matched: Optional[Dict[int, int]],
) -> Point3:
    R = world.radius
    a = world.intruders[j]
    if a.r <= cfg.near_perimeter_factor * R:
        return perimeter_point(a.psi, R)

    opponent: Optional[int] = None
    if matched is not None:
        opponent = matched.get(j)
    if opponent is None:
        opponent = _nearest_defender(world, a)
    if opponent is None:
        return perimeter_point(a.psi, R)

    try:
        sol = solve_pair(world.defenders[opponent], a, R, cfg.nu, tol=cfg.solver_tol)
    except (NoBracket, SolverError, AlreadyAtPerimeter) as e:
        log.debug("intruder %d falls back to radial target: %s", j, e)
        return perimeter_point(a.psi, R)
    return perimeter_point(sol.breach_psi_abs, R)


def _resolve_captures(
    defenders: List[DefenderPose],
    intruders: List[IntruderPose],
    epsilon: float,
    R: float,
    t: float,
) -> List[EpisodeEvent]:
    close: List[Tuple[float, int, int]] = []
    for i, d in enumerate(defenders):
        if not d.alive:
            continue
        for j, a in enumerate(intruders):
            if not a.active:
                continue
            dist = capture_distance(d, a, R)
            if dist <= epsilon:
                close.append((dist, i, j))
    close.sort()

    events: List[EpisodeEvent] = []
    for _, i, j in close:
        if not defenders[i].alive or not intruders[j].active:
            continue
        defenders[i] = replace(defenders[i], alive=False)
        intruders[j] = replace(intruders[j], status=IntruderStatus.CAPTURED)
        events.append(
            EpisodeEvent(
                time=t,
                kind=EventKind.CAPTURE,
                defender=i,
                intruder=j,
                location=intruder_cartesian(intruders[j]).as_tuple(),
            )
        )
    return events


def advance(
    world: WorldState,
    decisions: PolicyDecision,
    cfg: GameConfig,
) -> Tuple[WorldState, List[EpisodeEvent]]:
    """One simulation step; returns the new world and the events it produced."""
    R = world.radius
    dt = cfg.dt

    matched: Optional[Dict[int, int]] = None
    if cfg.intruder_opponent_rule is OpponentRule.EXPERT_MATCHED:
        matched = {j: i for i, j in full_information_matching(world, cfg).pairs()}

    defender_targets: List[Optional[Tuple[float, float]]] = []
    for i, d in enumerate(world.defenders):
        j = decisions.targets[i] if i < len(decisions.targets) else None
        if not d.alive or j is None or not world.intruders[j].active:
            defender_targets.append(None)
        else:
            defender_targets.append(_defender_target(d, world.intruders[j], cfg, R))

    intruder_targets: List[Optional[Point3]] = [
        _intruder_target(world, j, cfg, matched) if a.active else None
        for j, a in enumerate(world.intruders)
    ]

    defenders = [
        d if tgt is None else step_defender(d, tgt[0], tgt[1], dt, R)
        for d, tgt in zip(world.defenders, defender_targets)
    ]
    intruders = [
        a if tgt is None else step_intruder(a, tgt, dt)
        for a, tgt in zip(world.intruders, intruder_targets)
    ]

    t_next = world.t + dt
    events = _resolve_captures(defenders, intruders, cfg.epsilon, R, t_next)

    for j, a in enumerate(intruders):
        if a.active and a.r <= R * (1.0 + INTRUSION_RTOL):
            intruders[j] = replace(a, status=IntruderStatus.INTRUDED)
            events.append(
                EpisodeEvent(
                    time=t_next,
                    kind=EventKind.INTRUSION,
                    intruder=j,
                    location=intruder_cartesian(a).as_tuple(),
                )
            )

    return WorldState(tuple(defenders), tuple(intruders), t=t_next, radius=R), events


def step(world: WorldState, decisions: PolicyDecision, cfg: GameConfig) -> WorldState:
    return advance(world, decisions, cfg)[0]


# ============================================================================
# Episodes
# ============================================================================

def _write_trace(trace: IO[str], k: int, world: WorldState, decisions: PolicyDecision) -> None:
    record = {"step": k, **world.to_dict(), "targets": list(decisions.targets)}
    trace.write(json.dumps(record) + "\n")


def run_episode(
    cfg: GameConfig,
    policy: Policy,
    seed: int,
    world: Optional[WorldState] = None,
    trace: Optional[IO[str]] = None,
    record_snapshots: bool = False,
) -> EpisodeLog:
    """
    Play until every intruder is consumed or the clock reaches t_max.

    Intruders still active at t_max are counted as timeouts, never as
    captures or intrusions.
    """
    if world is None:
        world = init_random(cfg, seed)
    policy.reset(seed)

    episode = EpisodeLog(
        config=cfg.model_dump(mode="json"),
        seed=seed,
        policy=policy.name,
        n=len(world.intruders),
        initial_fingerprint=world.fingerprint(),
    )

    decisions = PolicyDecision.none(len(world.defenders))
    k = 0
    while not world.done and world.t < cfg.horizon:
        if k % cfg.reassign_period == 0:
            decisions = policy.decide(world, cfg)
        else:
            decisions = decisions.without_consumed(world)
        if k % cfg.trace_every == 0:
            if trace is not None:
                _write_trace(trace, k, world, decisions)
            if record_snapshots:
                episode.snapshots.append(world.to_dict())
        world, events = advance(world, decisions, cfg)
        # clock from the step count so long runs do not drift
        k += 1
        world = world.with_clock(k * cfg.dt)
        for ev in events:
            ev.time = world.t
        episode.events.extend(events)

    episode.captures = world.count(IntruderStatus.CAPTURED)
    episode.intrusions = world.count(IntruderStatus.INTRUDED)
    episode.timeouts = world.n_active
    episode.terminal_time = world.t
    log.debug(
        "episode seed=%d policy=%s n=%d: %d captured, %d intruded, %d timeouts, T_f=%.2f",
        seed, policy.name, episode.n, episode.captures, episode.intrusions,
        episode.timeouts, episode.terminal_time,
    )
    return episode


__all__ = [
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
