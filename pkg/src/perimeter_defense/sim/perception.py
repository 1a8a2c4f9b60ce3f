"""
Decentralized perception - FOV-limited detection, fixed-size feature rows
and the communication graph.

Feature layout per defender (frozen, part of the dataset format):
    n_af rows of (psi, phi, r) for the closest visible intruders, then
    n_df rows of (dpsi, dphi, chord / R) for the closest neighbors in range.
Empty slots hold the dummy triple and are masked off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from perimeter_defense import config
from perimeter_defense.game.geometry import (
    TWO_PI,
    DefenderPose,
    IntruderPose,
    RelativeCoord,
    chord_matrix,
    wrap_angle,
)

if TYPE_CHECKING:
    from perimeter_defense.sim.world import WorldState

FEATURES_PER_SLOT = 3
_FOV_GUARD = 1e-12


class PerceptionConfig(BaseModel):
    """Sensing and communication parameters shared by every defender."""

    fov: float = Field(default_factory=config.default_fov)
    n_af: int = Field(default_factory=config.default_n_af, ge=1)
    n_df: int = Field(default_factory=config.default_n_df, ge=1)
    r_c: float = Field(default_factory=config.default_comm_range, gt=0)
    dummy: Tuple[float, float, float] = (0.0, 0.0, 10.0)

    @field_validator("fov")
    @classmethod
    def _fov_range(cls, v: float) -> float:
        if not 0.0 < v <= TWO_PI:
            raise ValueError(f"fov must lie in (0, 2*pi], got {v}")
        return v

    @property
    def in_features(self) -> int:
        return FEATURES_PER_SLOT * (self.n_af + self.n_df)


@dataclass(frozen=True)
class LocalPerception:
    """What one defender knows: its intruder and neighbor slots with validity masks."""

    intruder_feats: np.ndarray
    intruder_ids: Tuple[Optional[int], ...]
    intruder_mask: np.ndarray
    defender_feats: np.ndarray
    defender_ids: Tuple[Optional[int], ...]
    defender_mask: np.ndarray

    def feature_row(self) -> np.ndarray:
        return np.concatenate([self.intruder_feats.ravel(), self.defender_feats.ravel()])

    def slot_of(self, intruder: int) -> Optional[int]:
        """Slot holding a world intruder index, if it was perceived."""
        for slot, j in enumerate(self.intruder_ids):
            if j == intruder:
                return slot
        return None


@dataclass(frozen=True)
class CommGraph:
    """Symmetric 0/1 adjacency with zero diagonal."""

    s: np.ndarray

    @property
    def n(self) -> int:
        return int(self.s.shape[0])

    def neighbors(self, i: int) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.s[i])]


@dataclass(frozen=True)
class TeamPerception:
    """Stacked perception of the whole team, ready for the network."""

    x: np.ndarray
    valid: np.ndarray
    ids: np.ndarray
    graph: CommGraph
    local: Tuple[LocalPerception, ...]


# ============================================================================
# Visibility
# ============================================================================

def _visibility(
    foot_x: np.ndarray,
    foot_y: np.ndarray,
    psi_d: np.ndarray,
    int_x: np.ndarray,
    int_y: np.ndarray,
    fov: float,
) -> np.ndarray:
    vx = int_x - foot_x
    vy = int_y - foot_y
    bx, by = np.cos(psi_d), np.sin(psi_d)
    angle = np.arctan2(np.abs(bx * vy - by * vx), bx * vx + by * vy)
    return angle <= 0.5 * fov + _FOV_GUARD


def visible(defender: DefenderPose, intruder: IntruderPose, fov: float, R: float) -> bool:
    """Whether the intruder lies inside the defender's horizontal field of view (inclusive)."""
    if not (defender.alive and intruder.active):
        return False
    foot = R * math.cos(defender.phi)
    hit = _visibility(
        np.array([foot * math.cos(defender.psi)]),
        np.array([foot * math.sin(defender.psi)]),
        np.array([defender.psi]),
        np.array([intruder.r * math.cos(intruder.psi)]),
        np.array([intruder.r * math.sin(intruder.psi)]),
        fov,
    )
    return bool(hit[0])


def visibility_matrix(world: "WorldState", fov: float) -> np.ndarray:
    """N_def x N_int boolean matrix; dead defenders and consumed intruders see / are seen by nobody."""
    R = world.radius
    d_psi = np.array([d.psi for d in world.defenders])
    d_phi = np.array([d.phi for d in world.defenders])
    alive = np.array([d.alive for d in world.defenders], dtype=bool)
    a_psi = np.array([a.psi for a in world.intruders])
    a_r = np.array([a.r for a in world.intruders])
    active = np.array([a.active for a in world.intruders], dtype=bool)
    if d_psi.size == 0 or a_psi.size == 0:
        return np.zeros((d_psi.size, a_psi.size), dtype=bool)

    foot = R * np.cos(d_phi)
    mask = _visibility(
        (foot * np.cos(d_psi))[:, None],
        (foot * np.sin(d_psi))[:, None],
        d_psi[:, None],
        (a_r * np.cos(a_psi))[None, :],
        (a_r * np.sin(a_psi))[None, :],
        fov,
    )
    return mask & alive[:, None] & active[None, :]


# ============================================================================
# Features
# ============================================================================

def relative_coord(defender: DefenderPose, intruder: IntruderPose, R: float) -> RelativeCoord:
    return RelativeCoord(
        psi=wrap_angle(intruder.psi - defender.psi),
        phi=defender.phi,
        r=intruder.r / R,
    )


def _ground_distance(defender: DefenderPose, intruder: IntruderPose, R: float) -> float:
    foot = R * math.cos(defender.phi)
    return math.hypot(
        intruder.r * math.cos(intruder.psi) - foot * math.cos(defender.psi),
        intruder.r * math.sin(intruder.psi) - foot * math.sin(defender.psi),
    )


def extract_features(
    i: int,
    world: "WorldState",
    cfg: PerceptionConfig,
    vis: Optional[np.ndarray] = None,
    chords: Optional[np.ndarray] = None,
) -> LocalPerception:
    """
    Local perception of defender i.

    Intruders are sorted by ground distance from the defender's footprint,
    then |dpsi|, dpsi and r, so storage order never matters.
    """
    R = world.radius
    dummy = np.asarray(cfg.dummy, dtype=np.float64)
    a_feats = np.tile(dummy, (cfg.n_af, 1))
    a_mask = np.zeros(cfg.n_af, dtype=bool)
    a_ids: List[Optional[int]] = [None] * cfg.n_af
    d_feats = np.tile(dummy, (cfg.n_df, 1))
    d_mask = np.zeros(cfg.n_df, dtype=bool)
    d_ids: List[Optional[int]] = [None] * cfg.n_df

    me = world.defenders[i]
    if me.alive:
        if vis is None:
            vis = visibility_matrix(world, cfg.fov)
        seen = []
        for j in np.flatnonzero(vis[i]):
            a = world.intruders[int(j)]
            rel = relative_coord(me, a, R)
            key = (_ground_distance(me, a, R), abs(rel.psi), rel.psi, rel.r)
            seen.append((key, int(j), rel))
        seen.sort(key=lambda t: t[0])
        for slot, (_, j, rel) in enumerate(seen[: cfg.n_af]):
            a_feats[slot] = (rel.psi, rel.phi, rel.r)
            a_mask[slot] = True
            a_ids[slot] = j

        if chords is None:
            chords = chord_matrix(world.defenders, R)
        near = []
        for k, other in enumerate(world.defenders):
            if k == i or not other.alive or chords[i, k] > cfg.r_c:
                continue
            dpsi = wrap_angle(other.psi - me.psi)
            dphi = other.phi - me.phi
            near.append(((float(chords[i, k]), abs(dpsi), dpsi, dphi, k), k, dpsi, dphi))
        near.sort(key=lambda t: t[0])
        for slot, (key, k, dpsi, dphi) in enumerate(near[: cfg.n_df]):
            d_feats[slot] = (dpsi, dphi, key[0] / R)
            d_mask[slot] = True
            d_ids[slot] = k

    return LocalPerception(
        intruder_feats=a_feats,
        intruder_ids=tuple(a_ids),
        intruder_mask=a_mask,
        defender_feats=d_feats,
        defender_ids=tuple(d_ids),
        defender_mask=d_mask,
    )


# ============================================================================
# Communication graph
# ============================================================================

def build_comm_graph(defenders: Sequence[DefenderPose], r_c: float, R: float) -> CommGraph:
    """Connect alive defenders whose chord distance is at most r_c."""
    n = len(defenders)
    if n == 0:
        return CommGraph(np.zeros((0, 0)))
    alive = np.array([d.alive for d in defenders], dtype=bool)
    s = (chord_matrix(defenders, R) <= r_c) & alive[:, None] & alive[None, :]
    np.fill_diagonal(s, False)
    return CommGraph(s.astype(np.float64))


def hop_distances(graph: CommGraph) -> np.ndarray:
    """All-pairs hop counts (inf when disconnected)."""
    if graph.n == 0:
        return np.zeros((0, 0))
    return np.asarray(shortest_path(csr_matrix(graph.s), unweighted=True, directed=False))


def khop_sensible(
    i: int,
    world: "WorldState",
    cfg: PerceptionConfig,
    k: int,
    vis: Optional[np.ndarray] = None,
    hops: Optional[np.ndarray] = None,
) -> FrozenSet[int]:
    """Union of visible-intruder sets of every defender within k hops of i (i included)."""
    if k < 0:
        raise ValueError(f"hop count must be non-negative, got {k}")
    if vis is None:
        vis = visibility_matrix(world, cfg.fov)
    if k == 0:
        members = np.array([i])
    else:
        if hops is None:
            hops = hop_distances(build_comm_graph(world.defenders, cfg.r_c, world.radius))
        members = np.flatnonzero(hops[i] <= k)
    if vis.shape[1] == 0:
        return frozenset()
    return frozenset(int(j) for j in np.flatnonzero(vis[members].any(axis=0)))


def perceive_team(world: "WorldState", cfg: PerceptionConfig) -> TeamPerception:
    """Feature matrix X (N x in_features), slot masks, slot->intruder ids and the comm graph."""
    vis = visibility_matrix(world, cfg.fov)
    chords = chord_matrix(world.defenders, world.radius)
    local = tuple(
        extract_features(i, world, cfg, vis=vis, chords=chords)
        for i in range(len(world.defenders))
    )
    n = len(local)
    x = np.zeros((n, cfg.in_features))
    valid = np.zeros((n, cfg.n_af), dtype=bool)
    ids = np.full((n, cfg.n_af), -1, dtype=np.int64)
    for i, lp in enumerate(local):
        x[i] = lp.feature_row()
        valid[i] = lp.intruder_mask
        ids[i] = [-1 if j is None else j for j in lp.intruder_ids]
    graph = build_comm_graph(world.defenders, cfg.r_c, world.radius)
    return TeamPerception(x=x, valid=valid, ids=ids, graph=graph, local=local)


__all__ = [
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
]
