"""
World state and game configuration for N-vs-N play.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from perimeter_defense import config
from perimeter_defense.errors import DomainError
from perimeter_defense.game.geometry import (
    DefenderPose,
    IntruderPose,
    IntruderStatus,
    wrap_angle,
)
from perimeter_defense.sim.perception import PerceptionConfig


class OpponentRule(str, Enum):
    """How an intruder picks the defender it plays the breach game against."""

    NEAREST_DEFENDER = "nearest_defender"
    EXPERT_MATCHED = "expert_matched"


def scale_radius(n: int, n_def: int = 10) -> float:
    """Dome radius R = sqrt(n / n_def) for a team of n (base radius 1 m)."""
    if n < 1 or n_def < 1:
        raise DomainError(f"team sizes must be >= 1, got n={n}, n_def={n_def}")
    return math.sqrt(n / n_def)


class GameConfig(BaseModel):
    """Parameters of one N-vs-N game. Unset fields take PD_* environment defaults."""

    n: int = Field(ge=1)
    n_def: int = Field(default_factory=config.default_n_def, ge=1)
    base_radius: float = Field(default=1.0, gt=0)
    radius: Optional[float] = Field(default=None, gt=0)
    dt: float = Field(default_factory=config.default_dt, gt=0)
    epsilon: float = Field(default_factory=config.default_epsilon, gt=0)
    t_max: Optional[float] = Field(default=None, gt=0)
    t_max_factor: float = Field(default_factory=config.default_t_max_factor, gt=0)
    nu: float = Field(default_factory=config.default_nu, gt=0)
    seed: int = 0
    intruder_opponent_rule: OpponentRule = Field(
        default_factory=lambda: OpponentRule(config.default_intruder_rule())
    )
    reassign_period: int = Field(default=1, ge=1)
    perception: PerceptionConfig = Field(default_factory=PerceptionConfig)
    solver_tol: float = Field(default_factory=config.default_solver_tol, gt=0)
    near_perimeter_factor: float = Field(default=1.05, ge=1.0)
    trace_every: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _derive(self) -> "GameConfig":
        if not self.dt < self.epsilon:
            raise ValueError(f"dt ({self.dt}) must be smaller than epsilon ({self.epsilon})")
        if self.radius is None:
            self.radius = self.base_radius * scale_radius(self.n, self.n_def)
        if self.t_max is None:
            self.t_max = self.t_max_factor * self.radius
        return self

    @classmethod
    def for_team(cls, n: int, **overrides: Any) -> "GameConfig":
        return cls(n=n, **overrides)

    @property
    def R(self) -> float:
        assert self.radius is not None
        return self.radius

    @property
    def horizon(self) -> float:
        assert self.t_max is not None
        return self.t_max


@dataclass(frozen=True)
class WorldState:
    """Poses of every defender and intruder plus the game clock."""

    defenders: Tuple[DefenderPose, ...]
    intruders: Tuple[IntruderPose, ...]
    t: float = 0.0
    radius: float = 1.0

    @property
    def n_active(self) -> int:
        return sum(1 for a in self.intruders if a.active)

    @property
    def done(self) -> bool:
        return self.n_active == 0

    def count(self, status: IntruderStatus) -> int:
        return sum(1 for a in self.intruders if a.status is status)

    def with_clock(self, t: float) -> "WorldState":
        return replace(self, t=t)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "radius": self.radius,
            "defenders": [
                {"psi": d.psi, "phi": d.phi, "alive": d.alive} for d in self.defenders
            ],
            "intruders": [
                {"psi": a.psi, "r": a.r, "status": a.status.value} for a in self.intruders
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorldState":
        return cls(
            defenders=tuple(
                DefenderPose(psi=d["psi"], phi=d["phi"], alive=d.get("alive", True))
                for d in data["defenders"]
            ),
            intruders=tuple(
                IntruderPose(
                    psi=a["psi"], r=a["r"], status=IntruderStatus(a.get("status", "active"))
                )
                for a in data["intruders"]
            ),
            t=data.get("t", 0.0),
            radius=data.get("radius", 1.0),
        )

    def fingerprint(self) -> str:
        """sha256 of the serialized state; equal fingerprints mean identical worlds."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def init_random(cfg: GameConfig, seed: int) -> WorldState:
    """
    Random initial world.

    Defenders are area-uniform on the dome (uniform psi, phi = asin(u));
    intruders are uniform in azimuth with r uniform in (1.5 R, 5 R].
    """
    R = cfg.R
    rng = np.random.default_rng(seed)
    d_psi = rng.uniform(-math.pi, math.pi, size=cfg.n)
    d_phi = np.arcsin(rng.uniform(0.0, 1.0, size=cfg.n))
    a_psi = rng.uniform(-math.pi, math.pi, size=cfg.n)
    a_r = 5.0 * R - rng.uniform(0.0, 3.5 * R, size=cfg.n)

    defenders = tuple(
        DefenderPose(psi=wrap_angle(float(p)), phi=float(f)) for p, f in zip(d_psi, d_phi)
    )
    intruders = tuple(
        IntruderPose(psi=wrap_angle(float(p)), r=float(r)) for p, r in zip(a_psi, a_r)
    )
    return WorldState(defenders=defenders, intruders=intruders, t=0.0, radius=R)


__all__ = [
    "OpponentRule",
    "GameConfig",
    "WorldState",
    "scale_radius",
    "init_random",
]
