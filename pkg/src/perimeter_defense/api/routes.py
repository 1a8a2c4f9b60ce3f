"""
Perimeter Defense API Routes

HTTP endpoints for the breach solver, expert matching and short simulations.
"""

import logging
from typing import Any, Dict, List, Literal, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from perimeter_defense.errors import PerimeterDefenseError
from perimeter_defense.game.breach import BreachInstance, residuals, solve_breach
from perimeter_defense.game.geometry import wrap_angle
from perimeter_defense.game.matching import PayoffMatrix, expert_matching
from perimeter_defense.policies import make_policy
from perimeter_defense.sim.simulator import run_episode
from perimeter_defense.sim.world import GameConfig

log = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["Perimeter Defense"])

MAX_API_TEAM = 50


# ============== Request Models ==============

class BreachRequest(BaseModel):
    """One-on-one game in the relative frame; psi may be signed."""
    psi: float
    phi: float = Field(ge=0.0)
    r: float
    nu: float = Field(default=1.0, gt=0.0)


class MatchRequest(BaseModel):
    """Payoff matrix, null for absent pairs."""
    payoffs: List[List[Optional[float]]]


class SimulateRequest(BaseModel):
    n: int = Field(ge=1, le=MAX_API_TEAM)
    policy: Literal["expert", "greedy", "random"] = "expert"
    seed: int = 0


# ============== Endpoints ==============

@router.post("/breach")
async def breach(req: BreachRequest) -> Dict[str, Any]:
    rel = wrap_angle(req.psi)
    inst = BreachInstance(psi=abs(rel), phi=req.phi, r=req.r, nu=req.nu, sign=-1 if rel < 0 else 1)
    try:
        sol = solve_breach(inst)
    except PerimeterDefenseError as e:
        raise HTTPException(status_code=422, detail=str(e))
    beta_res, theta_res = residuals(inst, sol)
    return {**sol.to_dict(), "residuals": [beta_res, theta_res]}


@router.post("/match")
async def match(req: MatchRequest) -> Dict[str, Any]:
    try:
        result = expert_matching(PayoffMatrix.from_rows(req.payoffs))
    except PerimeterDefenseError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return result.to_dict()


@router.post("/simulate")
def simulate(req: SimulateRequest) -> Dict[str, Any]:
    try:
        cfg = GameConfig.for_team(req.n, seed=req.seed)
        episode = run_episode(cfg, make_policy(req.policy), req.seed)
    except PerimeterDefenseError as e:
        raise HTTPException(status_code=422, detail=str(e))
    log.info("API simulate n=%d policy=%s: %d captured", req.n, req.policy, episode.captures)
    return {
        "n": episode.n,
        "policy": episode.policy,
        "seed": episode.seed,
        "captures": episode.captures,
        "intrusions": episode.intrusions,
        "timeouts": episode.timeouts,
        "terminal_time": episode.terminal_time,
        "fraction": episode.fraction_caught,
    }
