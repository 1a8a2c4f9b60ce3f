"""
One-on-one hemisphere game: optimal breaching point, target times and payoff.

There is no closed form for the optimal breaching angle theta*. It is the
root of

    g(theta) = psi - beta(theta) + acos(cos(beta(theta)) / r) - theta

with beta(theta) = acos(nu * cos(phi) sin(theta) / sqrt(1 - cos^2(phi) cos^2(theta))).

The solver scans g over 64 uniform cells of [0, pi] for sign changes and
refines each bracket by bisection. Everything is solved in units of R
(r normalized); target times are rescaled by R afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import optimize

from perimeter_defense.errors import AlreadyAtPerimeter, DomainError, NoBracket, SolverError
from perimeter_defense.game.geometry import (
    HALF_PI,
    DefenderPose,
    IntruderPose,
    central_angle,
    wrap_angle,
)

log = logging.getLogger(__name__)

SCAN_CELLS = 64
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

# Governing equations are evaluated with phi >= PHI_FLOOR; at phi = 0 the
# beta equation degenerates to a step function with no sign change near pi.
PHI_FLOOR = 1e-8
THETA_MARGIN = 1e-12
# |psi| at or below this is an aligned pair (breach straight below the defender)
ALIGNED_PSI = 1e-12
_CLAMP_GUARD = 1e-12


# ============================================================================
# Types
# ============================================================================

@dataclass(frozen=True)
class BreachInstance:
    """
    A one-on-one game in the relative frame.

    psi is |psi_A - psi_D| folded into [0, pi]; `sign` remembers the
    original orientation so the breaching point can be unfolded. r is the
    intruder radius in units of R. psi_d and radius place the instance in
    the world for the absolute breaching azimuth and the target times.
    """

    psi: float
    phi: float
    r: float
    nu: float = 1.0
    sign: int = 1
    psi_d: float = 0.0
    radius: float = 1.0

    @classmethod
    def from_poses(
        cls,
        defender: DefenderPose,
        intruder: IntruderPose,
        R: float,
        nu: float = 1.0,
    ) -> "BreachInstance":
        if not R > 0:
            raise DomainError(f"dome radius must be positive, got {R!r}")
        rel = wrap_angle(intruder.psi - defender.psi)
        return cls(
            psi=abs(rel),
            phi=defender.phi,
            r=intruder.r / R,
            nu=nu,
            sign=-1 if rel < 0 else 1,
            psi_d=defender.psi,
            radius=R,
        )


@dataclass(frozen=True)
class BreachSolution:
    """Optimal breaching point of one defender-intruder pair."""

    theta_star: float
    beta_star: float
    breach_psi_abs: float
    tau_D: float
    tau_A: float
    payoff: float
    n_roots: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ============================================================================
# Governing equations
# ============================================================================

def _clamp_unit(x: float) -> float:
    if x > 1.0 + _CLAMP_GUARD or x < -1.0 - _CLAMP_GUARD:
        log.debug("acos argument %.17g outside [-1, 1] beyond rounding guard", x)
    return min(1.0, max(-1.0, x))


def _beta(theta: float, phi: float, nu: float) -> float:
    cphi = math.cos(phi)
    den = math.sqrt(max(0.0, 1.0 - cphi * cphi * math.cos(theta) ** 2))
    if den == 0.0:
        # phi = 0 with theta in {0, pi}: symmetric fixed point convention.
        return HALF_PI
    return math.acos(_clamp_unit(nu * cphi * math.sin(theta) / den))


def beta_of_theta(theta: float, phi: float, nu: float = 1.0) -> float:
    """Approach angle beta for a given breaching angle theta."""
    if not (math.isfinite(theta) and math.isfinite(phi) and math.isfinite(nu)):
        raise DomainError("beta_of_theta requires finite inputs")
    cphi = math.cos(phi)
    den = math.sqrt(max(0.0, 1.0 - cphi * cphi * math.cos(theta) ** 2))
    if den == 0.0:
        raise DomainError(f"beta is 0/0 at theta={theta!r}, phi={phi!r}")
    return math.acos(_clamp_unit(nu * cphi * math.sin(theta) / den))


def _residual(theta: float, psi: float, phi: float, r: float, nu: float) -> float:
    beta = _beta(theta, phi, nu)
    return psi - beta + math.acos(_clamp_unit(math.cos(beta) / r)) - theta


def theta_residual(theta: float, inst: BreachInstance) -> float:
    """g(theta); a root of g is the optimal breaching angle."""
    return _residual(theta, inst.psi, inst.phi, inst.r, inst.nu)


def _residual_grid(thetas: np.ndarray, psi: float, phi: float, r: float, nu: float) -> np.ndarray:
    cphi = math.cos(phi)
    den = np.sqrt(np.maximum(0.0, 1.0 - cphi * cphi * np.cos(thetas) ** 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, nu * cphi * np.sin(thetas) / den, 0.0)
    beta = np.arccos(np.clip(ratio, -1.0, 1.0))
    return psi - beta + np.arccos(np.clip(np.cos(beta) / r, -1.0, 1.0)) - thetas


def _scan_nodes() -> np.ndarray:
    nodes = np.linspace(0.0, math.pi, SCAN_CELLS + 1)
    nodes[0] = THETA_MARGIN
    nodes[-1] = math.pi - THETA_MARGIN
    return nodes


_NODES = _scan_nodes()


# ============================================================================
# Target times
# ============================================================================

def tau_defender(phi_D: float, psi_D: float, breach_psi: float, R: float) -> float:
    """Geodesic time (unit speed) for a defender to reach the ring point at breach_psi."""
    return R * central_angle(phi_D, psi_D, 0.0, breach_psi)


def tau_intruder(r: float, psi_A: float, breach_psi: float, R: float) -> float:
    """Straight-line time (unit speed) for an intruder to reach the ring point at breach_psi."""
    sq = r * r + R * R - 2.0 * r * R * math.cos(psi_A - breach_psi)
    return math.sqrt(max(0.0, sq))


# ============================================================================
# Solver
# ============================================================================

def _solution(inst: BreachInstance, theta: float, beta: float, n_roots: int) -> BreachSolution:
    R = inst.radius
    tau_d = tau_defender(inst.phi, 0.0, theta, R)
    tau_a = tau_intruder(inst.r * R, inst.psi, theta, R)
    return BreachSolution(
        theta_star=theta,
        beta_star=beta,
        breach_psi_abs=wrap_angle(inst.psi_d + inst.sign * theta),
        tau_D=tau_d,
        tau_A=tau_a,
        payoff=tau_d - tau_a,
        n_roots=n_roots,
    )


def solve_breach(
    inst: BreachInstance,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BreachSolution:
    """
    Optimal breaching point of a one-on-one game.

    Raises:
        AlreadyAtPerimeter: r <= 1 (intruder on or inside the ring).
        NoBracket: no sign change of g over the scan.
        SolverError: bisection did not converge.
    """
    if not (math.isfinite(inst.psi) and math.isfinite(inst.phi) and math.isfinite(inst.r)):
        raise DomainError(f"non-finite breach instance {inst!r}")
    if not inst.r > 1.0:
        raise AlreadyAtPerimeter(f"intruder at normalized radius {inst.r!r} <= 1")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")

    if abs(inst.psi) <= ALIGNED_PSI:
        return _solution(inst, 0.0, HALF_PI, 1)

    psi, r, nu = inst.psi, inst.r, inst.nu
    phi = max(inst.phi, PHI_FLOOR)
    g = _residual_grid(_NODES, psi, phi, r, nu)

    on_node = np.abs(g) <= tol
    roots: List[float] = [float(t) for t in _NODES[on_node]]
    for k in range(SCAN_CELLS):
        if on_node[k] or on_node[k + 1] or g[k] * g[k + 1] > 0.0:
            continue
        root, info = optimize.bisect(
            _residual,
            float(_NODES[k]),
            float(_NODES[k + 1]),
            args=(psi, phi, r, nu),
            xtol=tol,
            maxiter=max_iter,
            full_output=True,
            disp=False,
        )
        if not info.converged:
            raise SolverError(
                f"bisection did not converge in {max_iter} iterations for {inst!r}"
            )
        roots.append(float(root))

    if not roots:
        raise NoBracket(f"no sign change of the breaching residual for {inst!r}")

    candidates = [_solution(inst, t, _beta(t, phi, nu), len(roots)) for t in roots]
    if len(candidates) > 1:
        log.warning(
            "%d breaching roots for psi=%.6g phi=%.6g r=%.6g; keeping min tau_A",
            len(candidates), psi, inst.phi, r,
        )
    return min(candidates, key=lambda s: (s.tau_A, s.theta_star))


def solve_pair(
    defender: DefenderPose,
    intruder: IntruderPose,
    R: float,
    nu: float = 1.0,
    tol: float = DEFAULT_TOL,
) -> BreachSolution:
    """Breaching point of a defender-intruder pair given world poses."""
    return solve_breach(BreachInstance.from_poses(defender, intruder, R, nu), tol=tol)


def payoff(
    defender: DefenderPose,
    intruder: IntruderPose,
    R: float,
    nu: float = 1.0,
) -> float:
    """p = tau_D - tau_A at the optimal breaching point; p < 0 means the defender wins."""
    return solve_pair(defender, intruder, R, nu).payoff


# ============================================================================
# Checks
# ============================================================================

def residuals(inst: BreachInstance, sol: BreachSolution) -> Tuple[float, float]:
    """Residuals of the beta and theta governing equations at a solution."""
    phi = max(inst.phi, PHI_FLOOR)
    beta_eq = sol.beta_star - _beta(sol.theta_star, phi, inst.nu)
    theta_eq = sol.theta_star - (
        inst.psi - sol.beta_star + math.acos(_clamp_unit(math.cos(sol.beta_star) / inst.r))
    )
    return beta_eq, theta_eq


def deviation_payoffs(
    inst: BreachInstance,
    sol: BreachSolution,
    delta: float = 0.01,
) -> Tuple[float, float, float]:
    """
    Payoff when both players head to the breaching azimuth theta* - delta,
    theta* and theta* + delta. At the equilibrium the payoff is stationary:
    neither player gains to first order by moving the target.
    """
    R = inst.radius

    def p(theta: float) -> float:
        return tau_defender(inst.phi, 0.0, theta, R) - tau_intruder(inst.r * R, inst.psi, theta, R)

    t = sol.theta_star
    return p(t - delta), p(t), p(t + delta)


__all__ = [
    "BreachInstance",
    "BreachSolution",
    "beta_of_theta",
    "theta_residual",
    "solve_breach",
    "solve_pair",
    "tau_defender",
    "tau_intruder",
    "payoff",
    "residuals",
    "deviation_payoffs",
]
