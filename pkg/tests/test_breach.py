"""
One-on-one breach game: governing equations, solver, target times and payoff.
"""

import logging
import math
import time

import numpy as np
import pytest

from perimeter_defense.errors import AlreadyAtPerimeter, DomainError
from perimeter_defense.game.breach import (
    BreachInstance,
    beta_of_theta,
    deviation_payoffs,
    payoff,
    residuals,
    solve_breach,
    solve_pair,
    tau_defender,
    tau_intruder,
    theta_residual,
)
from perimeter_defense.game.geometry import DefenderPose, IntruderPose, central_angle

HALF_PI = 0.5 * math.pi


def test_beta_of_theta_examples() -> None:
    assert beta_of_theta(HALF_PI, 0.6, 1.0) == pytest.approx(0.6, abs=1e-12)
    assert beta_of_theta(0.3, HALF_PI, 1.0) == pytest.approx(HALF_PI, abs=1e-12)
    assert beta_of_theta(0.5, 0.0, 1.0) == pytest.approx(0.0, abs=1e-7)


def test_beta_of_theta_singular_point_raises() -> None:
    with pytest.raises(DomainError):
        beta_of_theta(0.0, 0.0, 1.0)


def test_theta_residual_symmetric_fixed_point() -> None:
    inst = BreachInstance(psi=0.0, phi=0.4, r=1.5)
    assert theta_residual(0.0, inst) == pytest.approx(0.0, abs=1e-15)


def test_theta_residual_changes_sign_over_range() -> None:
    inst = BreachInstance(psi=2.0, phi=0.6, r=2.5)
    lo = theta_residual(1e-6, inst)
    hi = theta_residual(math.pi - 1e-6, inst)
    assert lo > 0 > hi


def test_solve_breach_aligned_short_circuit() -> None:
    sol = solve_breach(BreachInstance(psi=0.0, phi=0.7, r=2.0))
    assert sol.theta_star == 0.0
    assert sol.beta_star == HALF_PI
    assert sol.tau_D == pytest.approx(0.7)
    assert sol.tau_A == pytest.approx(1.0)
    assert sol.payoff == pytest.approx(-0.3)


def test_rounding_level_misalignment_counts_as_aligned(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.DEBUG, logger="perimeter_defense.game.breach")
    sol = solve_breach(BreachInstance(psi=1e-17, phi=0.0, r=2.0))
    assert (sol.theta_star, sol.n_roots) == (0.0, 1)

    # 0.1 + 0.2 != 0.3 in floating point
    pair = solve_pair(DefenderPose(0.3, 0.0), IntruderPose(0.1 + 0.2, 2.0), 1.0)
    assert pair.theta_star == 0.0
    assert pair.n_roots == 1
    assert not [r for r in caplog.records if r.levelno >= logging.WARNING]


def test_solve_breach_generic_instance() -> None:
    inst = BreachInstance(psi=2.0, phi=0.6, r=2.5)
    sol = solve_breach(inst)
    assert abs(theta_residual(sol.theta_star, inst)) < 1e-8
    assert abs(sol.beta_star - beta_of_theta(sol.theta_star, 0.6, 1.0)) < 1e-10
    assert 0.0 <= sol.beta_star <= math.pi
    assert sol.theta_star >= inst.psi


def test_solve_breach_at_perimeter_raises() -> None:
    with pytest.raises(AlreadyAtPerimeter):
        solve_breach(BreachInstance(psi=1.0, phi=0.3, r=1.0))


def test_solve_breach_rejects_non_finite() -> None:
    with pytest.raises(DomainError):
        solve_breach(BreachInstance(psi=float("nan"), phi=0.3, r=2.0))


def test_tau_defender_examples() -> None:
    assert tau_defender(0.0, 0.0, 0.7, 1.0) == pytest.approx(0.7)
    assert tau_defender(HALF_PI, 0.0, 2.1, 1.0) == pytest.approx(HALF_PI)
    assert tau_defender(0.25 * math.pi, 0.3, 0.3, 2.0) == pytest.approx(0.5 * math.pi)


def test_tau_defender_matches_central_angle(rng) -> None:
    for _ in range(100):
        phi, psi, b = rng.uniform(0, HALF_PI), rng.uniform(-3, 3), rng.uniform(-3, 3)
        assert tau_defender(phi, psi, b, 1.3) == 1.3 * central_angle(phi, psi, 0.0, b)


def test_tau_intruder_examples() -> None:
    assert tau_intruder(2.0, 0.0, 0.0, 1.0) == pytest.approx(1.0)
    assert tau_intruder(1.0, math.pi, 0.0, 1.0) == pytest.approx(2.0)
    assert tau_intruder(1.0, 0.4, 0.4, 1.0) == pytest.approx(0.0, abs=1e-7)


def test_payoff_examples() -> None:
    p = payoff(DefenderPose(0.0, 0.25 * math.pi), IntruderPose(0.0, 1.5), 1.0)
    assert p == pytest.approx(0.25 * math.pi - 0.5, abs=1e-12)
    assert payoff(DefenderPose(0.0, 0.0), IntruderPose(0.0, 3.0), 1.0) == pytest.approx(-2.0)


def test_payoff_sign_symmetric() -> None:
    d = DefenderPose(0.4, 0.5)
    plus = solve_pair(d, IntruderPose(0.4 + 1.2, 2.0), 1.0)
    minus = solve_pair(d, IntruderPose(0.4 - 1.2, 2.0), 1.0)
    assert plus.payoff == pytest.approx(minus.payoff, abs=1e-12)
    assert plus.tau_D == pytest.approx(minus.tau_D, abs=1e-12)
    assert plus.tau_A == pytest.approx(minus.tau_A, abs=1e-12)
    # breach azimuths mirror about the defender
    assert plus.breach_psi_abs - 0.4 == pytest.approx(0.4 - minus.breach_psi_abs, abs=1e-12)


def test_target_times_scale_with_radius() -> None:
    small = solve_pair(DefenderPose(0.0, 0.3), IntruderPose(1.0, 2.0), 1.0)
    big = solve_pair(DefenderPose(0.0, 0.3), IntruderPose(1.0, 4.0), 2.0)
    assert big.theta_star == pytest.approx(small.theta_star, abs=1e-12)
    assert big.payoff == pytest.approx(2.0 * small.payoff, abs=1e-10)


def test_residuals_on_random_instances_are_tiny() -> None:
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        inst = BreachInstance(
            psi=float(rng.uniform(1e-3, math.pi - 1e-3)),
            phi=float(rng.uniform(0.05, HALF_PI - 0.05)),
            r=float(rng.uniform(1.05, 5.0)),
        )
        sol = solve_breach(inst)
        beta_res, theta_res = residuals(inst, sol)
        worst = max(worst, abs(beta_res), abs(theta_res))
    elapsed = time.perf_counter() - start
    assert worst < 1e-8
    # generous on slow CI machines
    assert elapsed < 10.0


def test_zero_azimuth_is_exact_for_any_elevation(rng) -> None:
    for phi in rng.uniform(0.0, HALF_PI, 20):
        sol = solve_breach(BreachInstance(psi=0.0, phi=float(phi), r=3.0))
        assert sol.theta_star == 0.0
        assert sol.beta_star == HALF_PI


def test_breach_point_is_stationary_under_deviation() -> None:
    rng = np.random.default_rng(7)
    for _ in range(50):
        inst = BreachInstance(
            psi=float(rng.uniform(0.3, 2.5)),
            phi=float(rng.uniform(0.2, 1.2)),
            r=float(rng.uniform(1.5, 4.0)),
        )
        sol = solve_breach(inst)
        lo, mid, hi = deviation_payoffs(inst, sol, delta=0.01)
        assert mid == pytest.approx(sol.payoff, abs=1e-12)
        assert abs(hi - lo) <= 1e-4
        assert abs(hi - mid) <= 5e-3
        assert abs(lo - mid) <= 5e-3


def test_solution_serializes() -> None:
    d = solve_breach(BreachInstance(psi=1.0, phi=0.4, r=2.0)).to_dict()
    assert set(d) == {
        "theta_star", "beta_star", "breach_psi_abs", "tau_D", "tau_A", "payoff", "n_roots",
    }
