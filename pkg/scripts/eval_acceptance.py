#!/usr/bin/env python3
"""
Lightweight eval harness for the solver, matching and simulation checks.

Usage:
  python scripts/eval_acceptance.py
  python scripts/eval_acceptance.py --model data/models/gnn.json --trials 50
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from perimeter_defense.game.breach import BreachInstance, residuals, solve_breach  # noqa: E402
from perimeter_defense.game.matching import (  # noqa: E402
    PayoffMatrix,
    brute_force_matching,
    expert_matching,
)
from perimeter_defense.harness import ExperimentSpec, mean_fraction, run_experiment  # noqa: E402
from perimeter_defense.learning import LRSchedule, cosine_lr, load_checkpoint  # noqa: E402
from perimeter_defense.policies import ExpertPolicy, GreedyPolicy, PolicyName  # noqa: E402
from perimeter_defense.sim import GameConfig, run_episode, scale_radius  # noqa: E402


def eval_breach() -> list[str]:
    failures = []
    rng = np.random.default_rng(0)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        inst = BreachInstance(
            psi=float(rng.uniform(0.0, math.pi)),
            phi=float(rng.uniform(0.0, math.pi / 2)),
            r=float(rng.uniform(1.01, 5.0)),
        )
        sol = solve_breach(inst)
        worst = max(worst, *map(abs, residuals(inst, sol)))
    elapsed = time.perf_counter() - start
    if worst >= 1e-8:
        failures.append(f"breach: worst residual {worst:.3e}")
    print(f"breach: 1000 solves in {elapsed:.2f}s, worst residual {worst:.2e}")

    sol = solve_breach(BreachInstance(psi=0.0, phi=0.4, r=2.5))
    if sol.theta_star != 0.0 or sol.beta_star != math.pi / 2:
        failures.append(f"breach: aligned instance gave theta={sol.theta_star}, beta={sol.beta_star}")
    for _ in range(50):
        kw = dict(
            psi=float(rng.uniform(0.01, math.pi)),
            phi=float(rng.uniform(0.0, 1.5)),
            r=float(rng.uniform(1.1, 4.0)),
        )
        pos = solve_breach(BreachInstance(**kw))
        neg = solve_breach(BreachInstance(sign=-1, **kw))
        if abs(pos.payoff - neg.payoff) > 1e-12 or pos.breach_psi_abs != -neg.breach_psi_abs:
            failures.append(f"breach: reflection not symmetric for {kw}")
            break
    return failures


def eval_matching() -> list[str]:
    failures = []
    rng = np.random.default_rng(1)
    for k in range(200):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        p = rng.normal(0.0, 1.0, size=(n, m))
        p[rng.random((n, m)) < 0.2] = np.nan
        P = PayoffMatrix(p=p)
        fast, slow = expert_matching(P), brute_force_matching(P)
        if fast.strong_count != slow.strong_count or abs(fast.value - slow.value) >= 1e-9:
            failures.append(
                f"matching: case {k} gave ({fast.strong_count}, {fast.value}) "
                f"vs oracle ({slow.strong_count}, {slow.value})"
            )
    return failures


def eval_schedule() -> list[str]:
    failures = []
    sched = LRSchedule()
    if cosine_lr(0, sched) != 5e-3 or cosine_lr(1500, sched) != 1e-6:
        failures.append("schedule: cosine endpoints are not exact")
    if scale_radius(40, 10) != 2.0:
        failures.append(f"scale: scale_radius(40, 10) = {scale_radius(40, 10)}")
    return failures


def eval_episodes() -> list[str]:
    failures = []
    for seed, n in enumerate((2, 10, 20)):
        cfg = GameConfig.for_team(n, seed=seed)
        policy = ExpertPolicy() if n <= 10 else GreedyPolicy()
        a = run_episode(cfg, policy, seed)
        b = run_episode(cfg, policy, seed)
        if a.captures + a.intrusions + a.timeouts != n:
            failures.append(f"episode: N={n} seed={seed} lost track of intruders")
        if a.model_dump() != b.model_dump():
            failures.append(f"episode: N={n} seed={seed} is not reproducible")
    return failures


def eval_policy_ordering(model_path: Path, trials: int) -> list[str]:
    failures = []
    load_checkpoint(model_path)
    spec = ExperimentSpec(
        team_sizes=[10],
        policies=[PolicyName.EXPERT, PolicyName.GNN, PolicyName.RANDOM],
        trials=trials,
        model_path=model_path,
    )
    result = run_experiment(spec)
    expert = mean_fraction(result, 10, "expert")
    gnn = mean_fraction(result, 10, "gnn")
    rand = mean_fraction(result, 10, "random")
    print(f"N=10: expert={expert:.3f} gnn={gnn:.3f} random={rand:.3f}")
    if gnn > expert:
        failures.append(f"ordering: gnn {gnn:.3f} beats expert {expert:.3f}")
    if rand > 0 and gnn / rand < 1.2:
        failures.append(f"ordering: gnn/random = {gnn / rand:.3f} < 1.2")
    if expert > 0 and gnn / expert < 0.75:
        failures.append(f"ordering: gnn/expert = {gnn / expert:.3f} < 0.75")

    scale = ExperimentSpec(
        team_sizes=[50],
        policies=[PolicyName.GNN, PolicyName.RANDOM],
        trials=max(1, min(trials, 20)),
        model_path=model_path,
    )
    result = run_experiment(scale)
    gnn50, rand50 = mean_fraction(result, 50, "gnn"), mean_fraction(result, 50, "random")
    print(f"N=50: gnn={gnn50:.3f} random={rand50:.3f}")
    if gnn50 < rand50:
        failures.append(f"scale: gnn {gnn50:.3f} below random {rand50:.3f} at N=50")
    return failures


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--model", type=Path, help="Trained GNN checkpoint for the policy checks")
    parser.add_argument("--trials", type=int, default=50)
    args = parser.parse_args(argv)

    failures = []
    failures.extend(eval_breach())
    failures.extend(eval_matching())
    failures.extend(eval_schedule())
    failures.extend(eval_episodes())
    if args.model is not None:
        failures.extend(eval_policy_ordering(args.model, args.trials))

    if failures:
        print("EVAL FAILURES:")
        for f in failures:
            print(f" - {f}")
        return 1

    print("All evals passed.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
