"""
Experiment orchestration - paired trials over (team size, policy), CSV output
and the sample-efficiency sweep.

Every (size, trial) pair gets one seed, and every policy starts from the world
that seed produces, so policy comparisons are paired.
"""

from __future__ import annotations

import csv
import io
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from perimeter_defense.errors import CheckpointError, DomainError
from perimeter_defense.harness.metrics import MetricsRow, TrialRecord, aggregate
from perimeter_defense.learning.checkpoint import load_checkpoint
from perimeter_defense.learning.dataset import generate_dataset, split
from perimeter_defense.learning.network import HyperParams, ModelParams, init_params
from perimeter_defense.learning.training import TrainConfig, evaluate, train
from perimeter_defense.policies import PolicyName, make_policy
from perimeter_defense.sim.simulator import run_episode
from perimeter_defense.sim.world import GameConfig, init_random

log = logging.getLogger(__name__)

EXPERT_DEFAULT_MAX_N = 10
CSV_FIELDS = [
    "size", "policy", "trial", "captures", "intrusions", "timeouts", "fraction", "terminal_time",
]


class ExperimentSpec(BaseModel):
    """Which cells to run and how many paired trials per cell."""

    team_sizes: List[int] = Field(default_factory=lambda: [2, 4, 6, 8, 10])
    policies: List[PolicyName] = Field(default_factory=lambda: list(PolicyName))
    trials: int = Field(default=10, ge=1)
    base_seed: int = 0
    model_path: Optional[Path] = None
    mlp_model_path: Optional[Path] = None
    allow_expensive: bool = False
    reassign_period: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("team_sizes")
    @classmethod
    def _sizes_positive(cls, v: List[int]) -> List[int]:
        if not v or any(n < 1 for n in v):
            raise ValueError(f"team sizes must be >= 1, got {v}")
        return v

    def cells(self) -> List[Tuple[int, PolicyName]]:
        out = []
        for size in self.team_sizes:
            for policy in self.policies:
                if (
                    policy is PolicyName.EXPERT
                    and size > EXPERT_DEFAULT_MAX_N
                    and not self.allow_expensive
                ):
                    log.warning(
                        "Skipping expert at N=%d (above %d); pass allow_expensive to run it",
                        size, EXPERT_DEFAULT_MAX_N,
                    )
                    continue
                out.append((size, policy))
        return out


@dataclass
class ExperimentResult:
    records: List[TrialRecord] = field(default_factory=list)
    rows: List[MetricsRow] = field(default_factory=list)


def trial_seed(base_seed: int, size: int, trial: int) -> int:
    """Seed shared by every policy at (size, trial)."""
    return (base_seed ^ zlib.crc32(f"{size}:{trial}".encode("utf-8"))) & 0xFFFFFFFF


def _load_models(spec: ExperimentSpec) -> Dict[PolicyName, ModelParams]:
    models: Dict[PolicyName, ModelParams] = {}
    for kind, path in ((PolicyName.GNN, spec.model_path), (PolicyName.MLP, spec.mlp_model_path)):
        if kind not in spec.policies:
            continue
        if path is None:
            raise CheckpointError(f"policy {kind.value!r} requested but no checkpoint given")
        models[kind] = load_checkpoint(path)
    return models


def run_trial(
    size: int,
    policy: PolicyName,
    trial: int,
    base_seed: int,
    model: Optional[ModelParams] = None,
    reassign_period: int = 1,
) -> TrialRecord:
    seed = trial_seed(base_seed, size, trial)
    cfg = GameConfig.for_team(size, seed=seed, reassign_period=reassign_period)
    world = init_random(cfg, seed)
    episode = run_episode(cfg, make_policy(policy, model=model), seed, world=world)
    return TrialRecord(
        size=size,
        policy=policy.value,
        trial=trial,
        seed=seed,
        captures=episode.captures,
        intrusions=episode.intrusions,
        timeouts=episode.timeouts,
        fraction=episode.fraction_caught,
        terminal_time=episode.terminal_time,
        world_fingerprint=episode.initial_fingerprint,
    )


def _run_job(args: Tuple[int, PolicyName, int, int, Optional[ModelParams], int]) -> TrialRecord:
    return run_trial(*args)


def run_experiment(
    spec: ExperimentSpec,
    models: Optional[Dict[PolicyName, ModelParams]] = None,
) -> ExperimentResult:
    """All cells x trials; records ordered by (size, policy, trial) whatever `workers` is."""
    models = models if models is not None else _load_models(spec)
    jobs = []
    for size, policy in spec.cells():
        for trial in range(spec.trials):
            jobs.append(
                (size, policy, trial, spec.base_seed, models.get(policy), spec.reassign_period)
            )

    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_run_job(job))
            if job[2] == spec.trials - 1:
                log.info("Finished N=%d policy=%s (%d trials)", job[0], job[1].value, spec.trials)

    return ExperimentResult(records=records, rows=aggregate(records))


# ============================================================================
# CSV
# ============================================================================

def write_metrics_csv(result: ExperimentResult, out: Union[str, Path, IO[str]]) -> None:
    """Per-trial rows, then a `mean` and a `std` row per (size, policy)."""
    if isinstance(out, (str, Path)):
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            _write_csv(result, f)
    else:
        _write_csv(result, out)


def _write_csv(result: ExperimentResult, f: IO[str]) -> None:
    w = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in result.records:
        w.writerow({k: getattr(r, k) for k in CSV_FIELDS})
    for row in result.rows:
        w.writerow(
            {
                "size": row.size,
                "policy": row.policy,
                "trial": "mean",
                "captures": row.mean_captures,
                "intrusions": row.mean_intrusions,
                "timeouts": row.mean_timeouts,
                "fraction": row.mean_fraction,
                "terminal_time": row.mean_terminal_time,
            }
        )
        w.writerow(
            {
                "size": row.size,
                "policy": row.policy,
                "trial": "std",
                "captures": row.std_captures,
                "intrusions": "",
                "timeouts": "",
                "fraction": row.std_fraction,
                "terminal_time": row.std_terminal_time,
            }
        )


def metrics_csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    _write_csv(result, buf)
    return buf.getvalue()


# ============================================================================
# Sample efficiency
# ============================================================================

SWEEP_FIELDS = ["demos", "size", "mean_fraction", "std_fraction", "train_loss"]


class SweepConfig(BaseModel):
    train_size: int = Field(default=10, ge=1)
    data_seed: int = 0
    train: TrainConfig = Field(default_factory=TrainConfig)
    hyper: HyperParams = Field(default_factory=HyperParams)


def sample_efficiency_sweep(
    demo_counts: Sequence[int],
    spec: ExperimentSpec,
    sweep: Optional[SweepConfig] = None,
) -> List[Dict[str, Any]]:
    """
    One model per demonstration count, then gnn fraction caught per team size.

    Datasets are nested prefixes of one generated set; every model starts
    from the same initial weights and training seed.
    """
    sweep = sweep or SweepConfig()
    counts = list(demo_counts)
    if not counts or any(c < 1 for c in counts) or counts != sorted(counts):
        raise DomainError(f"demo counts must be positive and ascending, got {counts}")

    cfg = GameConfig.for_team(sweep.train_size)
    samples = generate_dataset(counts[-1], cfg, sweep.data_seed)
    rows: List[Dict[str, Any]] = []
    for count in counts:
        data = split(samples[:count], seed=sweep.data_seed)
        model, _ = train(init_params(sweep.hyper.seed, sweep.hyper), data, sweep.train)
        train_loss = evaluate(model, data.train).loss
        log.info("Sweep: %d demos -> train loss %.4f", count, train_loss)

        cell_spec = spec.model_copy(update={"policies": [PolicyName.GNN]})
        result = run_experiment(cell_spec, models={PolicyName.GNN: model})
        for row in result.rows:
            rows.append(
                {
                    "demos": count,
                    "size": row.size,
                    "mean_fraction": row.mean_fraction,
                    "std_fraction": row.std_fraction,
                    "train_loss": train_loss,
                }
            )
    return rows


def write_sweep_csv(rows: Sequence[Dict[str, Any]], out: Union[str, Path, IO[str]]) -> None:
    if isinstance(out, (str, Path)):
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            write_sweep_csv(rows, f)
        return
    w = csv.DictWriter(out, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


def mean_fraction(result: ExperimentResult, size: int, policy: str) -> float:
    vals = [r.fraction for r in result.records if r.size == size and r.policy == policy]
    return float(np.mean(vals)) if vals else float("nan")


__all__ = [
    "CSV_FIELDS",
    "ExperimentSpec",
    "ExperimentResult",
    "SweepConfig",
    "trial_seed",
    "run_trial",
    "run_experiment",
    "write_metrics_csv",
    "metrics_csv_text",
    "sample_efficiency_sweep",
    "write_sweep_csv",
    "mean_fraction",
]
