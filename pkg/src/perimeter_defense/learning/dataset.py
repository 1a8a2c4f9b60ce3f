"""
Imitation dataset - whole-team snapshots labelled by the expert matching.

A sample is one world snapshot: every defender's feature row X, the
communication graph S, the slot index of the expert's choice for each
defender (or -1) and the per-defender slot validity masks. Unlabelled
defenders still take part in message passing.

On disk: line-delimited JSON, one sample per line, S as neighbor lists.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from perimeter_defense.errors import DatasetFormatError, DomainError
from perimeter_defense.policies.expert import expert_policy
from perimeter_defense.sim.perception import FEATURES_PER_SLOT, PerceptionConfig, perceive_team
from perimeter_defense.sim.world import GameConfig, WorldState, init_random

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)


# ============================================================================
# Types
# ============================================================================

@dataclass(frozen=True)
class GraphSample:
    """One training snapshot."""

    n: int
    x: np.ndarray
    s: np.ndarray
    labels: np.ndarray
    valid: np.ndarray

    @property
    def n_labeled(self) -> int:
        return int(np.sum(self.labels >= 0))


@dataclass(frozen=True)
class DatasetSplit:
    train: List[GraphSample]
    val: List[GraphSample]
    test: List[GraphSample]


class SampleRecord(BaseModel):
    """JSONL line schema."""

    n: int
    x: List[List[float]]
    s: List[List[int]]
    labels: List[Optional[int]]
    valid: List[List[bool]]


# ============================================================================
# Generation
# ============================================================================

def snapshot_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def label_snapshot(cfg: GameConfig, seed: int) -> Tuple[GraphSample, int]:
    """
    Random world -> features + graph -> expert labels.

    Returns the sample and the number of defenders whose expert intruder
    is not among their feature slots (left unlabelled).
    """
    return label_world(init_random(cfg, seed), cfg)


def label_world(world: WorldState, cfg: GameConfig) -> Tuple[GraphSample, int]:
    """Expert labels for any world, including states reached during play."""
    team = perceive_team(world, cfg.perception)
    decision = expert_policy(world, cfg)

    labels = np.full(len(world.defenders), -1, dtype=np.int64)
    outside = 0
    for i, j in enumerate(decision.targets):
        if j is None:
            continue
        slot = team.local[i].slot_of(j)
        if slot is None:
            outside += 1
        else:
            labels[i] = slot
    sample = GraphSample(
        n=len(world.defenders),
        x=team.x,
        s=team.graph.s,
        labels=labels,
        valid=team.valid,
    )
    return sample, outside


def _label_one(args: Tuple[GameConfig, int]) -> Tuple[GraphSample, int]:
    return label_snapshot(*args)


def generate_dataset(
    num_snapshots: int,
    cfg: GameConfig,
    seed: int,
    workers: int = 1,
) -> List[GraphSample]:
    """Expert-labelled snapshots; deterministic per seed regardless of `workers`."""
    jobs = [(cfg, snapshot_seed(seed, k)) for k in range(num_snapshots)]
    if workers > 1 and num_snapshots > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, num_snapshots // (4 * workers))
            results = list(pool.map(_label_one, jobs, chunksize=chunk))
    else:
        results = [_label_one(job) for job in jobs]

    samples = [s for s, _ in results]
    outside = sum(o for _, o in results)
    hist = label_histogram(samples, cfg.perception.n_af)
    labeled = int(sum(hist))
    nodes = sum(s.n for s in samples)
    log.info(
        "Generated %d snapshots (n=%d): %d/%d defenders labelled, %d matched outside feature slots",
        num_snapshots, cfg.n, labeled, nodes, outside,
    )
    log.info("Label slot histogram: %s", hist.tolist())
    return samples


def label_histogram(samples: Iterable[GraphSample], n_slots: int) -> np.ndarray:
    """How often each feature slot carries the expert label."""
    hist = np.zeros(n_slots, dtype=np.int64)
    for s in samples:
        lab = s.labels[s.labels >= 0]
        hist += np.bincount(lab, minlength=n_slots)[:n_slots]
    return hist


def split(
    samples: Sequence[GraphSample],
    fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> DatasetSplit:
    """Seeded shuffle, then contiguous cut: floor(train), floor(val), remainder test."""
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DomainError(f"fractions must be three non-negative numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DomainError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(samples)
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(fractions[0] * n + 1e-9)
    n_val = math.floor(fractions[1] * n + 1e-9)
    shuffled = [samples[int(k)] for k in order]
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
    )


# ============================================================================
# Serialization
# ============================================================================

def to_record(sample: GraphSample) -> SampleRecord:
    return SampleRecord(
        n=sample.n,
        x=sample.x.tolist(),
        s=[[int(j) for j in np.flatnonzero(row)] for row in sample.s],
        labels=[None if v < 0 else int(v) for v in sample.labels],
        valid=sample.valid.tolist(),
    )


def from_record(
    rec: SampleRecord,
    line_number: Optional[int] = None,
    layout: Optional[PerceptionConfig] = None,
) -> GraphSample:
    """Validate one record against the feature layout (default: PerceptionConfig())."""
    layout = layout or PerceptionConfig()
    n = rec.n
    width = FEATURES_PER_SLOT * (layout.n_af + layout.n_df)
    if n < 1:
        raise DatasetFormatError(f"n must be >= 1, got {n}", line_number)
    if len(rec.x) != n or any(len(row) != width for row in rec.x):
        raise DatasetFormatError(f"x must be {n} rows of {width} features", line_number)
    if len(rec.valid) != n or any(len(row) != layout.n_af for row in rec.valid):
        raise DatasetFormatError(f"valid must be {n} rows of {layout.n_af} slots", line_number)
    x = np.asarray(rec.x, dtype=np.float64)
    valid = np.asarray(rec.valid, dtype=bool)
    if len(rec.s) != n or len(rec.labels) != n:
        raise DatasetFormatError(f"s and labels must have {n} entries", line_number)

    s = np.zeros((n, n))
    for i, nbrs in enumerate(rec.s):
        for j in nbrs:
            if not 0 <= j < n or j == i:
                raise DatasetFormatError(f"bad neighbor {j} for node {i}", line_number)
            s[i, j] = 1.0
    if not np.array_equal(s, s.T):
        raise DatasetFormatError("adjacency is not symmetric", line_number)

    if any(v is not None and v < 0 for v in rec.labels):
        raise DatasetFormatError("labels must be null or a slot index >= 0", line_number)
    labels = np.array([-1 if v is None else v for v in rec.labels], dtype=np.int64)
    for i, v in enumerate(labels):
        if v >= 0 and (v >= valid.shape[1] or not valid[i, v]):
            raise DatasetFormatError(f"label {v} of node {i} is not a valid slot", line_number)
    return GraphSample(n=n, x=x, s=s, labels=labels, valid=valid)


def save_dataset(samples: Iterable[GraphSample], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for sample in samples:
            f.write(to_record(sample).model_dump_json() + "\n")
            count += 1
    log.info("Wrote %d samples to %s", count, path)
    return path


def load_dataset(
    path: Union[str, Path],
    layout: Optional[PerceptionConfig] = None,
) -> List[GraphSample]:
    layout = layout or PerceptionConfig()
    samples: List[GraphSample] = []
    with Path(path).open("r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = SampleRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DatasetFormatError(str(e).splitlines()[0], number) from e
            samples.append(from_record(rec, number, layout))
    return samples


__all__ = [
    "GraphSample",
    "DatasetSplit",
    "SampleRecord",
    "snapshot_seed",
    "label_snapshot",
    "label_world",
    "generate_dataset",
    "label_histogram",
    "split",
    "to_record",
    "from_record",
    "save_dataset",
    "load_dataset",
]
