"""
Capture metrics and per-trial records.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from perimeter_defense.errors import DomainError


def absolute_accuracy(captures: int, n: int) -> float:
    """Captures divided by team size."""
    if n < 1 or not 0 <= captures <= n:
        raise DomainError(f"need 0 <= captures <= n with n >= 1, got captures={captures}, n={n}")
    return captures / n


def comparative_accuracy(captures_gnn: float, captures_other: float) -> Optional[float]:
    """Ratio of gnn captures to another policy's; None when the other captured nothing."""
    if captures_other == 0:
        return None
    return captures_gnn / captures_other


@dataclass(frozen=True)
class TrialRecord:
    """One (size, policy, trial) episode outcome."""

    size: int
    policy: str
    trial: int
    seed: int
    captures: int
    intrusions: int
    timeouts: int
    fraction: float
    terminal_time: float
    world_fingerprint: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MetricsRow:
    """Mean and population standard deviation over the trials of one cell."""

    size: int
    policy: str
    trials: int
    mean_captures: float
    std_captures: float
    mean_intrusions: float
    mean_timeouts: float
    mean_fraction: float
    std_fraction: float
    mean_terminal_time: float
    std_terminal_time: float


def aggregate(records: Iterable[TrialRecord]) -> List[MetricsRow]:
    """Group by (size, policy) in first-seen order."""
    buckets: Dict[Tuple[int, str], List[TrialRecord]] = defaultdict(list)
    for r in records:
        buckets[(r.size, r.policy)].append(r)

    rows = []
    for (size, policy), items in buckets.items():
        caps = np.array([r.captures for r in items], dtype=np.float64)
        frac = np.array([r.fraction for r in items], dtype=np.float64)
        term = np.array([r.terminal_time for r in items], dtype=np.float64)
        rows.append(
            MetricsRow(
                size=size,
                policy=policy,
                trials=len(items),
                mean_captures=float(caps.mean()),
                std_captures=float(caps.std()),
                mean_intrusions=float(np.mean([r.intrusions for r in items])),
                mean_timeouts=float(np.mean([r.timeouts for r in items])),
                mean_fraction=float(frac.mean()),
                std_fraction=float(frac.std()),
                mean_terminal_time=float(term.mean()),
                std_terminal_time=float(term.std()),
            )
        )
    return rows


def comparative_table(rows: Sequence[MetricsRow], reference: str = "gnn") -> List[Dict[str, Any]]:
    """gnn-vs-other capture ratios per team size (None where the other caught nothing)."""
    by_cell = {(r.size, r.policy): r for r in rows}
    out = []
    for r in rows:
        if r.policy == reference:
            continue
        ref = by_cell.get((r.size, reference))
        if ref is None:
            continue
        out.append(
            {
                "size": r.size,
                "policy": r.policy,
                "ratio": comparative_accuracy(ref.mean_captures, r.mean_captures),
            }
        )
    return out


__all__ = [
    "absolute_accuracy",
    "comparative_accuracy",
    "TrialRecord",
    "MetricsRow",
    "aggregate",
    "comparative_table",
]
