"""
Expert assignment - maximum matching on strongly assigned pairs.

A defender is strongly assigned to an intruder when their one-on-one payoff
is negative. The expert picks, among all matchings that use only strong
edges and have the largest number of pairs, one with the smallest value
V = sum of payoffs. Remaining ties are broken by the lexicographically
smallest assignment sequence, with "unassigned" ordered after every index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from perimeter_defense.errors import MatchingSizeError, ShapeError

log = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 8
VALUE_RTOL = 1e-12


# ============================================================================
# Types
# ============================================================================

@dataclass(frozen=True)
class PayoffMatrix:
    """Defender x intruder payoffs in seconds; NaN marks an absent (non-sensible) pair."""

    p: np.ndarray

    def __post_init__(self) -> None:
        if self.p.ndim != 2:
            raise ShapeError(f"payoff matrix must be 2-D, got shape {self.p.shape}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Optional[float]]]) -> "PayoffMatrix":
        """Build from nested lists where None means absent."""
        n = len(rows)
        m = len(rows[0]) if n else 0
        p = np.full((n, m), np.nan, dtype=np.float64)
        for i, row in enumerate(rows):
            if len(row) != m:
                raise ShapeError(f"payoff row {i} has {len(row)} entries, expected {m}")
            for j, v in enumerate(row):
                if v is not None:
                    if not math.isfinite(v):
                        raise ShapeError(f"payoff ({i}, {j}) is not finite: {v!r}")
                    p[i, j] = v
        return cls(p)

    @classmethod
    def empty(cls, n_def: int, n_int: int) -> "PayoffMatrix":
        return cls(np.full((n_def, n_int), np.nan, dtype=np.float64))

    @property
    def n_def(self) -> int:
        return int(self.p.shape[0])

    @property
    def n_int(self) -> int:
        return int(self.p.shape[1])

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.p)

    @property
    def strong(self) -> np.ndarray:
        return self.present & (np.nan_to_num(self.p, nan=0.0) < 0.0)


@dataclass(frozen=True)
class MatchingResult:
    """Per-defender optional intruder index, number of strong pairs and value V."""

    assignment: Tuple[Optional[int], ...]
    strong_count: int = 0
    value: float = 0.0

    def pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, j in enumerate(self.assignment) if j is not None]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "assignment": list(self.assignment),
            "pairs": [list(p) for p in self.pairs()],
            "strong_count": self.strong_count,
            "value": self.value,
        }


def _result(P: PayoffMatrix, assignment: Sequence[Optional[int]]) -> MatchingResult:
    pairs = [(i, j) for i, j in enumerate(assignment) if j is not None]
    value = 0.0
    for i, j in pairs:
        value += float(P.p[i, j])
    return MatchingResult(assignment=tuple(assignment), strong_count=len(pairs), value=value)


def _same_value(a: float, b: float) -> bool:
    return abs(a - b) <= VALUE_RTOL * max(1.0, abs(a), abs(b))


def _seq_key(assignment: Sequence[Optional[int]], n_int: int) -> Tuple[int, ...]:
    return tuple(n_int if j is None else j for j in assignment)


# ============================================================================
# Operations
# ============================================================================

def strong_edges(P: PayoffMatrix) -> List[Tuple[int, int]]:
    """Present entries with p_ij < 0, in row-major order."""
    rows, cols = np.nonzero(P.strong)
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def _cost_matrix(P: PayoffMatrix) -> np.ndarray:
    """
    Rectangular cost for linear_sum_assignment.

    Columns [0, m) are intruders, columns [m, m+n) give each defender a
    private zero-cost "unassigned" slot. Strong edges cost p - M where M
    exceeds any achievable |V|, so one more strong pair always beats any
    change in V.
    """
    n, m = P.n_def, P.n_int
    strong = P.strong
    big_m = (min(n, m) + 1) * (float(np.max(np.abs(P.p[strong]))) + 1.0)
    cost = np.full((n, m + n), np.inf)
    cost[:, :m] = np.where(strong, np.nan_to_num(P.p, nan=0.0) - big_m, np.inf)
    cost[np.arange(n), m + np.arange(n)] = 0.0
    return cost


def _solve(cost: np.ndarray, m: int) -> Optional[List[Optional[int]]]:
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        # infeasible after forcing
        return None
    assignment: List[Optional[int]] = [None] * cost.shape[0]
    for i, j in zip(rows, cols):
        if j < m:
            assignment[int(i)] = int(j)
    return assignment


def _force(cost: np.ndarray, i: int, j: int) -> None:
    """Restrict row i to column j only (in place)."""
    col = cost[:, j].copy()
    cost[i, :] = np.inf
    cost[:, j] = np.inf
    cost[i, j] = col[i]


def expert_matching(P: PayoffMatrix, tie_break: bool = True) -> MatchingResult:
    """
    Maximum-cardinality, minimum-value matching on strong edges.

    With tie_break the result is the lexicographically smallest assignment
    among all optima: defenders are fixed in index order to the smallest
    intruder that still admits an optimal completion.
    """
    n, m = P.n_def, P.n_int
    if n == 0 or m == 0 or not P.strong.any():
        return MatchingResult(assignment=(None,) * n)

    cost = _cost_matrix(P)
    best = _solve(cost, m)
    assert best is not None
    result = _result(P, best)
    if not tie_break:
        return result

    strong = P.strong
    for i in range(n):
        current = m if best[i] is None else best[i]
        for j in np.flatnonzero(strong[i]):
            j = int(j)
            if j >= current:
                break
            trial_cost = cost.copy()
            _force(trial_cost, i, j)
            trial = _solve(trial_cost, m)
            if trial is None:
                continue
            cand = _result(P, trial)
            if cand.strong_count == result.strong_count and _same_value(cand.value, result.value):
                best = trial
                break
        fixed = best[i]
        if fixed is not None:
            _force(cost, i, fixed)
        else:
            # keep row i unassigned in every later solve
            cost[i, :m] = np.inf

    refined = _result(P, best)
    log.debug(
        "expert matching %dx%d: %d strong pairs, V=%.6g",
        n, m, refined.strong_count, refined.value,
    )
    return refined


def _enumerate(
    strong: np.ndarray,
    i: int,
    used: List[bool],
    current: List[Optional[int]],
) -> Iterator[List[Optional[int]]]:
    if i == strong.shape[0]:
        yield list(current)
        return
    current.append(None)
    yield from _enumerate(strong, i + 1, used, current)
    current.pop()
    for j in np.flatnonzero(strong[i]):
        j = int(j)
        if used[j]:
            continue
        used[j] = True
        current.append(j)
        yield from _enumerate(strong, i + 1, used, current)
        current.pop()
        used[j] = False


def brute_force_matching(P: PayoffMatrix) -> MatchingResult:
    """Exhaustive oracle with the same optimality criterion and tie-break as expert_matching."""
    n, m = P.n_def, P.n_int
    if n > BRUTE_FORCE_LIMIT or m > BRUTE_FORCE_LIMIT:
        raise MatchingSizeError(
            f"brute force refused for {n}x{m}; limit is {BRUTE_FORCE_LIMIT}x{BRUTE_FORCE_LIMIT}"
        )
    strong = P.strong

    best_count = 0
    best_value = 0.0
    for a in _enumerate(strong, 0, [False] * m, []):
        r = _result(P, a)
        if r.strong_count > best_count or (
            r.strong_count == best_count and r.value < best_value
        ):
            best_count, best_value = r.strong_count, r.value

    chosen: Optional[List[Optional[int]]] = None
    for a in _enumerate(strong, 0, [False] * m, []):
        r = _result(P, a)
        if r.strong_count != best_count or not _same_value(r.value, best_value):
            continue
        if chosen is None or _seq_key(a, m) < _seq_key(chosen, m):
            chosen = a

    assert chosen is not None
    return _result(P, chosen)


__all__ = [
    "PayoffMatrix",
    "MatchingResult",
    "strong_edges",
    "expert_matching",
    "brute_force_matching",
]
