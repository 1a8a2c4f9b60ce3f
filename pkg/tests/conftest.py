"""
Shared fixtures and small world builders.
"""

import os
from typing import Iterable, Tuple

import numpy as np
import pytest

from perimeter_defense.game.geometry import DefenderPose, IntruderPose
from perimeter_defense.sim.world import GameConfig, WorldState


def make_world(
    defenders: Iterable[Tuple[float, float]],
    intruders: Iterable[Tuple[float, float]],
    radius: float = 1.0,
) -> WorldState:
    """World from (psi, phi) defender and (psi, r) intruder pairs."""
    return WorldState(
        defenders=tuple(DefenderPose(psi=p, phi=f) for p, f in defenders),
        intruders=tuple(IntruderPose(psi=p, r=r) for p, r in intruders),
        t=0.0,
        radius=radius,
    )


def random_graph(rng: np.random.Generator, n: int, density: float = 0.4) -> np.ndarray:
    """Symmetric 0/1 adjacency with zero diagonal."""
    upper = np.triu(rng.random((n, n)) < density, k=1)
    return (upper | upper.T).astype(np.float64)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep PD_* overrides from the developer shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("PD_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def cfg10() -> GameConfig:
    return GameConfig.for_team(10)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
