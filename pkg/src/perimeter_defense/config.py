"""
Configuration for perimeter-defense-lab.

Centralizes path configuration and environment overrides. Every PD_*
variable falls back to the documented default when unset.
"""

import math
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from perimeter_defense.errors import ConfigError

load_dotenv()

# Base paths
PACKAGE_DIR = Path(__file__).parent
PROJECT_ROOT = PACKAGE_DIR.parent.parent

# Data storage
DATA_DIR = Path(os.getenv("PD_DATA_DIR") or PROJECT_ROOT / "data")
MODELS_DIR = DATA_DIR / "models"
RESULTS_DIR = DATA_DIR / "results"


# ============== Environment helpers ==============

def env_str(name: str, default: str) -> str:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return value.strip()


def env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError as e:
        raise ConfigError(f"{name}={raw!r} is not a number") from e
    if not math.isfinite(value):
        raise ConfigError(f"{name}={raw!r} is not finite")
    return value


def env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name}={raw!r} is not an integer") from e


# ============== Defaults ==============

def default_dt() -> float:
    return env_float("PD_DT", 0.01)


def default_epsilon() -> float:
    return env_float("PD_EPSILON", 0.02)


def default_nu() -> float:
    return env_float("PD_NU", 1.0)


def default_n_def() -> int:
    return env_int("PD_N_DEF", 10)


def default_fov() -> float:
    return env_float("PD_FOV", math.pi)


def default_n_af() -> int:
    return env_int("PD_N_AF", 10)


def default_n_df() -> int:
    return env_int("PD_N_DF", 3)


def default_comm_range() -> float:
    return env_float("PD_COMM_RANGE", 1.0)


def default_t_max_factor() -> float:
    return env_float("PD_T_MAX_FACTOR", 50.0)


def default_intruder_rule() -> str:
    return env_str("PD_INTRUDER_RULE", "nearest_defender")


def default_solver_tol() -> float:
    return env_float("PD_SOLVER_TOL", 1e-10)


def log_level(override: Optional[str] = None) -> str:
    level = (override or env_str("PD_LOG_LEVEL", "INFO")).upper()
    if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        raise ConfigError(f"unknown log level {level!r}")
    return level


def get_model_path(name: str) -> Path:
    """Get path for a model checkpoint."""
    return MODELS_DIR / f"{name}.json"


__all__ = [
    "PROJECT_ROOT",
    "DATA_DIR",
    "MODELS_DIR",
    "RESULTS_DIR",
    "env_str",
    "env_float",
    "env_int",
    "default_dt",
    "default_epsilon",
    "default_nu",
    "default_n_def",
    "default_fov",
    "default_n_af",
    "default_n_df",
    "default_comm_range",
    "default_t_max_factor",
    "default_intruder_rule",
    "default_solver_tol",
    "log_level",
    "get_model_path",
]
