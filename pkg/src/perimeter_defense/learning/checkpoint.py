"""
Model checkpoints - one JSON document with hyperparameters and flat parameter arrays.
"""

from __future__ import annotations

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from perimeter_defense.errors import CheckpointError, PerimeterDefenseError
from perimeter_defense.learning.network import HyperParams, ModelParams, param_shapes

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ParamArray(BaseModel):
    shape: List[int]
    data: List[float]


class Checkpoint(BaseModel):
    format_version: int = FORMAT_VERSION
    hyperparams: HyperParams
    params: Dict[str, ParamArray]
    input_shift: Optional[List[float]] = None
    input_scale: Optional[List[float]] = None


def to_checkpoint(model: ModelParams) -> Checkpoint:
    return Checkpoint(
        hyperparams=model.hyper,
        params={
            name: ParamArray(shape=list(arr.shape), data=arr.ravel().tolist())
            for name, arr in model.params.items()
        },
        input_shift=None if model.input_shift is None else model.input_shift.tolist(),
        input_scale=None if model.input_scale is None else model.input_scale.tolist(),
    )


def from_checkpoint(ckpt: Checkpoint) -> ModelParams:
    """Rebuild a model, validating every array against the hyperparameters."""
    if ckpt.format_version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {ckpt.format_version}")
    expected = param_shapes(ckpt.hyperparams)
    missing = set(expected) - set(ckpt.params)
    extra = set(ckpt.params) - set(expected)
    if missing or extra:
        raise CheckpointError(
            f"parameter names do not match hyperparameters "
            f"(missing={sorted(missing)}, unexpected={sorted(extra)})"
        )

    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape in expected.items():
        entry = ckpt.params[name]
        if tuple(entry.shape) != shape:
            raise CheckpointError(f"{name}: shape {tuple(entry.shape)} != expected {shape}")
        if len(entry.data) != int(np.prod(shape)):
            raise CheckpointError(
                f"{name}: {len(entry.data)} values for shape {shape}"
            )
        params[name] = np.asarray(entry.data, dtype=np.float64).reshape(shape)
    model = ModelParams(hyper=ckpt.hyperparams, params=params)

    if (ckpt.input_shift is None) != (ckpt.input_scale is None):
        raise CheckpointError("input_shift and input_scale must be given together")
    if ckpt.input_shift is not None and ckpt.input_scale is not None:
        try:
            model = model.with_input_scaling(
                np.asarray(ckpt.input_shift), np.asarray(ckpt.input_scale)
            )
        except PerimeterDefenseError as e:
            raise CheckpointError(f"bad input scaling: {e}") from e
    return model


def save_checkpoint(model: ModelParams, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_checkpoint(model).model_dump_json(), encoding="utf-8")
    log.info("Saved checkpoint (%d parameters) to %s", model.n_params, path)
    return path


def load_checkpoint(path: Union[str, Path]) -> ModelParams:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        ckpt = Checkpoint.model_validate(raw)
    except (json.JSONDecodeError, ValidationError) as e:
        raise CheckpointError(f"malformed checkpoint {path}: {e}") from e
    return from_checkpoint(ckpt)


__all__ = [
    "FORMAT_VERSION",
    "Checkpoint",
    "to_checkpoint",
    "from_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
