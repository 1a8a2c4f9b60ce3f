"""
Imitation training loop.

Minibatches of snapshots are stacked into one block-diagonal graph. Graph
convolution never crosses the blocks, so this is the same computation as
running each sample on its own graph, with gradients summed in sample order
and averaged over the labelled defenders of the batch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, Field, model_validator

from perimeter_defense.errors import DomainError
from perimeter_defense.learning.dataset import DatasetSplit, GraphSample
from perimeter_defense.learning.network import (
    AdamState,
    LRSchedule,
    ModelParams,
    adam_step,
    backward,
    cosine_lr,
    forward,
    forward_with_cache,
    masked_argmax,
    masked_softmax_xent,
)

log = logging.getLogger(__name__)

EVAL_CHUNK = 256
MIN_FEATURE_STD = 1e-8


class TrainConfig(BaseModel):
    epochs: int = Field(default=1500, ge=1)
    batch_size: int = Field(default=64, ge=1)
    lr_max: float = 5e-3
    lr_min: float = 1e-6
    seed: int = 0
    log_every: int = Field(default=50, ge=1)
    standardize: bool = True

    @model_validator(mode="after")
    def _lr_order(self) -> "TrainConfig":
        if not self.lr_max > self.lr_min > 0:
            raise ValueError(f"need lr_max > lr_min > 0, got {self.lr_max}, {self.lr_min}")
        return self

    def schedule(self) -> LRSchedule:
        return LRSchedule(lr_max=self.lr_max, lr_min=self.lr_min, total_epochs=self.epochs)


@dataclass(frozen=True)
class EvalResult:
    loss: float
    agreement: Optional[float]
    labeled: int


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_agreement: Optional[float]
    val_loss: float
    val_agreement: Optional[float]


@dataclass
class TrainingHistory:
    initial_val: EvalResult
    epochs: List[EpochRecord] = field(default_factory=list)

    @property
    def initial_val_loss(self) -> float:
        return self.initial_val.loss

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.epochs[-1] if self.epochs else None


def collate(
    samples: Sequence[GraphSample],
) -> Tuple[np.ndarray, sp.csr_matrix, np.ndarray, np.ndarray]:
    """Disjoint union of snapshots: stacked X, block-diagonal S, labels, masks."""
    x = np.concatenate([s.x for s in samples], axis=0)
    S = sp.block_diag([sp.csr_matrix(s.s) for s in samples], format="csr")
    labels = np.concatenate([s.labels for s in samples])
    valid = np.concatenate([s.valid for s in samples], axis=0)
    return x, S, labels, valid


def fit_input_scaling(samples: Sequence[GraphSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Column mean and std over every defender row; constant columns get scale 1."""
    if not samples:
        raise DomainError("cannot fit input scaling on an empty training set")
    x = np.concatenate([s.x for s in samples], axis=0)
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale < MIN_FEATURE_STD] = 1.0
    return shift, scale


def _agreement(logits: np.ndarray, labels: np.ndarray, valid: np.ndarray) -> Tuple[int, int]:
    rows = labels >= 0
    if not rows.any():
        return 0, 0
    pred = masked_argmax(logits[rows], valid[rows])
    return int(np.sum(pred == labels[rows])), int(rows.sum())


def evaluate(model: ModelParams, samples: Sequence[GraphSample]) -> EvalResult:
    """Mean cross-entropy and top-1 agreement with the expert over labelled defenders."""
    total_loss = 0.0
    hits = 0
    labeled = 0
    for start in range(0, len(samples), EVAL_CHUNK):
        chunk = samples[start : start + EVAL_CHUNK]
        x, S, labels, valid = collate(chunk)
        logits = forward(model, x, S)
        n_lab = int(np.sum(labels >= 0))
        if n_lab == 0:
            continue
        loss, _ = masked_softmax_xent(logits, labels, valid)
        total_loss += loss * n_lab
        h, c = _agreement(logits, labels, valid)
        hits += h
        labeled += c
    if labeled == 0:
        return EvalResult(loss=0.0, agreement=None, labeled=0)
    return EvalResult(loss=total_loss / labeled, agreement=hits / labeled, labeled=labeled)


def train(
    model: ModelParams,
    data: DatasetSplit,
    cfg: TrainConfig,
) -> Tuple[ModelParams, TrainingHistory]:
    """
    Train a copy of `model`; the input is left untouched.

    With `cfg.standardize`, a model without input scaling first gets one
    fitted on the training split. A model that already has one keeps it.
    """
    model = model.copy()
    train_set = list(data.train)
    if cfg.standardize and not model.standardized and train_set:
        model = model.with_input_scaling(*fit_input_scaling(train_set))
    state = AdamState.zeros_like(model.params)
    sched = cfg.schedule()
    rng = np.random.default_rng(cfg.seed)

    history = TrainingHistory(initial_val=evaluate(model, data.val))
    log.info(
        "Training on %d snapshots (%d val), %d epochs, batch %d; initial val loss %.4f",
        len(train_set), len(data.val), cfg.epochs, cfg.batch_size, history.initial_val_loss,
    )

    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, sched)
        order = rng.permutation(len(train_set))
        loss_sum = 0.0
        hits = 0
        labeled = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_set[int(k)] for k in order[start : start + cfg.batch_size]]
            x, S, labels, valid = collate(batch)
            n_lab = int(np.sum(labels >= 0))
            if n_lab == 0:
                continue
            logits, cache = forward_with_cache(model, x, S)
            loss, dlogits = masked_softmax_xent(logits, labels, valid, denom=n_lab)
            grads, _ = backward(model, cache, dlogits)
            adam_step(model.params, grads, state, lr)

            loss_sum += loss * n_lab
            h, c = _agreement(logits, labels, valid)
            hits += h
            labeled += c

        val = evaluate(model, data.val)
        record = EpochRecord(
            epoch=epoch,
            lr=lr,
            train_loss=loss_sum / labeled if labeled else 0.0,
            train_agreement=hits / labeled if labeled else None,
            val_loss=val.loss,
            val_agreement=val.agreement,
        )
        history.epochs.append(record)
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs - 1:
            log.info(
                "epoch %d lr=%.2e train_loss=%.4f train_acc=%s val_loss=%.4f val_acc=%s",
                epoch, lr, record.train_loss, _fmt(record.train_agreement),
                record.val_loss, _fmt(record.val_agreement),
            )
    return model, history


def _fmt(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{v:.3f}"


__all__ = [
    "TrainConfig",
    "EvalResult",
    "EpochRecord",
    "TrainingHistory",
    "collate",
    "fit_input_scaling",
    "evaluate",
    "train",
]
