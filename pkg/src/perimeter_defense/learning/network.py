"""
Dense + graph-convolution network with analytic gradients.

Pipeline (default sizes):

    dense 39->16, relu, dense 16->8, relu        per-defender MLP
    gconv 8->32, relu, gconv 32->128, relu       K-hop graph filters
    dense 128->10                                assignment logits

A graph convolution is sum_k S^k X H_k for k = 0..K, with S^k X computed
iteratively (k message exchanges). Graph layers carry no bias. With
`use_graph=False` the graph layers are dropped and the head reads the MLP
output directly (8->10); that variant cannot mix information between
defenders.

A model may carry a per-column input standardization (X - shift) / scale,
fitted on training data and stored with the weights. The head starts at a
small fraction of its Glorot range so fresh logits are close to uniform.

No layer size depends on the number of defenders N.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, Field, model_validator

from perimeter_defense.errors import DomainError, LabelError, ShapeError

log = logging.getLogger(__name__)

MASK_PENALTY = -1e9
ADAM_BETA1 = 0.5
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
HEAD_INIT_SCALE = 0.01

Shift = Union[np.ndarray, sp.spmatrix]


# ============================================================================
# Hyperparameters
# ============================================================================

class HyperParams(BaseModel):
    """Architecture of the assignment network."""

    in_features: int = 39
    mlp_sizes: Tuple[int, ...] = (16, 8)
    gnn_sizes: Tuple[int, ...] = (32, 128)
    n_out: int = 10
    k_hops: int = Field(default=1, ge=0)
    use_graph: bool = True
    normalize_adjacency: bool = False
    n_af: int = Field(default=10, ge=1)
    n_df: int = Field(default=3, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _consistent(self) -> "HyperParams":
        if self.in_features != 3 * (self.n_af + self.n_df):
            raise ValueError(
                f"in_features={self.in_features} does not match 3*(n_af+n_df)="
                f"{3 * (self.n_af + self.n_df)}"
            )
        if self.n_out != self.n_af:
            raise ValueError(f"n_out={self.n_out} must equal n_af={self.n_af}")
        if not self.mlp_sizes:
            raise ValueError("at least one dense layer is required")
        if any(s < 1 for s in self.mlp_sizes + self.gnn_sizes):
            raise ValueError("layer sizes must be positive")
        return self

    @classmethod
    def mlp_only(cls, **kwargs: Any) -> "HyperParams":
        return cls(use_graph=False, gnn_sizes=(), **kwargs)

    @property
    def graph_sizes(self) -> Tuple[int, ...]:
        return self.gnn_sizes if self.use_graph else ()


class LRSchedule(BaseModel):
    """Cosine annealing from lr_max to lr_min over total_epochs."""

    lr_max: float = 5e-3
    lr_min: float = 1e-6
    total_epochs: int = Field(default=1500, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "LRSchedule":
        if not self.lr_max > self.lr_min > 0:
            raise ValueError(f"need lr_max > lr_min > 0, got {self.lr_max}, {self.lr_min}")
        return self


# ============================================================================
# Parameters and optimizer state
# ============================================================================

def param_shapes(hp: HyperParams) -> "OrderedDict[str, Tuple[int, ...]]":
    """Name -> shape for every learnable array, in a fixed order."""
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    width = hp.in_features
    for l, out in enumerate(hp.mlp_sizes):
        shapes[f"dense{l}.W"] = (width, out)
        shapes[f"dense{l}.b"] = (out,)
        width = out
    for l, out in enumerate(hp.graph_sizes):
        for k in range(hp.k_hops + 1):
            shapes[f"gconv{l}.H{k}"] = (width, out)
        width = out
    shapes["head.W"] = (width, hp.n_out)
    shapes["head.b"] = (hp.n_out,)
    return shapes


@dataclass
class ModelParams:
    """All learnable weights plus the hyperparameters that shaped them."""

    hyper: HyperParams
    params: "OrderedDict[str, np.ndarray]"
    input_shift: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def copy(self) -> "ModelParams":
        return ModelParams(
            hyper=self.hyper.model_copy(),
            params=OrderedDict((k, v.copy()) for k, v in self.params.items()),
            input_shift=None if self.input_shift is None else self.input_shift.copy(),
            input_scale=None if self.input_scale is None else self.input_scale.copy(),
        )

    @property
    def standardized(self) -> bool:
        return self.input_shift is not None

    def with_input_scaling(self, shift: np.ndarray, scale: np.ndarray) -> "ModelParams":
        """Copy of the model that standardizes its inputs with the given column statistics."""
        shift = np.asarray(shift, dtype=np.float64)
        scale = np.asarray(scale, dtype=np.float64)
        width = self.hyper.in_features
        if shift.shape != (width,) or scale.shape != (width,):
            raise ShapeError(
                f"input scaling needs {width} columns, got {shift.shape} and {scale.shape}"
            )
        if not np.all(np.isfinite(shift)) or not np.all(scale > 0):
            raise DomainError("input scaling must be finite with positive scales")
        out = self.copy()
        out.input_shift = shift.copy()
        out.input_scale = scale.copy()
        return out

    @property
    def n_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def dense_layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [
            (self.params[f"dense{l}.W"], self.params[f"dense{l}.b"])
            for l in range(len(self.hyper.mlp_sizes))
        ]

    def graph_banks(self) -> List[List[np.ndarray]]:
        return [
            [self.params[f"gconv{l}.H{k}"] for k in range(self.hyper.k_hops + 1)]
            for l in range(len(self.hyper.graph_sizes))
        ]


def init_params(seed: int = 0, hyper: Optional[HyperParams] = None) -> ModelParams:
    """Glorot-uniform weights (head scaled by HEAD_INIT_SCALE), zero biases; deterministic per seed."""
    hp = hyper if hyper is not None else HyperParams(seed=seed)
    rng = np.random.default_rng(seed)
    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape in param_shapes(hp).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            if name == "head.W":
                limit *= HEAD_INIT_SCALE
            params[name] = rng.uniform(-limit, limit, size=shape)
    return ModelParams(hyper=hp, params=params)


@dataclass
class AdamState:
    """First and second moments per parameter and the step counter."""

    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """Bias-corrected Adam update, applied in place."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def cosine_lr(epoch: int, sched: LRSchedule) -> float:
    """lr_min + (lr_max - lr_min)(1 + cos(pi * epoch / total)) / 2, exact at both ends."""
    if epoch < 0 or epoch > sched.total_epochs:
        raise DomainError(f"epoch {epoch} outside [0, {sched.total_epochs}]")
    if epoch == 0:
        return sched.lr_max
    if epoch == sched.total_epochs:
        return sched.lr_min
    cos = math.cos(math.pi * epoch / sched.total_epochs)
    return sched.lr_min + 0.5 * (sched.lr_max - sched.lr_min) * (1.0 + cos)


# ============================================================================
# Forward
# ============================================================================

def shift_operator(S: Shift, normalize: bool = False) -> Shift:
    """The adjacency itself, or D^-1/2 S D^-1/2 with isolated nodes left at zero."""
    if not normalize:
        return S
    deg = np.asarray(S.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    if sp.issparse(S):
        D = sp.diags(inv)
        return (D @ S @ D).tocsr()
    return np.asarray(S) * inv[:, None] * inv[None, :]


def graph_conv_forward(X: np.ndarray, S: Shift, bank: Sequence[np.ndarray]) -> np.ndarray:
    """Y = sum_k S^k X H_k."""
    if not bank:
        raise ShapeError("graph filter bank is empty")
    n = X.shape[0]
    if S.shape != (n, n):
        raise ShapeError(f"shift operator shape {S.shape} does not match {n} nodes")
    if bank[0].shape[0] != X.shape[1]:
        raise ShapeError(f"filter expects {bank[0].shape[0]} features, got {X.shape[1]}")
    Z = X
    Y = Z @ bank[0]
    for H in bank[1:]:
        Z = S @ Z
        Y = Y + Z @ H
    return np.asarray(Y)


@dataclass
class _DenseCache:
    a_in: np.ndarray
    z: np.ndarray


@dataclass
class _GraphCache:
    shifts: List[np.ndarray]
    z: np.ndarray


@dataclass
class ForwardCache:
    """Activations kept for the backward pass."""

    S: Shift
    dense: List[_DenseCache] = field(default_factory=list)
    graph: List[_GraphCache] = field(default_factory=list)
    head_in: Optional[np.ndarray] = None


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _check_input(model: ModelParams, X: np.ndarray, S: Shift) -> None:
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError(f"feature matrix must be N x F with N >= 1, got {X.shape}")
    if X.shape[1] != model.hyper.in_features:
        raise ShapeError(f"expected {model.hyper.in_features} features, got {X.shape[1]}")
    if S.shape != (X.shape[0], X.shape[0]):
        raise ShapeError(f"adjacency shape {S.shape} does not match {X.shape[0]} nodes")


def forward_with_cache(
    model: ModelParams,
    X: np.ndarray,
    S: Shift,
) -> Tuple[np.ndarray, ForwardCache]:
    _check_input(model, X, S)
    shift = shift_operator(S, model.hyper.normalize_adjacency)
    cache = ForwardCache(S=shift)

    a = np.asarray(X, dtype=np.float64)
    if model.input_shift is not None and model.input_scale is not None:
        a = (a - model.input_shift) / model.input_scale
    for W, b in model.dense_layers():
        z = a @ W + b
        cache.dense.append(_DenseCache(a_in=a, z=z))
        a = _relu(z)

    for bank in model.graph_banks():
        shifts = [a]
        for _ in bank[1:]:
            shifts.append(np.asarray(shift @ shifts[-1]))
        z = shifts[0] @ bank[0]
        for Z, H in zip(shifts[1:], bank[1:]):
            z = z + Z @ H
        cache.graph.append(_GraphCache(shifts=shifts, z=z))
        a = _relu(z)

    cache.head_in = a
    logits = a @ model.params["head.W"] + model.params["head.b"]
    return logits, cache


def forward(model: ModelParams, X: np.ndarray, S: Shift) -> np.ndarray:
    """Per-node logits over the candidate slots."""
    return forward_with_cache(model, X, S)[0]


# ============================================================================
# Backward
# ============================================================================

def backward(
    model: ModelParams,
    cache: ForwardCache,
    dlogits: np.ndarray,
) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """
    Reverse-mode pass through the fixed pipeline.

    Graph layers: dL/dH_k = (S^k X)^T dY and dL/dX = sum_k (S^T)^k dY H_k^T,
    evaluated by Horner's rule. Returns (grads by parameter name, dL/dX).
    """
    assert cache.head_in is not None
    grads: Dict[str, np.ndarray] = {}
    W = model.params["head.W"]
    grads["head.W"] = cache.head_in.T @ dlogits
    grads["head.b"] = dlogits.sum(axis=0)
    d = dlogits @ W.T

    shift_t = cache.S.T
    banks = model.graph_banks()
    for l in reversed(range(len(banks))):
        gc = cache.graph[l]
        bank = banks[l]
        d = d * (gc.z > 0.0)
        for k, Z in enumerate(gc.shifts):
            grads[f"gconv{l}.H{k}"] = Z.T @ d
        total = d @ bank[-1].T
        for H in reversed(bank[:-1]):
            total = np.asarray(shift_t @ total) + d @ H.T
        d = total

    for l in reversed(range(len(cache.dense))):
        dc = cache.dense[l]
        d = d * (dc.z > 0.0)
        grads[f"dense{l}.W"] = dc.a_in.T @ d
        grads[f"dense{l}.b"] = d.sum(axis=0)
        d = d @ model.params[f"dense{l}.W"].T

    if model.input_scale is not None:
        d = d / model.input_scale
    ordered = {name: grads[name] for name in model.params}
    return ordered, d


# ============================================================================
# Loss and decoding
# ============================================================================

def _label_index(labels: np.ndarray, n_out: int) -> np.ndarray:
    """Accept per-row slot indices (-1 = unlabeled) or one-hot rows (all-zero = unlabeled)."""
    labels = np.asarray(labels)
    if labels.ndim == 2:
        if labels.shape[1] != n_out:
            raise ShapeError(f"one-hot labels need {n_out} columns, got {labels.shape[1]}")
        has = labels.sum(axis=1) > 0
        return np.where(has, labels.argmax(axis=1), -1).astype(np.int64)
    return labels.astype(np.int64)


def masked_softmax_xent(
    logits: np.ndarray,
    labels: np.ndarray,
    valid: np.ndarray,
    denom: Optional[float] = None,
) -> Tuple[float, np.ndarray]:
    """
    Cross-entropy over valid slots, averaged over labeled rows.

    Invalid slots get a -1e9 additive mask before the softmax. Unlabeled
    rows contribute neither loss nor gradient. `denom` overrides the
    number of labeled rows as the averaging denominator (batch training).
    """
    n, c = logits.shape
    if valid.shape != (n, c):
        raise ShapeError(f"mask shape {valid.shape} does not match logits {logits.shape}")
    idx = _label_index(labels, c)
    if idx.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {idx.shape}")
    rows = np.flatnonzero(idx >= 0)
    if np.any(idx >= c):
        raise LabelError(f"label slot out of range [0, {c})")
    if rows.size and not np.all(valid[rows, idx[rows]]):
        bad = int(rows[~valid[rows, idx[rows]]][0])
        raise LabelError(f"row {bad} is labeled with masked slot {int(idx[bad])}")

    dlogits = np.zeros_like(logits, dtype=np.float64)
    if rows.size == 0:
        return 0.0, dlogits
    scale = float(denom) if denom is not None else float(rows.size)

    z = logits[rows] + np.where(valid[rows], 0.0, MASK_PENALTY)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_norm
    target = idx[rows]
    loss = -float(log_p[np.arange(rows.size), target].sum()) / scale

    grad = np.exp(log_p)
    grad[np.arange(rows.size), target] -= 1.0
    dlogits[rows] = grad / scale
    return loss, dlogits


def masked_softmax(logits: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Row-wise probabilities with masked slots at zero; all-masked rows are all zero."""
    z = np.where(valid, logits, -np.inf)
    out = np.zeros_like(logits, dtype=np.float64)
    has = valid.any(axis=1)
    if has.any():
        zz = z[has] - z[has].max(axis=1, keepdims=True)
        e = np.exp(zz)
        out[has] = e / e.sum(axis=1, keepdims=True)
    return out


def masked_argmax(logits: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Best valid slot per row, -1 where no slot is valid."""
    z = np.where(valid, logits, -np.inf)
    best = z.argmax(axis=1)
    return np.where(valid.any(axis=1), best, -1).astype(np.int64)


def loss_and_grads(
    model: ModelParams,
    X: np.ndarray,
    S: Shift,
    labels: np.ndarray,
    valid: np.ndarray,
    denom: Optional[float] = None,
) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
    """Forward, loss and backward in one call: (loss, parameter grads, dL/dX)."""
    logits, cache = forward_with_cache(model, X, S)
    loss, dlogits = masked_softmax_xent(logits, labels, valid, denom=denom)
    grads, dX = backward(model, cache, dlogits)
    return loss, grads, dX


__all__ = [
    "HyperParams",
    "LRSchedule",
    "ModelParams",
    "AdamState",
    "ForwardCache",
    "param_shapes",
    "init_params",
    "adam_step",
    "cosine_lr",
    "shift_operator",
    "graph_conv_forward",
    "forward",
    "forward_with_cache",
    "backward",
    "masked_softmax_xent",
    "masked_softmax",
    "masked_argmax",
    "loss_and_grads",
]
