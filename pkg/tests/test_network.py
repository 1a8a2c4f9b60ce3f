"""
Graph network: forward pipeline, analytic gradients, loss, optimizer and schedule.
"""

import math
from typing import Dict

import numpy as np
import pytest
import scipy.sparse as sp
from pydantic import ValidationError
from conftest import random_graph

from perimeter_defense.errors import DomainError, LabelError, ShapeError
from perimeter_defense.learning.network import (
    AdamState,
    HyperParams,
    LRSchedule,
    ModelParams,
    adam_step,
    cosine_lr,
    forward,
    graph_conv_forward,
    init_params,
    loss_and_grads,
    masked_argmax,
    masked_softmax,
    masked_softmax_xent,
    param_shapes,
    shift_operator,
)


def _batch(rng: np.random.Generator, n: int, hyper: HyperParams):
    x = rng.normal(0.0, 1.0, size=(n, hyper.in_features))
    s = random_graph(rng, n, 0.5)
    valid = rng.random((n, hyper.n_out)) < 0.6
    valid[:, 0] = True
    labels = np.array([int(rng.choice(np.flatnonzero(row))) for row in valid])
    labels[0] = -1
    return x, s, labels, valid


def _zero_model(hyper: HyperParams) -> ModelParams:
    model = init_params(0, hyper)
    for v in model.params.values():
        v[...] = 0.0
    return model


def test_graph_conv_examples() -> None:
    X = np.array([[1.0], [2.0]])
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    one = np.array([[1.0]])
    assert graph_conv_forward(X, S, [one, one]).tolist() == [[3.0], [3.0]]
    assert graph_conv_forward(X, np.zeros((2, 2)), [one, one, one]).tolist() == [[1.0], [2.0]]
    X2 = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert (S @ X2).tolist() == [[3.0, 4.0], [1.0, 2.0]]


def test_graph_conv_shape_errors() -> None:
    with pytest.raises(ShapeError):
        graph_conv_forward(np.ones((2, 1)), np.zeros((3, 3)), [np.ones((1, 1))])
    with pytest.raises(ShapeError):
        graph_conv_forward(np.ones((2, 2)), np.zeros((2, 2)), [np.ones((1, 1))])


def test_graph_conv_sparse_matches_dense(rng) -> None:
    X = rng.normal(size=(6, 4))
    S = random_graph(rng, 6)
    bank = [rng.normal(size=(4, 3)) for _ in range(3)]
    dense = graph_conv_forward(X, S, bank)
    sparse = graph_conv_forward(X, sp.csr_matrix(S), bank)
    assert np.allclose(dense, sparse, atol=1e-12)


def test_param_shapes_do_not_depend_on_team_size() -> None:
    shapes = param_shapes(HyperParams())
    assert shapes["dense0.W"] == (39, 16)
    assert shapes["dense1.W"] == (16, 8)
    assert shapes["gconv0.H1"] == (8, 32)
    assert shapes["gconv1.H0"] == (32, 128)
    assert shapes["head.W"] == (128, 10)
    mlp = param_shapes(HyperParams.mlp_only())
    assert mlp["head.W"] == (8, 10)
    assert not any(k.startswith("gconv") for k in mlp)


def test_hyperparams_validation() -> None:
    with pytest.raises(ValidationError):
        HyperParams(in_features=40)
    with pytest.raises(ValidationError):
        HyperParams(n_out=9)


def test_forward_zero_weights_gives_zero_logits(rng) -> None:
    model = _zero_model(HyperParams())
    x, s, _, _ = _batch(rng, 5, model.hyper)
    assert np.all(forward(model, x, s) == 0.0)


def test_forward_single_node_ignores_hops(rng) -> None:
    m1 = init_params(1, HyperParams(k_hops=1))
    m3 = init_params(2, HyperParams(k_hops=3))
    for name, value in m1.params.items():
        m3.params[name][...] = value
    x = rng.normal(size=(1, 39))
    S = np.zeros((1, 1))
    assert np.allclose(forward(m1, x, S), forward(m3, x, S), atol=1e-12)


def test_forward_shape_errors(rng) -> None:
    model = init_params(0)
    with pytest.raises(ShapeError):
        forward(model, rng.normal(size=(3, 38)), np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        forward(model, rng.normal(size=(3, 39)), np.zeros((2, 2)))


def test_forward_is_permutation_equivariant() -> None:
    rng = np.random.default_rng(21)
    model = init_params(3)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 12))
        x = rng.normal(size=(n, 39))
        S = random_graph(rng, n)
        perm = rng.permutation(n)
        P = np.eye(n)[perm]
        base = forward(model, x, S)
        moved = forward(model, P @ x, P @ S @ P.T)
        worst = max(worst, float(np.max(np.abs(moved - P @ base))))
    assert worst < 1e-6


def test_forward_is_local_to_two_hops(rng) -> None:
    model = init_params(4)
    n = 6
    S = np.zeros((n, n))
    for k in range(n - 1):
        S[k, k + 1] = S[k + 1, k] = 1.0
    x = rng.normal(size=(n, 39))
    far = x.copy()
    far[3:] = 0.0
    assert np.allclose(forward(model, x, S)[0], forward(model, far, S)[0], atol=1e-12, rtol=0)


def test_xent_examples() -> None:
    valid = np.ones((1, 10), dtype=bool)
    loss, _ = masked_softmax_xent(np.zeros((1, 10)), np.array([3]), valid)
    assert loss == pytest.approx(math.log(10))

    logits = np.zeros((1, 10))
    logits[0, 3] = 30.0
    loss, _ = masked_softmax_xent(logits, np.array([3]), valid)
    assert loss < 1e-9

    four = np.zeros((1, 10), dtype=bool)
    four[0, :4] = True
    loss, _ = masked_softmax_xent(np.zeros((1, 10)), np.array([2]), four)
    assert loss == pytest.approx(math.log(4))


def test_xent_accepts_one_hot_labels() -> None:
    valid = np.ones((2, 10), dtype=bool)
    one_hot = np.zeros((2, 10))
    one_hot[0, 4] = 1.0
    loss_idx, g_idx = masked_softmax_xent(np.zeros((2, 10)), np.array([4, -1]), valid)
    loss_hot, g_hot = masked_softmax_xent(np.zeros((2, 10)), one_hot, valid)
    assert loss_idx == loss_hot
    assert np.array_equal(g_idx, g_hot)


def test_xent_unlabeled_rows_have_no_gradient(rng) -> None:
    logits = rng.normal(size=(3, 10))
    valid = np.ones((3, 10), dtype=bool)
    loss, grad = masked_softmax_xent(logits, np.array([1, -1, 0]), valid)
    assert loss > 0
    assert np.all(grad[1] == 0.0)
    assert np.all(grad[[0, 2]].sum(axis=1) == pytest.approx(0.0, abs=1e-12))


def test_xent_rejects_label_on_masked_slot() -> None:
    valid = np.zeros((1, 10), dtype=bool)
    valid[0, 0] = True
    with pytest.raises(LabelError):
        masked_softmax_xent(np.zeros((1, 10)), np.array([5]), valid)


def _numeric_grad(model: ModelParams, name: str, idx, x, s, labels, valid, h=1e-5) -> float:
    p = model.params[name]
    old = p[idx]
    p[idx] = old + h
    up = loss_and_grads(model, x, s, labels, valid)[0]
    p[idx] = old - h
    down = loss_and_grads(model, x, s, labels, valid)[0]
    p[idx] = old
    return (up - down) / (2 * h)


def _rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-8)
    return float(np.linalg.norm(a - b)) / scale


def test_gradients_match_finite_differences() -> None:
    rng = np.random.default_rng(8)
    for trial in range(5):
        model = init_params(trial)
        x, s, labels, valid = _batch(rng, 4, model.hyper)
        _, grads, _ = loss_and_grads(model, x, s, labels, valid)
        for name, g in grads.items():
            assert g.shape == model.params[name].shape
            flat = [np.unravel_index(k, g.shape) for k in rng.choice(g.size, min(12, g.size), replace=False)]
            analytic = np.array([g[i] for i in flat])
            numeric = np.array([_numeric_grad(model, name, i, x, s, labels, valid) for i in flat])
            assert _rel_error(analytic, numeric) < 1e-4, name


def test_input_gradient_matches_finite_differences() -> None:
    rng = np.random.default_rng(9)
    model = init_params(5)
    x, s, labels, valid = _batch(rng, 4, model.hyper)
    _, _, dX = loss_and_grads(model, x, s, labels, valid)
    numeric = np.zeros(12)
    analytic = np.zeros(12)
    for k in range(12):
        i, j = int(rng.integers(4)), int(rng.integers(39))
        up, down = x.copy(), x.copy()
        up[i, j] += 1e-5
        down[i, j] -= 1e-5
        numeric[k] = (
            loss_and_grads(model, up, s, labels, valid)[0]
            - loss_and_grads(model, down, s, labels, valid)[0]
        ) / 2e-5
        analytic[k] = dX[i, j]
    assert _rel_error(analytic, numeric) < 1e-4


def test_zero_upstream_gives_zero_gradients(rng) -> None:
    model = init_params(0)
    x, s, _, valid = _batch(rng, 3, model.hyper)
    _, grads, dX = loss_and_grads(model, x, s, np.full(3, -1), valid)
    assert all(np.all(g == 0.0) for g in grads.values())
    assert np.all(dX == 0.0)


def test_adam_zero_gradients_keep_params() -> None:
    params: Dict[str, np.ndarray] = {"w": np.array([1.0, -2.0])}
    state = AdamState.zeros_like(params)
    adam_step(params, {"w": np.zeros(2)}, state, 0.1)
    assert params["w"].tolist() == [1.0, -2.0]


def test_adam_first_step_closed_form() -> None:
    params = {"w": np.array([0.0])}
    state = AdamState.zeros_like(params)
    adam_step(params, {"w": np.array([1.0])}, state, 0.1)
    assert params["w"][0] == pytest.approx(-0.1 / (1 + 1e-8), rel=1e-9)
    assert state.beta1 == 0.5
    assert state.t == 1


def test_adam_is_deterministic(rng) -> None:
    g = {"w": rng.normal(size=5)}
    runs = []
    for _ in range(2):
        params = {"w": np.ones(5)}
        state = AdamState.zeros_like(params)
        for _ in range(3):
            adam_step(params, g, state, 0.01)
        runs.append(params["w"].copy())
    assert np.array_equal(runs[0], runs[1])


def test_adam_rejects_shape_mismatch() -> None:
    params = {"w": np.zeros(2)}
    with pytest.raises(ShapeError):
        adam_step(params, {"w": np.zeros(3)}, AdamState.zeros_like(params), 0.1)


def test_cosine_schedule_endpoints_and_midpoint() -> None:
    sched = LRSchedule()
    assert cosine_lr(0, sched) == 5e-3
    assert cosine_lr(1500, sched) == 1e-6
    assert cosine_lr(750, sched) == pytest.approx((5e-3 + 1e-6) / 2, rel=1e-12)
    with pytest.raises(DomainError):
        cosine_lr(1501, sched)


def test_init_params_deterministic_and_glorot() -> None:
    a, b, c = init_params(1), init_params(1), init_params(2)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params)
    for name, value in a.params.items():
        if value.ndim == 1:
            assert np.all(value == 0.0)
        else:
            limit = math.sqrt(6.0 / (value.shape[0] + value.shape[1]))
            assert np.all(np.abs(value) <= limit)


def test_masked_decoding_never_picks_masked_slot(rng) -> None:
    logits = rng.normal(size=(20, 10))
    logits[:, 9] = 100.0
    valid = rng.random((20, 10)) < 0.5
    valid[:, 9] = False
    valid[0] = False
    best = masked_argmax(logits, valid)
    assert best[0] == -1
    for i in range(1, 20):
        if valid[i].any():
            assert valid[i, best[i]]
    probs = masked_softmax(logits, valid)
    assert np.all(probs[~valid] == 0.0)
    assert np.allclose(probs[valid.any(axis=1)].sum(axis=1), 1.0)


def test_normalized_shift_operator() -> None:
    S = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    N = shift_operator(S, normalize=True)
    assert N[0, 1] == pytest.approx(1 / math.sqrt(2))
    assert shift_operator(S) is S


def _scaled(model: ModelParams, rng: np.random.Generator) -> ModelParams:
    width = model.hyper.in_features
    return model.with_input_scaling(rng.normal(size=width), rng.uniform(0.5, 3.0, size=width))


def test_input_scaling_is_applied_before_the_first_layer(rng) -> None:
    plain = init_params(6)
    scaled = _scaled(plain, rng)
    x, s, _, _ = _batch(rng, 5, plain.hyper)
    by_hand = (x - scaled.input_shift) / scaled.input_scale
    assert np.allclose(forward(scaled, x, s), forward(plain, by_hand, s), atol=1e-12)
    assert not plain.standardized
    assert scaled.standardized


def test_input_gradient_with_scaling_matches_finite_differences() -> None:
    rng = np.random.default_rng(10)
    model = _scaled(init_params(5), rng)
    x, s, labels, valid = _batch(rng, 4, model.hyper)
    _, _, dX = loss_and_grads(model, x, s, labels, valid)
    numeric = np.zeros(12)
    analytic = np.zeros(12)
    for k in range(12):
        i, j = int(rng.integers(4)), int(rng.integers(39))
        up, down = x.copy(), x.copy()
        up[i, j] += 1e-5
        down[i, j] -= 1e-5
        numeric[k] = (
            loss_and_grads(model, up, s, labels, valid)[0]
            - loss_and_grads(model, down, s, labels, valid)[0]
        ) / 2e-5
        analytic[k] = dX[i, j]
    assert _rel_error(analytic, numeric) < 1e-4


def test_input_scaling_validation(rng) -> None:
    model = init_params(0)
    with pytest.raises(ShapeError):
        model.with_input_scaling(np.zeros(38), np.ones(38))
    with pytest.raises(DomainError):
        model.with_input_scaling(np.zeros(39), np.zeros(39))
    copy = _scaled(model, rng).copy()
    assert copy.standardized


def test_fresh_logits_are_close_to_uniform(rng) -> None:
    model = init_params(0)
    x, s, _, _ = _batch(rng, 8, model.hyper)
    logits = forward(model, x, s)
    assert np.max(np.abs(logits)) < 0.5
    valid = np.ones((8, 10), dtype=bool)
    loss, _ = masked_softmax_xent(logits, np.zeros(8, dtype=np.int64), valid)
    assert loss == pytest.approx(math.log(10), abs=0.1)
