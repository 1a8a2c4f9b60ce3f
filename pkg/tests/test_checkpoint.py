"""
Checkpoint round trip and rejection of malformed files.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from perimeter_defense.errors import CheckpointError
from perimeter_defense.learning.checkpoint import load_checkpoint, save_checkpoint
from perimeter_defense.learning.network import HyperParams, forward, init_params


def test_round_trip_is_exact(tmp_path: Path, rng) -> None:
    model = init_params(11)
    path = save_checkpoint(model, tmp_path / "nested" / "gnn.json")
    loaded = load_checkpoint(path)
    assert loaded.hyper == model.hyper
    assert list(loaded.params) == list(model.params)
    for name in model.params:
        assert np.array_equal(loaded.params[name], model.params[name])
    x = rng.normal(size=(3, 39))
    S = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(forward(model, x, S), forward(loaded, x, S))


def test_round_trip_keeps_mlp_hyperparams(tmp_path: Path) -> None:
    model = init_params(0, HyperParams.mlp_only(k_hops=2))
    loaded = load_checkpoint(save_checkpoint(model, tmp_path / "mlp.json"))
    assert loaded.hyper.use_graph is False
    assert loaded.hyper.gnn_sizes == ()


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "absent.json")


def test_not_json(tmp_path: Path) -> None:
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CheckpointError, match="malformed"):
        load_checkpoint(path)


def _tamper(tmp_path: Path, edit) -> Path:
    path = save_checkpoint(init_params(0), tmp_path / "m.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    edit(doc)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_wrong_shape(tmp_path: Path) -> None:
    def edit(doc):
        doc["params"]["head.W"]["shape"] = [10, 128]

    with pytest.raises(CheckpointError, match="head.W"):
        load_checkpoint(_tamper(tmp_path, edit))


def test_wrong_value_count(tmp_path: Path) -> None:
    def edit(doc):
        doc["params"]["head.b"]["data"] = doc["params"]["head.b"]["data"][:-1]

    with pytest.raises(CheckpointError, match="head.b"):
        load_checkpoint(_tamper(tmp_path, edit))


def test_missing_parameter(tmp_path: Path) -> None:
    def edit(doc):
        del doc["params"]["gconv0.H1"]

    with pytest.raises(CheckpointError, match="missing"):
        load_checkpoint(_tamper(tmp_path, edit))


def test_unknown_version(tmp_path: Path) -> None:
    def edit(doc):
        doc["format_version"] = 99

    with pytest.raises(CheckpointError, match="format_version"):
        load_checkpoint(_tamper(tmp_path, edit))


def test_inconsistent_hyperparams(tmp_path: Path) -> None:
    def edit(doc):
        doc["hyperparams"]["n_out"] = 7

    with pytest.raises(CheckpointError, match="malformed"):
        load_checkpoint(_tamper(tmp_path, edit))


def test_round_trip_keeps_input_scaling(tmp_path: Path, rng) -> None:
    model = init_params(3).with_input_scaling(rng.normal(size=39), rng.uniform(0.5, 2.0, 39))
    loaded = load_checkpoint(save_checkpoint(model, tmp_path / "scaled.json"))
    assert np.array_equal(loaded.input_shift, model.input_shift)
    assert np.array_equal(loaded.input_scale, model.input_scale)
    x = rng.normal(size=(2, 39))
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(forward(model, x, S), forward(loaded, x, S))


def test_unscaled_checkpoint_loads_unscaled(tmp_path: Path) -> None:
    loaded = load_checkpoint(save_checkpoint(init_params(0), tmp_path / "plain.json"))
    assert loaded.input_shift is None
    assert loaded.input_scale is None


@pytest.mark.parametrize(
    "scaling, match",
    [
        ({"input_shift": [0.0] * 39}, "together"),
        ({"input_shift": [0.0] * 38, "input_scale": [1.0] * 38}, "input scaling"),
        ({"input_shift": [0.0] * 39, "input_scale": [0.0] * 39}, "input scaling"),
    ],
)
def test_bad_input_scaling(tmp_path: Path, scaling, match) -> None:
    def edit(doc):
        doc.update(scaling)

    with pytest.raises(CheckpointError, match=match):
        load_checkpoint(_tamper(tmp_path, edit))
