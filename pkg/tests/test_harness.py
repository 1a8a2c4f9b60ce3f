"""
Metrics, paired experiments, CSV output and the sample-efficiency sweep.
"""

import csv
import io
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from perimeter_defense.errors import CheckpointError, DomainError
from perimeter_defense.harness import (
    AggregationConfig,
    CSV_FIELDS,
    ExperimentSpec,
    SweepConfig,
    TrialRecord,
    absolute_accuracy,
    aggregate_and_train,
    aggregate,
    collect_visited_states,
    comparative_accuracy,
    comparative_table,
    label_visited,
    mean_fraction,
    metrics_csv_text,
    run_experiment,
    sample_efficiency_sweep,
    trial_seed,
    write_metrics_csv,
    write_sweep_csv,
)
from perimeter_defense.harness.aggregation import _StateRecorder
from perimeter_defense.learning.dataset import generate_dataset, split
from perimeter_defense.learning.network import init_params
from perimeter_defense.learning.training import TrainConfig, fit_input_scaling, train
from perimeter_defense.policies import GreedyPolicy, PolicyName
from perimeter_defense.sim.world import GameConfig, init_random


def _record(policy: str, trial: int, captures: int, size: int = 4, t: float = 1.0) -> TrialRecord:
    return TrialRecord(
        size=size,
        policy=policy,
        trial=trial,
        seed=trial,
        captures=captures,
        intrusions=size - captures,
        timeouts=0,
        fraction=captures / size,
        terminal_time=t,
    )


def test_accuracy_examples() -> None:
    assert absolute_accuracy(7, 10) == 0.7
    assert absolute_accuracy(0, 5) == 0.0
    assert comparative_accuracy(7, 5) == 1.4
    assert comparative_accuracy(3, 0) is None
    with pytest.raises(DomainError):
        absolute_accuracy(11, 10)
    with pytest.raises(DomainError):
        absolute_accuracy(0, 0)


def test_aggregate_uses_population_std() -> None:
    rows = aggregate([_record("gnn", 0, 2, t=1.0), _record("gnn", 1, 4, t=3.0), _record("greedy", 0, 1)])
    assert [(r.size, r.policy, r.trials) for r in rows] == [(4, "gnn", 2), (4, "greedy", 1)]
    gnn = rows[0]
    assert gnn.mean_captures == 3.0
    assert gnn.std_captures == 1.0
    assert gnn.mean_fraction == 0.75
    assert gnn.std_fraction == 0.25
    assert gnn.std_terminal_time == 1.0
    assert rows[1].std_captures == 0.0


def test_comparative_table() -> None:
    rows = aggregate([_record("gnn", 0, 3), _record("greedy", 0, 2), _record("random", 0, 0)])
    table = comparative_table(rows)
    assert table == [
        {"size": 4, "policy": "greedy", "ratio": 1.5},
        {"size": 4, "policy": "random", "ratio": None},
    ]


def test_trial_seed_is_shared_and_distinct() -> None:
    assert trial_seed(0, 4, 1) == trial_seed(0, 4, 1)
    assert len({trial_seed(0, n, k) for n in (2, 4, 6) for k in range(5)}) == 15
    assert trial_seed(1, 4, 1) != trial_seed(0, 4, 1)


def test_cells_skip_expensive_expert() -> None:
    spec = ExperimentSpec(team_sizes=[4, 20], policies=[PolicyName.EXPERT, PolicyName.GREEDY])
    assert spec.cells() == [
        (4, PolicyName.EXPERT),
        (4, PolicyName.GREEDY),
        (20, PolicyName.GREEDY),
    ]
    spec = spec.model_copy(update={"allow_expensive": True})
    assert (20, PolicyName.EXPERT) in spec.cells()


def test_spec_validation() -> None:
    with pytest.raises(ValidationError):
        ExperimentSpec(team_sizes=[0])
    with pytest.raises(ValidationError):
        ExperimentSpec(trials=0)


def test_learned_policy_needs_checkpoint() -> None:
    spec = ExperimentSpec(team_sizes=[2], policies=[PolicyName.GNN], trials=1)
    with pytest.raises(CheckpointError):
        run_experiment(spec)


def test_policies_share_initial_worlds() -> None:
    spec = ExperimentSpec(
        team_sizes=[2, 3],
        policies=[PolicyName.GREEDY, PolicyName.RANDOM, PolicyName.EXPERT],
        trials=2,
    )
    result = run_experiment(spec)
    assert len(result.records) == 2 * 3 * 2
    by_key = {}
    for r in result.records:
        by_key.setdefault((r.size, r.trial), set()).add(r.world_fingerprint)
        assert r.captures + r.intrusions + r.timeouts == r.size
    assert all(len(prints) == 1 for prints in by_key.values())
    assert len(result.rows) == 6
    assert 0.0 <= mean_fraction(result, 3, "greedy") <= 1.0


def test_experiment_with_learned_model() -> None:
    spec = ExperimentSpec(team_sizes=[2], policies=[PolicyName.GNN], trials=2)
    result = run_experiment(spec, models={PolicyName.GNN: init_params(0)})
    assert [r.policy for r in result.records] == ["gnn", "gnn"]


def test_metrics_csv(tmp_path: Path) -> None:
    spec = ExperimentSpec(team_sizes=[2], policies=[PolicyName.GREEDY], trials=3)
    result = run_experiment(spec)
    path = tmp_path / "out" / "metrics.csv"
    write_metrics_csv(result, path)
    with path.open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert [r["trial"] for r in rows] == ["0", "1", "2", "mean", "std"]
    assert float(rows[3]["fraction"]) == pytest.approx(result.rows[0].mean_fraction)
    assert rows[4]["intrusions"] == ""
    assert metrics_csv_text(result) == path.read_text(encoding="utf-8")


def test_sweep_requires_ascending_counts() -> None:
    spec = ExperimentSpec(team_sizes=[2], trials=1)
    with pytest.raises(DomainError):
        sample_efficiency_sweep([10, 5], spec)
    with pytest.raises(DomainError):
        sample_efficiency_sweep([], spec)


def test_tiny_sweep() -> None:
    spec = ExperimentSpec(team_sizes=[2, 3], trials=1)
    sweep = SweepConfig(train_size=3, train=TrainConfig(epochs=2, batch_size=4))
    rows = sample_efficiency_sweep([3, 5], spec, sweep)
    assert [(r["demos"], r["size"]) for r in rows] == [(3, 2), (3, 3), (5, 2), (5, 3)]
    assert all(0.0 <= r["mean_fraction"] <= 1.0 for r in rows)
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    assert buf.getvalue().splitlines()[0] == "demos,size,mean_fraction,std_fraction,train_loss"
    assert len(buf.getvalue().splitlines()) == 5


def test_state_recorder_keeps_every_stride_th_world(cfg10) -> None:
    world = init_random(cfg10, 4)
    recorder = _StateRecorder(GreedyPolicy(), stride=3)
    for _ in range(7):
        recorder.decide(world, cfg10)
    assert len(recorder.worlds) == 3
    recorder.reset(0)
    recorder.decide(world, cfg10)
    assert len(recorder.worlds) == 4
    assert recorder.name == "greedy"


def test_visited_states_are_live_and_labelled() -> None:
    agg = AggregationConfig(episodes=2, stride=3, team_size=3, seed=1)
    visited = collect_visited_states(init_params(0), agg)
    assert visited
    assert all(not world.done for world, _ in visited)
    samples = label_visited(visited)
    assert all(s.n_labeled > 0 for s in samples)
    assert all(s.n == 3 for s in samples)


def test_aggregation_grows_train_split_only() -> None:
    data = split(generate_dataset(10, GameConfig.for_team(3), seed=4), seed=0)
    agg = AggregationConfig(rounds=2, episodes=1, stride=4, team_size=3, seed=2)
    result = aggregate_and_train(init_params(0), data, TrainConfig(epochs=1, batch_size=4), agg)

    assert len(result.histories) == 3
    assert len(result.added) == 2
    assert result.train_size == len(data.train) + sum(result.added)
    # validation split is fixed, so the starting loss of round k is the final loss of round k - 1
    for before, after in zip(result.histories, result.histories[1:]):
        assert after.initial_val_loss == pytest.approx(before.final.val_loss, rel=1e-12)
    shift, _ = fit_input_scaling(data.train)
    assert np.array_equal(result.model.input_shift, shift)


def test_zero_rounds_is_plain_training() -> None:
    data = split(generate_dataset(10, GameConfig.for_team(3), seed=4), seed=0)
    cfg = TrainConfig(epochs=2, batch_size=4)
    result = aggregate_and_train(init_params(0), data, cfg, AggregationConfig(rounds=0))
    plain, _ = train(init_params(0), data, cfg)
    assert result.added == []
    assert all(np.array_equal(result.model.params[k], plain.params[k]) for k in plain.params)
