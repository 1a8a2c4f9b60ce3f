"""
Experiment harness - metrics, paired-trial experiments, the sample-efficiency sweep
and dataset aggregation.
"""

from perimeter_defense.harness.aggregation import (
    AggregationConfig,
    AggregationResult,
    aggregate_and_train,
    collect_visited_states,
    label_visited,
)
from perimeter_defense.harness.experiments import (
    CSV_FIELDS,
    ExperimentResult,
    ExperimentSpec,
    SweepConfig,
    mean_fraction,
    metrics_csv_text,
    run_experiment,
    run_trial,
    sample_efficiency_sweep,
    trial_seed,
    write_metrics_csv,
    write_sweep_csv,
)
from perimeter_defense.harness.metrics import (
    MetricsRow,
    TrialRecord,
    absolute_accuracy,
    aggregate,
    comparative_accuracy,
    comparative_table,
)

__all__ = [
    "AggregationConfig",
    "AggregationResult",
    "aggregate_and_train",
    "collect_visited_states",
    "label_visited",
    "absolute_accuracy",
    "comparative_accuracy",
    "TrialRecord",
    "MetricsRow",
    "aggregate",
    "comparative_table",
    "CSV_FIELDS",
    "ExperimentSpec",
    "ExperimentResult",
    "SweepConfig",
    "trial_seed",
    "run_trial",
    "run_experiment",
    "write_metrics_csv",
    "metrics_csv_text",
    "sample_efficiency_sweep",
    "write_sweep_csv",
    "mean_fraction",
]
