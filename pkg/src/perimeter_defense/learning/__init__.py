"""
Learning layer - the assignment network, checkpoints, imitation data and training.
"""

# network and checkpoint first: the policies imported by `dataset` need them
from perimeter_defense.learning.network import (
    AdamState,
    HyperParams,
    LRSchedule,
    ModelParams,
    adam_step,
    backward,
    cosine_lr,
    forward,
    forward_with_cache,
    graph_conv_forward,
    init_params,
    loss_and_grads,
    masked_argmax,
    masked_softmax,
    masked_softmax_xent,
    param_shapes,
    shift_operator,
)
from perimeter_defense.learning.checkpoint import load_checkpoint, save_checkpoint  # noqa: I001
from perimeter_defense.learning.dataset import (
    DatasetSplit,
    GraphSample,
    generate_dataset,
    label_histogram,
    load_dataset,
    save_dataset,
    split,
)
from perimeter_defense.learning.training import (
    EvalResult,
    TrainConfig,
    TrainingHistory,
    collate,
    evaluate,
    train,
)

__all__ = [
    # network
    "HyperParams",
    "LRSchedule",
    "ModelParams",
    "AdamState",
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
    # checkpoint
    "save_checkpoint",
    "load_checkpoint",
    # dataset
    "GraphSample",
    "DatasetSplit",
    "generate_dataset",
    "label_histogram",
    "split",
    "save_dataset",
    "load_dataset",
    # training
    "TrainConfig",
    "EvalResult",
    "TrainingHistory",
    "collate",
    "evaluate",
    "train",
]
