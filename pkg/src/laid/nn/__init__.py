from .arch import tiny_detector_arch, tiny_detector_specs
from .layers import LayerKind, LayerSpec
from .network import NetworkGraph, backward, forward, positive_probability, predict
from .optim import (AdamState, EarlyStopState, SchedulerState, adam_step, bce_loss,
                    scheduler_step, softmax)
from .training import EpochLog, TrainConfig, TrainedModel, evaluate_accuracy, train

__all__ = [
    "AdamState", "EarlyStopState", "EpochLog", "LayerKind", "LayerSpec", "NetworkGraph",
    "SchedulerState", "TrainConfig", "TrainedModel", "adam_step", "backward", "bce_loss",
    "evaluate_accuracy", "forward", "positive_probability", "predict", "scheduler_step",
    "softmax", "tiny_detector_arch", "tiny_detector_specs", "train",
]
