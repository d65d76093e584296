from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..imgcore import Rng
from .network import NetworkGraph, forward, predict
from .optim import AdamState, EarlyStopState, SchedulerState, adam_step, bce_loss, scheduler_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-4
    weight_decay: float = 0.0
    plateau_patience: int = 5
    plateau_factor: float = 0.1
    early_stop_window: int = 10
    seed: int = 0
    eval_batch_size: int = 256

    def __post_init__(self):
        if not 1 <= self.epochs <= 100:
            raise ParameterError("epochs must be in [1, 100]")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.lr < 0:
            raise ParameterError("lr must be non-negative")


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_acc: float
    lr: float


@dataclass
class TrainedModel:
    net: NetworkGraph
    log: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = 0.0
    stopped_early: bool = False


def evaluate_accuracy(net: NetworkGraph, images: np.ndarray, labels: np.ndarray,
                      batch_size: int = 256) -> float:
    """Percent of samples whose argmax prediction equals the label."""
    was_training = net.training
    net.eval()
    correct = 0
    for i in range(0, len(images), batch_size):
        logits = forward(net, images[i:i + batch_size])
        correct += int((predict(logits) == labels[i:i + batch_size]).sum())
    net.train(was_training)
    return 100.0 * correct / len(images)


def train(net: NetworkGraph, train_set, val_set, config: TrainConfig) -> TrainedModel:
    """Mini-batch Adam training with plateau LR decay and early stopping.

    ``train_set`` and ``val_set`` are ``(images, labels)`` pairs, images
    shaped N x H x W x C in [0, 255]. The returned network carries the
    parameters of the epoch with the best validation accuracy.
    """
    x_tr, y_tr = np.asarray(train_set[0], dtype=np.float32), np.asarray(train_set[1], dtype=np.int64)
    x_va, y_va = np.asarray(val_set[0], dtype=np.float32), np.asarray(val_set[1], dtype=np.int64)
    if len(x_tr) == 0 or len(x_va) == 0:
        raise ParameterError("empty training or validation set")

    rng = Rng(config.seed)
    adam = AdamState(lr=config.lr, weight_decay=config.weight_decay)
    sched = SchedulerState(patience=config.plateau_patience, factor=config.plateau_factor)
    stopper = EarlyStopState(window=config.early_stop_window)
    result = TrainedModel(net)
    n = len(x_tr)

    for epoch in range(1, config.epochs + 1):
        net.train()
        order = rng.child(epoch).permutation(n)
        total = 0.0
        for i in range(0, n, config.batch_size):
            idx = order[i:i + config.batch_size]
            logits = forward(net, x_tr[idx])
            loss, g = bce_loss(logits, y_tr[idx])
            net.backward(g)
            adam_step(adam, net.theta, net.grad)
            total += loss * len(idx)
        val_acc = evaluate_accuracy(net, x_va, y_va, config.eval_batch_size)
        result.log.append(EpochLog(epoch, total / n, val_acc, adam.lr))
        log.info("epoch %d loss %.5f val_acc %.2f lr %.1e", epoch, total / n, val_acc, adam.lr)
        stop = stopper.update(epoch, val_acc, net.theta, net.buffers)
        adam.lr = scheduler_step(sched, val_acc, adam.lr)
        if stop:
            result.stopped_early = True
            break

    theta, buffers = stopper.best_checkpoint
    net.theta[...] = theta
    net.buffers[...] = buffers
    net.eval()
    result.best_epoch = stopper.best_epoch
    result.best_val_acc = stopper.best_val_acc
    return result
