"""Loss, Adam, plateau LR scheduling and early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, ParameterError


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def bce_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Two-logit binary cross-entropy: mean softmax cross-entropy over the batch.

    Returns the loss and dL/dlogits, i.e. (softmax - onehot) / batch_size.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    if n == 0:
        raise ParameterError("empty batch")
    if not np.all((labels == 0) | (labels == 1)):
        raise ParameterError("labels must be 0 or 1")
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsumexp - z[np.arange(n), labels]))
    grad = np.exp(z - logsumexp[:, None])
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(logits.dtype)


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def adam_step(state: AdamState, theta: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update of ``theta`` in place."""
    if grads.shape != theta.shape:
        raise ParameterError(f"gradient length {grads.shape} != parameter length {theta.shape}")
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient")
    if state.m is None:
        state.m = np.zeros_like(theta)
        state.v = np.zeros_like(theta)
    g = grads + state.weight_decay * theta if state.weight_decay else grads
    state.t += 1
    state.m *= state.beta1
    state.m += (1 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1 - state.beta2) * g * g
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v / (1 - state.beta2 ** state.t)
    theta -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(theta.dtype)
    return theta


@dataclass
class SchedulerState:
    """Reduce-on-plateau in maximize mode over validation accuracy."""

    patience: int = 5
    factor: float = 0.1
    best_metric: float = float("-inf")
    epochs_since_improvement: int = 0


def scheduler_step(state: SchedulerState, val_acc: float, lr: float) -> float:
    if val_acc > state.best_metric:
        state.best_metric = val_acc
        state.epochs_since_improvement = 0
        return lr
    state.epochs_since_improvement += 1
    if state.epochs_since_improvement > state.patience:
        state.epochs_since_improvement = 0
        return lr * state.factor
    return lr


@dataclass
class EarlyStopState:
    window: int = 10
    best_val_acc: float = float("-inf")
    best_epoch: int = 0
    stale_epochs: int = 0
    best_checkpoint: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def update(self, epoch: int, val_acc: float, theta: np.ndarray, buffers: np.ndarray) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_acc > self.best_val_acc:
            self.best_val_acc = val_acc
            self.best_epoch = epoch
            self.stale_epochs = 0
            self.best_checkpoint = (theta.copy(), buffers.copy())
        else:
            self.stale_epochs += 1
        return self.stale_epochs >= self.window
