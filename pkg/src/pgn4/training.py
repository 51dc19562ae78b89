"""Minibatch training with Adam and binary cross-entropy, plus gradient checking.

Defaults follow the experimental setup this package reproduces: learning
rate 2e-4 for 20 epochs, Adam decay rates beta1=0.9 / beta2=0.999 /
eps=1e-8, minibatches of 32 with a seeded shuffle each epoch.  Given the
same (seed, data, config) the trained parameters are bit-identical run to
run: shuffling, initialization and dropout all draw from the package Rng
and numpy's elementwise ops are deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import DatasetTable
from .layers import Dropout
from .metrics import confusion_at, accuracy_f1, roc_auc, pr_auc
from .rng import Rng
from .tensor import ShapeError

PROB_CLAMP = 1e-12  # BCE stability


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    epochs: int = 20
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1/beta2 must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")


class AdamState:
    """First/second moment buffers and the shared timestep."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. each probability.

    Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs; the
    gradient is of the clamped loss (zero slope once clamped).
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError(f"probabilities and labels must match, got {p.shape} vs {y.shape}")
    n = p.size
    clamped = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(y * np.log(clamped) + (1.0 - y) * np.log1p(-clamped)))
    grad = (-y / clamped + (1.0 - y) / (1.0 - clamped)) / n
    grad[(p < PROB_CLAMP) | (p > 1.0 - PROB_CLAMP)] = 0.0
    return loss, grad


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> None:
    """One Adam update, in place: moments, bias correction, parameter step."""
    if set(params) != set(state.m):
        raise ValueError("parameter names do not match optimizer state")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bias1 = 1.0 - b1**state.t
    bias2 = 1.0 - b2**state.t
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(f"{name}: grad shape {g.shape} != param shape {theta.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        theta -= config.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + config.eps)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    valid_loss: float
    valid_acc: float
    valid_f1: float
    valid_roc_auc: float
    valid_pr_auc: float


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    adam_steps: int = 0  # optimizer timesteps consumed; one per minibatch

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["epoch", "train_loss", "train_acc", "valid_loss", "valid_acc",
                 "valid_roc_auc", "valid_pr_auc"]
            )
            for e in self.epochs:
                writer.writerow(
                    [e.epoch] + [repr(float(v)) for v in (
                        e.train_loss, e.train_acc, e.valid_loss, e.valid_acc,
                        e.valid_roc_auc, e.valid_pr_auc)]
                )


def _batches(n: int, batch_size: int, order: np.ndarray) -> list[np.ndarray]:
    """Consecutive slices of the (shuffled) order; a trailing singleton is
    merged into the previous batch so batch norm always sees >= 2 values."""
    out = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(out) > 1 and len(out[-1]) == 1:
        out[-2] = np.concatenate([out[-2], out[-1]])
        out.pop()
    return out


def train(
    model,
    train_table: DatasetTable,
    valid_table: DatasetTable,
    config: TrainConfig,
) -> TrainHistory:
    """Run the full training loop; mutates the model, returns the history.

    Per epoch: seeded shuffle, minibatch forward (training mode), BCE,
    backprop, one Adam step per batch; then a validation pass in
    inference mode.  The model is left in inference mode (its default).
    """
    if train_table.n_rows == 0:
        raise ValueError("empty training set")
    if train_table.feature_names != valid_table.feature_names:
        raise ValueError("train/validation feature columns differ (names or order)")
    if train_table.n_features != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, data has {train_table.n_features}"
        )
    X, y = train_table.features, train_table.labels.astype(np.float64)
    Xv, yv = valid_table.features, valid_table.labels.astype(np.float64)
    rng = Rng(config.seed)
    state = AdamState(model.parameters())
    history = TrainHistory()
    n = train_table.n_rows
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        loss_sum = 0.0
        hit_sum = 0
        for batch in _batches(n, config.batch_size, order):
            Xb, yb = X[batch], y[batch]
            p = model.forward(Xb, training=True, rng=rng)
            loss, dp = bce_loss(p, yb)
            grads = model.backward(dp)
            adam_step(model.parameters(), grads, state, config)
            loss_sum += loss * len(batch)
            hit_sum += int(((p >= 0.5) == (yb == 1.0)).sum())
        pv = model.forward(Xv, training=False)
        vloss, _ = bce_loss(pv, yv)
        vacc, vf1 = accuracy_f1(confusion_at(pv, yv, 0.5))
        both_classes = 0 < valid_table.labels.sum() < valid_table.n_rows
        vroc = roc_auc(pv, yv)[0] if both_classes else float("nan")
        vpr = pr_auc(pv, yv)[0] if valid_table.labels.sum() > 0 else float("nan")
        history.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_acc=hit_sum / n,
                valid_loss=vloss,
                valid_acc=vacc,
                valid_f1=vf1,
                valid_roc_auc=vroc,
                valid_pr_auc=vpr,
            )
        )
    history.adam_steps = state.t
    return history


@dataclass
class GradientCheckReport:
    per_tensor: dict[str, float]  # max relative error per parameter tensor
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.per_tensor.values())

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def loss_on_batch(model, X: np.ndarray, y: np.ndarray) -> float:
    """Training-mode forward + BCE; the scalar the gradient check probes."""
    p = model.forward(X, training=True)
    return bce_loss(p, np.asarray(y, dtype=np.float64))[0]


def gradient_check(
    model,
    X: np.ndarray,
    y: np.ndarray,
    h: float = 1e-5,
    tolerance: float = 1e-4,
    grads: dict[str, np.ndarray] | None = None,
) -> GradientCheckReport:
    """Compare analytic gradients against central finite differences.

    Both paths evaluate the training-mode loss, so batch norm uses batch
    statistics consistently.  Dropout is disabled for the duration (its
    stochastic mask would make the two paths incomparable).  Relative
    error uses |a - b| / max(|a|, |b|, 1e-3); the floor keeps finite-
    difference noise on near-zero gradients from registering as failures.

    Running statistics are restored afterwards, so checking a model does
    not perturb it.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    dropouts = [l for l in model.layers if isinstance(l, Dropout)]
    saved_rates = [d.rate for d in dropouts]
    for d in dropouts:
        d.rate = 0.0
    saved_stats = {}
    if hasattr(model, "running_stats"):
        saved_stats = {k: v.copy() for k, v in model.running_stats().items()}
    try:
        if grads is None:
            p = model.forward(X, training=True)
            _, dp = bce_loss(p, y)
            grads = model.backward(dp)
        report: dict[str, float] = {}
        for name, theta in model.parameters().items():
            analytic = grads[name]
            worst = 0.0
            flat = theta.reshape(-1)
            aflat = analytic.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp = loss_on_batch(model, X, y)
                flat[i] = orig - h
                lm = loss_on_batch(model, X, y)
                flat[i] = orig
                fd = (lp - lm) / (2.0 * h)
                denom = max(abs(fd), abs(aflat[i]), 1e-3)
                worst = max(worst, abs(fd - aflat[i]) / denom)
            report[name] = worst
        return GradientCheckReport(per_tensor=report, tolerance=tolerance)
    finally:
        for d, rate in zip(dropouts, saved_rates):
            d.rate = rate
        if saved_stats and hasattr(model, "batchnorms"):
            for bn in model.batchnorms:
                bn.running_mean = saved_stats[f"{bn.name}.running_mean"]
                bn.running_var = saved_stats[f"{bn.name}.running_var"]
