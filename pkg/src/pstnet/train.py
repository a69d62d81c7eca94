"""Adam optimization, dataset splitting, and the training/evaluation loop.

Everything is driven by explicit integer seeds: the split permutation, the
per-epoch shuffles, the dropout masks, and the weight init all derive from
(seed, fixed stream id), so a run's numbers are a pure function of (data,
configs, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, ModelState, forward, init_state, loss, predict
from .tensor import Tensor

__all__ = [
    "TrainConfig",
    "AdamState",
    "RunMetrics",
    "NonFiniteGradient",
    "init_adam",
    "adam_step",
    "split",
    "fit",
    "evaluate",
    "run_loop",
    "write_metrics_jsonl",
    "stack_samples",
]


class NonFiniteGradient(RuntimeError):
    """Raised when a gradient contains NaN or infinity; the step is aborted."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 300
    seed: int = 0
    split_ratio: tuple[int, int] = (9, 6)
    shuffle: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {b}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        ratio = tuple(int(r) for r in self.split_ratio)
        if len(ratio) != 2 or ratio[0] < 0 or ratio[1] < 0 or sum(ratio) == 0:
            raise ValueError(f"split_ratio must be two non-negative parts, got {self.split_ratio}")
        object.__setattr__(self, "split_ratio", ratio)


@dataclass
class AdamState:
    """First/second moment per parameter name, plus the shared step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


@dataclass
class RunMetrics:
    """Per-epoch trajectory of one run; accuracies are fractions in [0, 1]."""

    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)
    diverged: bool = False
    param_count: int = 0

    @property
    def final_train_acc(self) -> float:
        return self.train_acc[-1] if self.train_acc else 0.0

    @property
    def final_test_acc(self) -> float:
        return self.test_acc[-1] if self.test_acc else 0.0


def init_adam(state: ModelState) -> AdamState:
    m = {name: np.zeros_like(t.values) for name, t in state.named_parameters()}
    v = {name: np.zeros_like(t.values) for name, t in state.named_parameters()}
    return AdamState(m=m, v=v, t=0)


def adam_step(state: ModelState, adam: AdamState, cfg: TrainConfig) -> None:
    """One bias-corrected Adam update; a missing gradient counts as zero.

    Raises NonFiniteGradient, leaving parameters and moments untouched,
    if any gradient element is NaN or infinite.
    """
    pairs = state.named_parameters()
    for name, t in pairs:
        if t.grad is not None and not np.isfinite(t.grad).all():
            raise NonFiniteGradient(f"non-finite gradient in {name!r}")
    adam.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1**adam.t
    bc2 = 1.0 - b2**adam.t
    for name, t in pairs:
        g = t.grad if t.grad is not None else 0.0
        m = adam.m[name]
        v = adam.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        t.values -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)


def split(dataset, cfg: TrainConfig):
    """Seeded shuffle, then the first ceil(train_part/total * N) samples train."""
    dataset = list(dataset)
    n = len(dataset)
    order = (
        np.random.default_rng(cfg.seed).permutation(n) if cfg.shuffle else np.arange(n)
    )
    a, b = cfg.split_ratio
    n_train = math.ceil(n * a / (a + b))
    train = [dataset[i] for i in order[:n_train]]
    test = [dataset[i] for i in order[n_train:]]
    return train, test


def stack_samples(samples):
    """(N, T, S, V, H) batch array plus (N,) label array."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to stack")
    shapes = {s.data.shape for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"samples disagree on shape: {sorted(shapes)}")
    x = np.stack([s.data for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return x, y


def run_loop(x_train, y_train, x_test, y_test, state, forward_fn, train_cfg: TrainConfig) -> RunMetrics:
    """Generic epoch loop over any model exposing named parameters.

    ``forward_fn(state, batch_tensor, training, dropout_rng)`` must return
    logits. Per epoch: shuffled minibatch Adam steps with dropout on, then
    accuracy on the train and test sets with dropout off. A non-finite loss
    or gradient flags the run as diverged and stops further updates.
    ``x_test`` may be None for train-only runs.
    """
    adam = init_adam(state)
    metrics = RunMetrics(param_count=state.param_count())
    shuffle_rng = np.random.default_rng([train_cfg.seed, 1])
    dropout_rng = np.random.default_rng([train_cfg.seed, 2])

    def accuracy(x: np.ndarray, y: np.ndarray, batch: int = 64) -> float:
        hits = 0
        for lo in range(0, x.shape[0], batch):
            logits = forward_fn(state, Tensor(x[lo : lo + batch]), False, None)
            hits += int((np.argmax(logits.values, axis=1) == y[lo : lo + batch]).sum())
        return hits / x.shape[0]

    n = x_train.shape[0]
    for _epoch in range(train_cfg.epochs):
        order = shuffle_rng.permutation(n) if train_cfg.shuffle else np.arange(n)
        total_loss = 0.0
        for lo in range(0, n, train_cfg.batch_size):
            idx = order[lo : lo + train_cfg.batch_size]
            state.zero_grads()
            logits = forward_fn(state, Tensor(x_train[idx]), True, dropout_rng)
            batch_loss = loss(logits, y_train[idx])
            if not np.isfinite(batch_loss.values):
                metrics.diverged = True
                break
            batch_loss.backward()
            try:
                adam_step(state, adam, train_cfg)
            except NonFiniteGradient:
                metrics.diverged = True
                break
            total_loss += batch_loss.item() * len(idx)
        if metrics.diverged:
            break
        metrics.train_loss.append(total_loss / n)
        metrics.train_acc.append(accuracy(x_train, y_train))
        metrics.test_acc.append(accuracy(x_test, y_test) if x_test is not None else float("nan"))
    return metrics


def _check_labels_in_range(y: np.ndarray, n_classes: int) -> None:
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels outside [0, {n_classes}): range [{y.min()}, {y.max()}]")


def evaluate(test_set, state: ModelState, model_cfg: ModelConfig) -> float:
    """Fraction of correct predictions; rejects an empty set."""
    x, y = stack_samples(test_set)
    _check_labels_in_range(y, model_cfg.n_classes)
    hits = 0
    for lo in range(0, x.shape[0], 64):
        pred = predict(Tensor(x[lo : lo + 64]), state, model_cfg)
        hits += int((pred == y[lo : lo + 64]).sum())
    return hits / x.shape[0]


def fit(train_set, test_set, model_cfg: ModelConfig, train_cfg: TrainConfig):
    """Train the classifier from scratch; returns (RunMetrics, ModelState)."""
    x_train, y_train = stack_samples(train_set)
    _check_labels_in_range(y_train, model_cfg.n_classes)
    test_list = list(test_set)
    x_test = y_test = None
    if test_list:
        x_test, y_test = stack_samples(test_list)
        _check_labels_in_range(y_test, model_cfg.n_classes)
    state = init_state(model_cfg, seed=train_cfg.seed)

    def forward_fn(st, batch, training, rng):
        return forward(batch, st, model_cfg, training=training, dropout_rng=rng)

    metrics = run_loop(x_train, y_train, x_test, y_test, state, forward_fn, train_cfg)
    return metrics, state


def write_metrics_jsonl(metrics: RunMetrics, path) -> None:
    """One record per epoch plus a final summary record, stable key order."""
    with open(path, "w", encoding="ascii") as fh:
        for i in range(len(metrics.train_loss)):
            test_acc = metrics.test_acc[i]
            fh.write(
                json.dumps(
                    {
                        "epoch": i,
                        "train_loss": metrics.train_loss[i],
                        "train_acc": metrics.train_acc[i],
                        "test_acc": test_acc if math.isfinite(test_acc) else None,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        fh.write(
            json.dumps(
                {
                    "summary": True,
                    "epochs": len(metrics.train_loss),
                    "final_train_acc": metrics.final_train_acc,
                    "final_test_acc": metrics.final_test_acc,
                    "param_count": metrics.param_count,
                    "diverged": metrics.diverged,
                },
                sort_keys=True,
            )
            + "\n"
        )
