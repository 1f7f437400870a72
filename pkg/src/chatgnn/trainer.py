"""Full-batch training with Adam, warm-up, and patience-based early stopping.

Every epoch runs one forward/backward over the whole graph, one Adam
step, then an evaluation pass. The best validation-accuracy parameters
are kept (ties resolve to the earliest epoch) and restored at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import autodiff as ad
from .autodiff import Tape, Tensor, no_grad
from .data import Dataset
from .graph import edge_arrays, reverse
from .model import ChatGnnModel, model_forward

METRICS = ("accuracy", "roc_auc")


@dataclass
class TrainConfig:
    lr: float = 3e-3
    weight_decay: float = 1e-4
    max_epochs: int = 5000
    patience: int = 500
    warmup: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    test_metric: str = "accuracy"
    # Early stopping always watches validation accuracy unless overridden.
    early_stop_metric: str = "accuracy"

    def validate(self) -> None:
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.patience > self.max_epochs:
            raise ValueError("patience must be <= max_epochs")
        for m in (self.test_metric, self.early_stop_metric):
            if m not in METRICS:
                raise ValueError(f"unknown metric {m!r}; expected one of {METRICS}")


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    val_accuracy: float
    test_metric: float


@dataclass
class TrainResult:
    model: ChatGnnModel
    history: list[EpochMetrics]
    best_epoch: int
    best_val: float
    # train-mask accuracy per epoch; kept off EpochMetrics so the metrics
    # CSV stays four columns. Used by overfitting sanity checks.
    train_accuracies: list = field(default_factory=list)


def adam_step(params, state: AdamState, cfg: TrainConfig) -> None:
    """One Adam update with coupled L2 decay folded into the gradient."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for name, p in params:
        if p.grad is None:
            continue
        g = p.grad
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p.data
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p.data -= cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)


def accuracy_score(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of argmax matches; argmax ties resolve to the lowest class."""
    if mask.size == 0:
        raise ValueError("accuracy over an empty mask")
    pred = logits[mask].argmax(axis=1)
    return float((pred == labels[mask]).mean())


def roc_auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC with average-rank tie correction."""
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present in the mask")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _metric_from_logits(logits, labels, mask, metric: str) -> float:
    if metric == "accuracy":
        return accuracy_score(logits, labels, mask)
    if metric == "roc_auc":
        if logits.shape[1] != 2:
            raise ValueError("roc_auc is defined for exactly 2 classes")
        return roc_auc_score(logits[mask, 1], labels[mask])
    raise ValueError(f"unknown metric {metric!r}")


def evaluate(model: ChatGnnModel, dataset: Dataset, mask,
             metric: str = "accuracy") -> float:
    """Metric of the model on the masked nodes. roc_auc uses the class-1 logit."""
    mask = np.asarray(mask)
    e = edge_arrays(dataset.graph)
    e_rev = edge_arrays(reverse(dataset.graph)) if model.config.directed_mode else None
    with no_grad():
        logits = model_forward(model, Tensor(dataset.features), e, e_rev)
    return _metric_from_logits(logits.data, dataset.labels, mask, metric)


def train(model: ChatGnnModel, dataset: Dataset, split_index: int,
          cfg: TrainConfig) -> TrainResult:
    """Train on one split; returns the best-validation model and full history."""
    cfg.validate()
    split = dataset.splits[split_index]
    if split.train.size == 0:
        raise ValueError("empty train mask")
    x = Tensor(dataset.features)
    labels = dataset.labels
    e = edge_arrays(dataset.graph)
    e_rev = edge_arrays(reverse(dataset.graph)) if model.config.directed_mode else None
    params = model.parameters()
    state = AdamState()
    history: list[EpochMetrics] = []
    train_accs: list[float] = []
    best_val = -1.0
    best_epoch = 0
    best_data = None
    since_improve = 0
    for epoch in range(1, cfg.max_epochs + 1):
        with Tape() as tape:
            logits = model_forward(model, x, e, e_rev)
            loss = ad.softmax_cross_entropy(logits, labels, split.train)
        model.zero_grad()
        tape.backward(loss)
        adam_step(params, state, cfg)
        with no_grad():
            eval_logits = model_forward(model, x, e, e_rev).data
        val_acc = _metric_from_logits(eval_logits, labels, split.val,
                                      cfg.early_stop_metric)
        test_m = _metric_from_logits(eval_logits, labels, split.test, cfg.test_metric)
        history.append(EpochMetrics(epoch, loss.item(), val_acc, test_m))
        train_accs.append(accuracy_score(eval_logits, labels, split.train))
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_data = {name: p.data.copy() for name, p in params}
            since_improve = 0
        elif epoch > cfg.warmup:
            since_improve += 1
            if since_improve >= max(1, cfg.patience):
                break
    if best_data is not None:
        for name, p in params:
            p.data = best_data[name]
    return TrainResult(model, history, best_epoch, best_val, train_accs)
