"""Adam updates, metrics, and the early-stopped training loop."""

import numpy as np
import pytest
from oracles import naive_adam_first_step, naive_auc

from chatgnn.autodiff import Tensor
from chatgnn.data import Split, overfit_sanity_dataset
from chatgnn.model import ModelConfig, init_model
from chatgnn.rng import Rng
from chatgnn.trainer import (AdamState, TrainConfig, accuracy_score, adam_step,
                             evaluate, roc_auc_score, train)


def make_param(arr):
    t = Tensor(np.asarray(arr, dtype=np.float64), requires_grad=True)
    return t


def test_adam_first_step_matches_closed_form():
    theta = np.array([[1.0, -2.0, 0.5]])
    g = np.array([[0.3, -0.1, 2.0]])
    p = make_param(theta)
    p.grad = g.copy()
    cfg = TrainConfig(lr=0.01, weight_decay=0.0)
    adam_step([("p", p)], AdamState(), cfg)
    want = naive_adam_first_step(theta, g, 0.01)
    assert np.allclose(p.data, want, atol=1e-12)
    # first-step magnitude is ~ lr * sign(g)
    assert np.allclose(p.data, theta - 0.01 * np.sign(g), atol=1e-6)


def test_adam_zero_grad_no_move_and_decay_pull():
    p = make_param([[3.0, -4.0]])
    p.grad = np.zeros((1, 2))
    adam_step([("p", p)], AdamState(), TrainConfig(lr=0.1, weight_decay=0.0))
    assert np.array_equal(p.data, [[3.0, -4.0]])

    q = make_param([[3.0, -4.0]])
    q.grad = np.zeros((1, 2))
    adam_step([("q", q)], AdamState(), TrainConfig(lr=0.1, weight_decay=0.1))
    assert abs(q.data[0, 0]) < 3.0 and abs(q.data[0, 1]) < 4.0
    assert q.data[0, 0] > 0 and q.data[0, 1] < 0


def test_adam_skips_params_without_grad():
    p = make_param([[1.0]])
    adam_step([("p", p)], AdamState(), TrainConfig(lr=0.1))
    assert np.array_equal(p.data, [[1.0]])


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0).validate()
    with pytest.raises(ValueError):
        TrainConfig(patience=10, max_epochs=5).validate()
    with pytest.raises(ValueError):
        TrainConfig(test_metric="f1").validate()


# --- metrics -------------------------------------------------------------------


def test_accuracy_ties_go_to_lowest_class():
    logits = np.array([[0.5, 0.5], [0.2, 0.8]])
    labels = np.array([0, 1])
    assert accuracy_score(logits, labels, np.array([0, 1])) == 1.0
    labels2 = np.array([1, 1])
    assert accuracy_score(logits, labels2, np.array([0, 1])) == 0.5


def test_accuracy_empty_mask_rejected():
    with pytest.raises(ValueError):
        accuracy_score(np.zeros((2, 2)), np.zeros(2, dtype=int),
                       np.array([], dtype=int))


def test_auc_worked_example():
    scores = np.array([0.1, 0.4, 0.35, 0.8])
    labels = np.array([0, 0, 1, 1])
    assert roc_auc_score(scores, labels) == pytest.approx(0.75)


def test_auc_degenerate_cases():
    assert roc_auc_score(np.array([1.0, 1.0, 1.0, 1.0]),
                         np.array([0, 1, 0, 1])) == pytest.approx(0.5)
    assert roc_auc_score(np.array([0.1, 0.2, 0.9, 0.8]),
                         np.array([0, 0, 1, 1])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        roc_auc_score(np.array([0.1, 0.2]), np.array([1, 1]))


@pytest.mark.parametrize("seed", range(5))
def test_auc_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    scores = np.round(rng.uniform(size=30), 1)  # coarse grid forces ties
    labels = (rng.uniform(size=30) < 0.4).astype(int)
    if labels.sum() in (0, 30):
        labels[0] = 1 - labels[0]
    assert roc_auc_score(scores, labels) == pytest.approx(
        naive_auc(scores, labels), abs=1e-12)


# --- training loop ---------------------------------------------------------------


def quick_cfg(**kw):
    base = dict(lr=1e-2, weight_decay=0.0, max_epochs=60, patience=60, warmup=60)
    base.update(kw)
    return TrainConfig(**base)


def small_model(ds, seed=0, layers=2, **kw):
    cfg = ModelConfig(in_features=ds.features.shape[1], hidden=16,
                      classes=ds.num_classes, layers=layers, seed=seed, **kw)
    return init_model(cfg, Rng(seed))


def test_overfit_sanity_reaches_full_train_accuracy():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=3)
    out = train(model, ds, 0, quick_cfg(max_epochs=500, patience=500, warmup=500))
    assert max(out.train_accuracies) == 1.0
    assert len(out.train_accuracies) <= 500


def test_train_loss_monotone_in_smoothed_windows():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=5)
    out = train(model, ds, 0, quick_cfg(max_epochs=200, patience=200, warmup=200))
    losses = np.array([em.train_loss for em in out.history])
    windows = [losses[i:i + 50].mean() for i in range(0, 200, 50)]
    assert all(b < a for a, b in zip(windows, windows[1:]))


def test_determinism_identical_histories():
    ds = overfit_sanity_dataset()
    runs = []
    for _ in range(2):
        model = small_model(ds, seed=7)
        out = train(model, ds, 0, quick_cfg())
        runs.append([(em.epoch, em.train_loss, em.val_accuracy, em.test_metric)
                     for em in out.history])
    assert runs[0] == runs[1]


def test_empty_train_mask_rejected():
    ds = overfit_sanity_dataset()
    ds.splits[0] = Split(train=np.array([], dtype=np.int64),
                         val=ds.splits[0].val, test=ds.splits[0].test)
    model = small_model(ds)
    with pytest.raises(ValueError):
        train(model, ds, 0, quick_cfg())


def test_patience_zero_stops_at_first_plateau_after_warmup():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=9)
    warmup = 5
    out = train(model, ds, 0, quick_cfg(max_epochs=200, patience=0, warmup=warmup))
    vals = [em.val_accuracy for em in out.history]
    # find the first epoch past warmup with no strict improvement
    best = -1.0
    expected_stop = None
    for i, v in enumerate(vals, start=1):
        if v > best:
            best = v
        elif i > warmup:
            expected_stop = i
            break
    assert expected_stop is not None
    assert len(vals) == expected_stop


def test_best_epoch_is_earliest_max():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=11)
    out = train(model, ds, 0, quick_cfg())
    vals = [em.val_accuracy for em in out.history]
    first_max = vals.index(max(vals)) + 1
    assert out.best_epoch == first_max
    assert out.best_val == max(vals)


def test_returned_model_matches_best_epoch_metric():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=13)
    out = train(model, ds, 0, quick_cfg())
    val_after = evaluate(out.model, ds, ds.splits[0].val, "accuracy")
    assert val_after == pytest.approx(out.best_val)


def test_roc_auc_as_test_metric():
    ds = overfit_sanity_dataset()
    model = small_model(ds, seed=15)
    cfg = quick_cfg(max_epochs=20, patience=20, warmup=20, test_metric="roc_auc")
    out = train(model, ds, 0, cfg)
    assert all(0.0 <= em.test_metric <= 1.0 for em in out.history)


def test_directed_dataset_training_runs():
    from chatgnn.data import synthetic_classification
    from chatgnn.graph import build_graph
    ds = synthetic_classification(num_nodes=16, num_classes=2, num_features=6,
                                  avg_degree=2.0, edge_homophily=0.5,
                                  feature_noise=0.3, seed=1, num_splits=1)
    # rebuild the same edges as a directed graph
    src = np.repeat(np.arange(ds.graph.num_nodes), ds.graph.degrees)
    pairs = list(zip(src.tolist(), ds.graph.col_idx.tolist()))
    ds.graph = build_graph(16, pairs, directed=True)
    model = small_model(ds, seed=17, directed_mode=True)
    out = train(model, ds, 0, quick_cfg(max_epochs=10, patience=10, warmup=10))
    assert len(out.history) == 10
