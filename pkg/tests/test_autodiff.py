"""Autodiff core: forward values against naive oracles, gradients against
central finite differences, and tape lifecycle rules."""

import numpy as np
import pytest
from oracles import naive_layer_norm, naive_softmax_cross_entropy

import chatgnn.autodiff as ad
from chatgnn.autodiff import Tape, Tensor, UsageError, no_grad
from chatgnn.errors import GraphIndexError, ShapeError


def t(data, rg=False):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=rg)


# --- tensor basics ----------------------------------------------------------


def test_tensor_requires_2d():
    with pytest.raises(ShapeError):
        Tensor(np.zeros(3))
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 2, 2)))


def test_tensor_rejects_nonfinite():
    with pytest.raises(ValueError):
        Tensor(np.array([[np.nan, 1.0]]))
    with pytest.raises(ValueError):
        Tensor(np.array([[np.inf, 1.0]]))


def test_item_requires_scalar_shape():
    with pytest.raises(ShapeError):
        t([[1.0, 2.0]]).item()
    assert t([[4.5]]).item() == 4.5


# --- forward semantics ------------------------------------------------------


def test_matmul_and_linear_forward():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    assert np.allclose(ad.matmul(t(a), t(b)).data, a @ b)
    w = rng.normal(size=(2, 4))
    assert np.allclose(ad.linear(t(a), t(w)).data, a @ w.T)
    with pytest.raises(ShapeError):
        ad.matmul(t(a), t(a))


def test_add_broadcast_bias_row():
    a = t([[1.0, 2.0], [3.0, 4.0]])
    bias = t([[10.0, 20.0]])
    assert np.array_equal(ad.add(a, bias).data, [[11.0, 22.0], [13.0, 24.0]])
    with pytest.raises(ShapeError):
        ad.add(a, t([[1.0], [2.0], [3.0]]))


def test_elementwise_forward():
    x = np.array([[-1.5, 0.0, 2.0]])
    assert np.allclose(ad.tanh(t(x)).data, np.tanh(x))
    assert np.array_equal(ad.relu(t(x)).data, [[0.0, 0.0, 2.0]])
    assert np.allclose(ad.leaky_relu(t(x), 0.2).data, [[-0.3, 0.0, 2.0]])
    assert np.allclose(ad.scale(t(x), -2.0).data, -2.0 * x)
    assert np.allclose(ad.hadamard(t(x), t(x)).data, x * x)


def test_scale_rows_forward():
    a = t([[1.0, 2.0], [3.0, 4.0]])
    s = t([[2.0], [-1.0]])
    assert np.array_equal(ad.scale_rows(a, s).data, [[2.0, 4.0], [-3.0, -4.0]])


def test_gather_scatter_forward_and_index_errors():
    a = t([[1.0], [2.0], [3.0]])
    idx = np.array([2, 0, 2])
    assert np.array_equal(ad.gather_rows(a, idx).data, [[3.0], [1.0], [3.0]])
    scattered = ad.scatter_add_rows(a, np.array([1, 1, 0]), 2)
    assert np.array_equal(scattered.data, [[3.0], [3.0]])
    with pytest.raises(GraphIndexError):
        ad.gather_rows(a, np.array([3]))
    with pytest.raises(GraphIndexError):
        ad.scatter_add_rows(a, np.array([0, 1, 2]), 2)


def test_segment_softmax_forward():
    scores = t([[1.0], [2.0], [5.0], [0.0]])
    seg = np.array([0, 0, 1, 1])
    out = ad.segment_softmax(scores, seg, 2).data
    e = np.exp([1.0, 2.0])
    assert np.allclose(out[:2, 0], e / e.sum())
    e2 = np.exp([5.0, 0.0])
    assert np.allclose(out[2:, 0], e2 / e2.sum())
    # per-segment sums are 1
    assert np.isclose(out[:2].sum(), 1.0) and np.isclose(out[2:].sum(), 1.0)


def test_segment_softmax_handles_empty_segment():
    scores = t([[1.0], [1.0]])
    out = ad.segment_softmax(scores, np.array([0, 0]), 3).data
    assert np.allclose(out, 0.5)


def test_layer_norm_matches_naive():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 7))
    gamma = rng.normal(size=(1, 7))
    beta = rng.normal(size=(1, 7))
    got = ad.layer_norm(t(x), t(gamma), t(beta)).data
    want = naive_layer_norm(x, gamma, beta)
    assert np.allclose(got, want, atol=1e-12)


def test_softmax_cross_entropy_matches_naive():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(6, 4))
    labels = rng.integers(0, 4, size=6)
    mask = np.array([0, 2, 5])
    got = ad.softmax_cross_entropy(t(logits), labels, mask).item()
    want = naive_softmax_cross_entropy(logits, labels, list(mask))
    assert got == pytest.approx(want, rel=1e-12)
    # boolean mask spelling agrees with index spelling
    bmask = np.zeros(6, dtype=bool)
    bmask[mask] = True
    got_b = ad.softmax_cross_entropy(t(logits), labels, bmask).item()
    assert got_b == pytest.approx(want, rel=1e-12)


def test_softmax_cross_entropy_errors():
    logits = t(np.zeros((3, 2)))
    labels = np.array([0, 1, 0])
    with pytest.raises(ValueError):
        ad.softmax_cross_entropy(logits, labels, np.zeros(3, dtype=bool))
    with pytest.raises(ValueError):
        ad.softmax_cross_entropy(logits, np.array([0, 2, 0]), np.array([0, 1]))


def test_uniform_shift_invariance_of_softmax_loss():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(4, 3))
    labels = np.array([0, 1, 2, 1])
    mask = np.arange(4)
    base = ad.softmax_cross_entropy(t(logits), labels, mask).item()
    shifted = ad.softmax_cross_entropy(t(logits + 100.0), labels, mask).item()
    assert shifted == pytest.approx(base, abs=1e-9)


# --- gradients ---------------------------------------------------------------


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_grad_all_ops(seed):
    from chatgnn.gradcheck import op_checks
    for line in op_checks(seed):
        assert line.passed, f"{line.name}: rel_err {line.max_rel_err} > {line.tol}"


def test_gather_scatter_adjointness_exact():
    from chatgnn.gradcheck import adjointness_checks
    for line in adjointness_checks(0):
        assert line.passed and line.max_rel_err <= 1e-12


# --- tape lifecycle ----------------------------------------------------------


def test_backward_accumulates_until_zero_grad():
    x = t([[2.0, 3.0]], rg=True)
    for expected in (1.0, 2.0):
        with Tape() as tape:
            loss = ad.sum_all(ad.hadamard(x, x))
        tape.backward(loss)
        assert np.allclose(x.grad, expected * 2.0 * x.data)
    ad.zero_grads([x])
    assert x.grad is None


def test_no_grad_suppresses_recording():
    x = t([[1.0, 2.0]], rg=True)
    with Tape() as tape:
        with no_grad():
            y = ad.tanh(x)
        z = ad.sum_all(x)
    tape.backward(z)
    assert y._tape is None
    assert np.allclose(x.grad, 1.0)


def test_backward_rejects_foreign_loss():
    x = t([[1.0]], rg=True)
    with Tape():
        loss = ad.sum_all(x)
    with Tape() as other:
        pass
    with pytest.raises(UsageError):
        other.backward(loss)


def test_backward_rejects_nonscalar():
    x = t([[1.0, 2.0]], rg=True)
    with Tape() as tape:
        y = ad.tanh(x)
    with pytest.raises(ShapeError):
        tape.backward(y)


def test_module_backward_requires_tape():
    x = t([[1.0]], rg=True)
    with no_grad():
        y = ad.sum_all(x)
    with pytest.raises(UsageError):
        ad.backward(y)


def test_grad_check_requires_grad_flag():
    with pytest.raises(UsageError):
        ad.grad_check(lambda v: ad.sum_all(v), t([[1.0]]), 1e-5)


def test_chained_graph_gradient():
    # d/dx sum(tanh(x) * x) = tanh(x) + x * (1 - tanh(x)^2)
    x = t([[0.3, -1.2, 0.8]], rg=True)
    with Tape() as tape:
        loss = ad.sum_all(ad.hadamard(ad.tanh(x), x))
    tape.backward(loss)
    th = np.tanh(x.data)
    assert np.allclose(x.grad, th + x.data * (1 - th ** 2), atol=1e-12)
