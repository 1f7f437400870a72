"""Message-passing layers against naive per-edge oracles and worked examples."""

import numpy as np
import pytest
from oracles import (naive_aggregate, naive_channel_attention, naive_chat_layer,
                     naive_freq_gate_message, naive_gcn_aggregate,
                     naive_scalar_attention_message, random_graph_instance)

import chatgnn.autodiff as ad
from chatgnn.autodiff import Tensor
from chatgnn.errors import ShapeError
from chatgnn.graph import build_graph, edge_arrays, reverse
from chatgnn.layers import (ChatLayerParams, aggregate_messages, bare_forward,
                            baseline_forward, channel_attention,
                            chat_layer_forward, combine, dir_chat_forward)
from chatgnn.model import ModelConfig, _init_baseline_layer
from chatgnn.rng import Rng


def const(arr):
    return Tensor(np.asarray(arr, dtype=np.float64))


def chat_params(rng, d, proj=False, ln=False):
    p = ChatLayerParams(
        w_self=const(rng.normal(size=(d, d))),
        w_neigh=const(rng.normal(size=(d, d))),
        use_layer_norm=ln,
    )
    if proj:
        p.proj_self = const(rng.normal(size=(d, d)))
        p.proj_neigh = const(rng.normal(size=(d, d)))
    if ln:
        p.ln_gamma = const(rng.normal(size=(1, d)) * 0.2 + 1.0)
        p.ln_beta = const(rng.normal(size=(1, d)) * 0.2)
    return p


# --- worked examples ---------------------------------------------------------


def test_gcn_aggregation_on_path_graph():
    # path 0-1-2, unit scalar features at the ends: middle node receives
    # 1/sqrt(2) from each end, so m_1 = sqrt(2)
    g = build_graph(3, [(0, 1), (1, 2)])
    e = edge_arrays(g)
    h = const([[1.0], [0.0], [1.0]])
    ones = const(np.ones((g.num_arcs, 1)))
    m = aggregate_messages(h, e, ones)
    assert m.data[1, 0] == pytest.approx(1.41421, abs=1e-5)
    assert m.data[0, 0] == pytest.approx(0.0)


def test_all_ones_attention_reduces_to_gcn():
    rng = np.random.default_rng(4)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    e = edge_arrays(g)
    ones = const(np.ones((g.num_arcs, d)))
    got = aggregate_messages(const(h), e, ones).data
    want = naive_gcn_aggregate(h, g)
    assert np.allclose(got, want, atol=1e-12)


def test_attention_values_bounded():
    rng = np.random.default_rng(5)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    p = chat_params(rng, d)
    attn = channel_attention(const(h), edge_arrays(g), p)
    assert (np.abs(attn.data) < 1.0).all()


# --- oracle equivalence ------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_channel_attention_matches_naive(seed):
    rng = np.random.default_rng(seed)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    p = chat_params(rng, d)
    got = channel_attention(const(h), edge_arrays(g), p).data
    want = naive_channel_attention(h, g, p.w_self.data, p.w_neigh.data)
    assert np.allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_aggregate_matches_naive(seed):
    rng = np.random.default_rng(100 + seed)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    e = edge_arrays(g)
    attn = rng.uniform(-1, 1, size=(g.num_arcs, d))
    got = aggregate_messages(const(h), e, const(attn)).data
    want = naive_aggregate(h, g, attn)
    assert np.allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("proj,ln", [(False, False), (True, True)])
def test_chat_layer_matches_naive(seed, proj, ln):
    rng = np.random.default_rng(200 + seed)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    p = chat_params(rng, d, proj=proj, ln=ln)
    h0 = rng.normal(size=(n, d))
    got = chat_layer_forward(const(h), const(h0), edge_arrays(g), p).data
    want, _, _ = naive_chat_layer(
        h, h0, g, p.w_self.data, p.w_neigh.data,
        p.proj_self.data if proj else None,
        p.proj_neigh.data if proj else None,
        p.ln_gamma.data if ln else None,
        p.ln_beta.data if ln else None)
    assert np.allclose(got, want, atol=1e-10)


def _baseline(tag, d, seed):
    cfg = ModelConfig(in_features=d, hidden=d, classes=2, layers=1,
                      use_layer_norm=False, layer_kind=tag)
    return _init_baseline_layer(cfg, Rng(seed))


@pytest.mark.parametrize("seed", range(5))
def test_scalar_attention_matches_naive(seed):
    rng = np.random.default_rng(300 + seed)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    k = _baseline("scalar_attention", d, seed)
    got = baseline_forward(k, const(h), None, edge_arrays(g)).data
    want = h + naive_scalar_attention_message(
        h, g, k.w.data, k.attn_self.data, k.attn_neigh.data)
    assert np.allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_freq_gate_matches_naive(seed):
    rng = np.random.default_rng(400 + seed)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    k = _baseline("freq_gate", d, seed)
    got = baseline_forward(k, const(h), None, edge_arrays(g)).data
    want = h + naive_freq_gate_message(h, g, k.gate_self.data, k.gate_neigh.data)
    assert np.allclose(got, want, atol=1e-12)


def test_gcn_baseline_applies_weight_after_aggregation():
    rng = np.random.default_rng(6)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    k = _baseline("gcn", d, 6)
    got = baseline_forward(k, const(h), None, edge_arrays(g)).data
    want = h + naive_gcn_aggregate(h, g) @ k.w.data.T
    assert np.allclose(got, want, atol=1e-12)


# --- structural properties ----------------------------------------------------


def test_permutation_equivariance():
    rng = np.random.default_rng(7)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    p = chat_params(rng, d, proj=True, ln=True)
    h0 = rng.normal(size=(n, d))
    out = chat_layer_forward(const(h), const(h0), edge_arrays(g), p).data

    perm = rng.permutation(n)
    inv = np.argsort(perm)
    g2 = build_graph(n, [(perm[u], perm[v]) for u, v in pairs])
    out2 = chat_layer_forward(const(h[inv]), const(h0[inv]), edge_arrays(g2), p).data
    # equal up to float reassociation in the scatter order
    assert np.allclose(out2, out[inv], atol=1e-12)


def test_combine_identity_vs_projection():
    h = const([[1.0, 2.0]])
    m = const([[10.0, 20.0]])
    p = ChatLayerParams(w_self=const(np.eye(2)), w_neigh=const(np.eye(2)))
    assert np.array_equal(combine(h, m, p).data, [[11.0, 22.0]])
    with pytest.raises(ShapeError):
        combine(h, const([[1.0]]), p)


def test_bare_forward_semantics():
    rng = np.random.default_rng(8)
    n, d, pairs, h = random_graph_instance(rng)
    g = build_graph(n, pairs)
    e = edge_arrays(g)
    p = chat_params(rng, d)
    bare = bare_forward("chat", const(h), e, p).data
    attn = naive_channel_attention(h, g, p.w_self.data, p.w_neigh.data)
    assert np.allclose(bare, h + naive_aggregate(h, g, attn), atol=1e-12)

    k = _baseline("gcn", d, 8)
    bare_g = bare_forward("gcn", const(h), e, k).data
    # baselines emit the aggregated message alone: no self term
    assert np.allclose(bare_g, naive_gcn_aggregate(h, g) @ k.w.data.T, atol=1e-12)


def test_zero_weights_give_zero_message_stack():
    # with both gate matrices zero the attention is tanh(0) = 0, so a layer
    # with identity combine and anchor residual maps h -> h + h0
    g = build_graph(3, [(0, 1), (1, 2)])
    e = edge_arrays(g)
    d = 2
    p = ChatLayerParams(w_self=const(np.zeros((d, d))),
                        w_neigh=const(np.zeros((d, d))))
    h0 = const(np.arange(6, dtype=np.float64).reshape(3, 2))
    h = h0
    for _ in range(3):
        h = chat_layer_forward(h, h0, e, p)
    assert np.allclose(h.data, 4.0 * h0.data)


def test_directed_layer_uses_both_directions():
    rng = np.random.default_rng(9)
    n = 6
    pairs = [(i, (i + 1) % n) for i in range(n)]
    g = build_graph(n, pairs, directed=True)
    e_fwd = edge_arrays(g)
    e_rev = edge_arrays(reverse(g))
    d = 3
    h = rng.normal(size=(n, d))
    h0 = rng.normal(size=(n, d))
    p_out = chat_params(rng, d)
    p_in = chat_params(rng, d)

    got = dir_chat_forward(const(h), const(h0), g, p_out, p_in, e_fwd, e_rev).data

    rg = reverse(g)
    attn_f = naive_channel_attention(h, g, p_out.w_self.data, p_out.w_neigh.data)
    attn_r = naive_channel_attention(h, rg, p_in.w_self.data, p_in.w_neigh.data)
    want = h + naive_aggregate(h, g, attn_f) + naive_aggregate(h, rg, attn_r) + h0
    assert np.allclose(got, want, atol=1e-12)

    with pytest.raises(ValueError):
        dir_chat_forward(const(h), const(h0), build_graph(n, pairs), p_out, p_in)
