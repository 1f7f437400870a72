"""Message-passing layers.

The main layer computes a channel-wise attention vector per arc: a tanh
of two linear maps of the receiver and sender states. Each channel of a
neighbor message is scaled independently in (-1, 1), so a layer can pass
low and high frequencies per channel instead of one scalar per edge.

Baselines (plain degree-normalized convolution, single-head scalar
attention, a scalar frequency gate) share the surrounding architecture
so comparisons isolate the attention mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError
from .graph import EdgeArrays, Graph, edge_arrays, reverse


@dataclass
class ChatLayerParams:
    """Parameters of one channel-attentive layer.

    w_self multiplies the receiving node's state and w_neigh the sending
    node's state inside the attention tanh. proj_self/proj_neigh are the
    optional bias-free combine projections; both are None (identity) or
    both are set, controlled by one hyperparameter.
    """

    w_self: Tensor
    w_neigh: Tensor
    proj_self: Optional[Tensor] = None
    proj_neigh: Optional[Tensor] = None
    ln_gamma: Optional[Tensor] = None
    ln_beta: Optional[Tensor] = None
    use_layer_norm: bool = False


@dataclass
class BaselineKind:
    """Tagged parameters for a baseline layer.

    tag 'gcn': w applied after degree-normalized aggregation.
    tag 'scalar_attention': single-head attention; attn_self/attn_neigh
        are the two halves of the score vector over [W h_v || W h_w].
    tag 'freq_gate': per-arc tanh scalar gate in (-1, 1); gate_self and
        gate_neigh are the halves of the gate vector.
    """

    tag: str
    w: Optional[Tensor] = None
    attn_self: Optional[Tensor] = None
    attn_neigh: Optional[Tensor] = None
    gate_self: Optional[Tensor] = None
    gate_neigh: Optional[Tensor] = None
    ln_gamma: Optional[Tensor] = None
    ln_beta: Optional[Tensor] = None
    use_layer_norm: bool = False


BASELINE_TAGS = ("gcn", "scalar_attention", "freq_gate")
LAYER_KINDS = ("chat",) + BASELINE_TAGS

LEAKY_SLOPE = 0.2


def channel_attention(h: Tensor, e: EdgeArrays, p: ChatLayerParams) -> Tensor:
    """Per-arc attention vectors tanh(w_self h_dst + w_neigh h_src), shape (E, D)."""
    if h.cols != p.w_self.cols:
        raise ShapeError("channel_attention", h.shape, p.w_self.shape)
    recv = ad.gather_rows(h, e.dst)
    send = ad.gather_rows(h, e.src)
    return ad.tanh(ad.add(ad.linear(recv, p.w_self), ad.linear(send, p.w_neigh)))


def aggregate_messages(h: Tensor, e: EdgeArrays, attn: Tensor) -> Tensor:
    """Degree-normalized, attention-weighted neighbor sum per node.

    m_dst = sum over incoming arcs of norm * attn * h_src. Isolated nodes
    receive zero rows from the empty sum.
    """
    if attn.shape != (e.num_arcs, h.cols):
        raise ShapeError("aggregate_messages", attn.shape, (e.num_arcs, h.cols))
    weighted = ad.hadamard(attn, ad.gather_rows(h, e.src))
    scaled = ad.scale_rows(weighted, Tensor._make(e.norm_col, False))
    return ad.scatter_add_rows(scaled, e.dst, h.rows)


def combine(h: Tensor, m: Tensor, p: ChatLayerParams) -> Tensor:
    """h_tilde = proj_self(h) + proj_neigh(m); identity when no projections."""
    if h.shape != m.shape:
        raise ShapeError("combine", h.shape, m.shape)
    if p.proj_self is None:
        return ad.add(h, m)
    return ad.add(ad.linear(h, p.proj_self), ad.linear(m, p.proj_neigh))


def _wrap(h_tilde: Tensor, h0: Optional[Tensor], ln_gamma, ln_beta,
          use_layer_norm: bool) -> Tensor:
    # Residual to the layer-0 state, then optional layer norm. h0=None
    # drops the residual (used by plain baseline stacks and experiments).
    out = h_tilde if h0 is None else ad.add(h_tilde, h0)
    if use_layer_norm:
        return ad.layer_norm(out, ln_gamma, ln_beta)
    return out


def chat_layer_forward(h: Tensor, h0: Optional[Tensor], e: EdgeArrays,
                       p: ChatLayerParams) -> Tensor:
    """One full channel-attentive layer: attend, aggregate, combine, anchor, normalize."""
    attn = channel_attention(h, e, p)
    m = aggregate_messages(h, e, attn)
    h_tilde = combine(h, m, p)
    return _wrap(h_tilde, h0, p.ln_gamma, p.ln_beta, p.use_layer_norm)


def _baseline_message(kind: BaselineKind, h: Tensor, e: EdgeArrays) -> Tensor:
    if kind.tag == "gcn":
        neigh = ad.gather_rows(h, e.src)
        scaled = ad.scale_rows(neigh, Tensor._make(e.norm_col, False))
        agg = ad.scatter_add_rows(scaled, e.dst, h.rows)
        return ad.linear(agg, kind.w)
    if kind.tag == "scalar_attention":
        z = ad.linear(h, kind.w)
        z_recv = ad.gather_rows(z, e.dst)
        z_send = ad.gather_rows(z, e.src)
        score = ad.leaky_relu(
            ad.add(ad.linear(z_recv, kind.attn_self), ad.linear(z_send, kind.attn_neigh)),
            LEAKY_SLOPE)
        alpha = ad.segment_softmax(score, e.dst, h.rows)
        return ad.scatter_add_rows(ad.scale_rows(z_send, alpha), e.dst, h.rows)
    if kind.tag == "freq_gate":
        recv = ad.gather_rows(h, e.dst)
        send = ad.gather_rows(h, e.src)
        gate = ad.tanh(ad.add(ad.linear(recv, kind.gate_self),
                              ad.linear(send, kind.gate_neigh)))
        scaled = ad.scale_rows(send, Tensor._make(e.norm_col, False))
        return ad.scatter_add_rows(ad.scale_rows(scaled, gate), e.dst, h.rows)
    raise ValueError(f"unknown baseline tag {kind.tag!r}")


def baseline_forward(kind: BaselineKind, h: Tensor, h0: Optional[Tensor],
                     e: EdgeArrays) -> Tensor:
    """Baseline layer with the same identity combine and residual/norm wrapping."""
    m = _baseline_message(kind, h, e)
    h_tilde = ad.add(h, m)
    return _wrap(h_tilde, h0, kind.ln_gamma, kind.ln_beta, kind.use_layer_norm)


def bare_forward(kind: str, h: Tensor, e: EdgeArrays, params) -> Tensor:
    """Pure message-passing step for the energy experiments.

    No residual anchor and no normalization. The chat step keeps its
    identity combine h + m because the combine is part of the layer;
    baselines output their aggregated message alone, matching their
    classical single-equation definitions.
    """
    if kind == "chat":
        m = aggregate_messages(h, e, channel_attention(h, e, params))
        return ad.add(h, m)
    return _baseline_message(params, h, e)


def dir_chat_forward(h: Tensor, h0: Optional[Tensor], g: Graph,
                     p_out: ChatLayerParams, p_in: ChatLayerParams,
                     e_fwd: Optional[EdgeArrays] = None,
                     e_rev: Optional[EdgeArrays] = None) -> Tensor:
    """Channel-attentive layer on a directed graph.

    Messages are aggregated separately along arcs (with p_out) and
    against them (with p_in), each under its own degree normalization.
    The combine is h_tilde = phi1(h) + phi2(m_fwd) + phi3(m_rev), where
    phi1/phi2 come from p_out and phi3 is p_in's proj_neigh (same mode).
    Residual and layer-norm flags are read from p_out.
    """
    if not g.directed:
        raise ValueError("dir_chat_forward requires a directed graph")
    if e_fwd is None:
        e_fwd = edge_arrays(g)
    if e_rev is None:
        e_rev = edge_arrays(reverse(g))
    m_fwd = aggregate_messages(h, e_fwd, channel_attention(h, e_fwd, p_out))
    m_rev = aggregate_messages(h, e_rev, channel_attention(h, e_rev, p_in))
    if p_out.proj_self is None:
        h_tilde = ad.add(ad.add(h, m_fwd), m_rev)
    else:
        h_tilde = ad.add(
            ad.add(ad.linear(h, p_out.proj_self), ad.linear(m_fwd, p_out.proj_neigh)),
            ad.linear(m_rev, p_in.proj_neigh))
    return _wrap(h_tilde, h0, p_out.ln_gamma, p_out.ln_beta, p_out.use_layer_norm)
