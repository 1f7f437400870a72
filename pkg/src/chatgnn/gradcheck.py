"""Finite-difference verification of the backward rules.

Every primitive op, every layer kind, and the full model loss are checked
against central differences; gather/scatter additionally get an exact
adjointness test. The CLI surfaces this as the `gradcheck` subcommand and
the test suite asserts the same report is all-green.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graph import build_graph, edge_arrays
from .layers import (baseline_forward, channel_attention, chat_layer_forward,
                     dir_chat_forward)
from .model import ModelConfig, init_model, model_forward
from .rng import Rng

TOL_ELEMENTWISE = 1e-5
TOL_TANH = 1e-6
TOL_MATMUL = 1e-5
TOL_LOSS = 1e-5
TOL_LAYER_NORM = 1e-4
TOL_LAYER = 1e-4
TOL_MODEL = 1e-4
TOL_ADJOINT = 1e-12


@dataclass
class CheckLine:
    name: str
    max_rel_err: float
    tol: float
    passed: bool


def _line(name: str, f, at: Tensor, tol: float) -> CheckLine:
    res = ad.grad_check(f, at, tol)
    return CheckLine(name, res.max_rel_err, res.tol, res.passed)


def _away_from_zero(rng: Rng, shape, lo=0.1, hi=1.0) -> np.ndarray:
    """Magnitudes in [lo, hi] with random signs; keeps FD probes off kinks."""
    mag = rng.uniform_array(shape, lo, hi)
    signs = np.where(rng.uniform_array(shape) < 0.5, -1.0, 1.0)
    return mag * signs


def _weighted_sum(rng: Rng, shape):
    w = Tensor._make(rng.uniform_array(shape, -1.0, 1.0), False)
    return lambda t: ad.sum_all(ad.hadamard(t, w))


def op_checks(seed: int = 0) -> list[CheckLine]:
    rng = Rng(seed)
    lines = []
    x = Tensor(rng.uniform_array((4, 5), -2.0, 2.0), requires_grad=True)
    wsum = _weighted_sum(rng, (4, 5))

    lines.append(_line("op.tanh", lambda t: wsum(ad.tanh(t)), x, TOL_TANH))

    xk = Tensor(_away_from_zero(rng, (4, 5)), requires_grad=True)
    lines.append(_line("op.relu", lambda t: wsum(ad.relu(t)), xk, TOL_ELEMENTWISE))
    lines.append(_line("op.leaky_relu",
                       lambda t: wsum(ad.leaky_relu(t, 0.2)), xk, TOL_ELEMENTWISE))

    other = Tensor._make(rng.uniform_array((4, 5), -1.0, 1.0), False)
    lines.append(_line("op.add", lambda t: wsum(ad.add(t, other)), x, TOL_ELEMENTWISE))
    bias = Tensor(rng.uniform_array((1, 5), -1.0, 1.0), requires_grad=True)
    lines.append(_line("op.add_bias_row",
                       lambda b: wsum(ad.add(Tensor._make(x.data, False), b)),
                       bias, TOL_ELEMENTWISE))
    lines.append(_line("op.hadamard",
                       lambda t: wsum(ad.hadamard(t, other)), x, TOL_ELEMENTWISE))
    lines.append(_line("op.scale", lambda t: wsum(ad.scale(t, -1.7)), x, TOL_ELEMENTWISE))

    s = Tensor(rng.uniform_array((4, 1), -1.0, 1.0), requires_grad=True)
    lines.append(_line("op.scale_rows_data",
                       lambda t: wsum(ad.scale_rows(t, Tensor._make(s.data, False))),
                       x, TOL_ELEMENTWISE))
    lines.append(_line("op.scale_rows_scales",
                       lambda t: wsum(ad.scale_rows(Tensor._make(x.data, False), t)),
                       s, TOL_ELEMENTWISE))

    a = Tensor(rng.uniform_array((3, 4), -1.0, 1.0), requires_grad=True)
    b = Tensor(rng.uniform_array((4, 2), -1.0, 1.0), requires_grad=True)
    wsum_ab = _weighted_sum(rng, (3, 2))
    lines.append(_line("op.matmul_left",
                       lambda t: wsum_ab(ad.matmul(t, Tensor._make(b.data, False))),
                       a, TOL_MATMUL))
    lines.append(_line("op.matmul_right",
                       lambda t: wsum_ab(ad.matmul(Tensor._make(a.data, False), t)),
                       b, TOL_MATMUL))
    w = Tensor(rng.uniform_array((2, 4), -1.0, 1.0), requires_grad=True)
    lines.append(_line("op.linear_input",
                       lambda t: wsum_ab(ad.linear(t, Tensor._make(w.data, False))),
                       a, TOL_MATMUL))
    lines.append(_line("op.linear_weight",
                       lambda t: wsum_ab(ad.linear(Tensor._make(a.data, False), t)),
                       w, TOL_MATMUL))

    idx = np.array([2, 0, 3, 3, 1], dtype=np.int64)
    wsum_g = _weighted_sum(rng, (5, 5))
    lines.append(_line("op.gather_rows",
                       lambda t: wsum_g(ad.gather_rows(t, idx)), x, TOL_ELEMENTWISE))
    src = Tensor(rng.uniform_array((5, 3), -1.0, 1.0), requires_grad=True)
    wsum_s = _weighted_sum(rng, (4, 3))
    lines.append(_line("op.scatter_add_rows",
                       lambda t: wsum_s(ad.scatter_add_rows(t, idx, 4)),
                       src, TOL_ELEMENTWISE))

    scores = Tensor(rng.uniform_array((6, 1), -2.0, 2.0), requires_grad=True)
    segs = np.array([0, 0, 1, 1, 1, 3], dtype=np.int64)
    wsum_sm = _weighted_sum(rng, (6, 1))
    lines.append(_line("op.segment_softmax",
                       lambda t: wsum_sm(ad.segment_softmax(t, segs, 4)),
                       scores, TOL_ELEMENTWISE))

    gamma = Tensor(rng.uniform_array((1, 5), 0.5, 1.5), requires_grad=True)
    beta = Tensor(rng.uniform_array((1, 5), -0.5, 0.5), requires_grad=True)
    lines.append(_line("op.layer_norm_input",
                       lambda t: wsum(ad.layer_norm(t, Tensor._make(gamma.data, False),
                                                    Tensor._make(beta.data, False))),
                       x, TOL_LAYER_NORM))
    lines.append(_line("op.layer_norm_gamma",
                       lambda g: wsum(ad.layer_norm(Tensor._make(x.data, False), g,
                                                    Tensor._make(beta.data, False))),
                       gamma, TOL_LAYER_NORM))
    lines.append(_line("op.layer_norm_beta",
                       lambda bt: wsum(ad.layer_norm(Tensor._make(x.data, False),
                                                     Tensor._make(gamma.data, False), bt)),
                       beta, TOL_LAYER_NORM))

    labels = np.array([1, 0, 2, 1], dtype=np.int64)
    mask = np.array([True, True, False, True])
    logits = Tensor(rng.uniform_array((4, 3), -2.0, 2.0), requires_grad=True)
    lines.append(_line("op.softmax_cross_entropy",
                       lambda t: ad.softmax_cross_entropy(t, labels, mask),
                       logits, TOL_LOSS))
    return lines


def adjointness_checks(seed: int = 0) -> list[CheckLine]:
    """<Ax, y> == <x, A'y> for the index ops, to near machine precision."""
    rng = Rng(seed)
    idx = np.array([2, 0, 3, 3, 1, 0], dtype=np.int64)
    x = rng.uniform_array((4, 3), -1.0, 1.0)
    y = rng.uniform_array((6, 3), -1.0, 1.0)
    with ad.no_grad():
        gathered = ad.gather_rows(Tensor._make(x, False), idx).data
        scattered = ad.scatter_add_rows(Tensor._make(y, False), idx, 4).data
    lhs = float((gathered * y).sum())
    rhs = float((x * scattered).sum())
    err = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-3)
    return [CheckLine("adjoint.gather_scatter", err, TOL_ADJOINT, err <= TOL_ADJOINT)]


def _small_graph(rng: Rng, n: int = 7, extra: int = 9, directed: bool = False):
    # ring plus random chords: connected, no isolated nodes
    pairs = [(i, (i + 1) % n) for i in range(n)]
    for _ in range(extra):
        u = rng.below(n)
        v = rng.below(n)
        if u != v:
            pairs.append((u, v))
    return build_graph(n, pairs, directed=directed)


def layer_checks(seed: int = 0) -> list[CheckLine]:
    rng = Rng(seed)
    lines = []
    n, d = 7, 3
    g = _small_graph(rng)
    e = edge_arrays(g)
    wsum = _weighted_sum(rng, (n, d))

    cfg = ModelConfig(in_features=d, hidden=d, classes=2, layers=1,
                      use_layer_norm=True, use_projection=True, seed=seed)
    from .model import _init_chat_layer
    p = _init_chat_layer(cfg, rng)
    h = Tensor(rng.uniform_array((n, d), -1.0, 1.0), requires_grad=True)
    h0 = Tensor._make(rng.uniform_array((n, d), -1.0, 1.0), False)

    lines.append(_line("layer.chat.h",
                       lambda t: wsum(chat_layer_forward(t, h0, e, p)), h, TOL_LAYER))
    for pname in ("w_self", "w_neigh", "proj_self", "proj_neigh", "ln_gamma", "ln_beta"):
        param = getattr(p, pname)
        lines.append(_line(
            f"layer.chat.{pname}",
            lambda _t, hh=h: wsum(chat_layer_forward(
                Tensor._make(hh.data, False), h0, e, p)),
            param, TOL_LAYER))

    from .model import _init_baseline_layer
    for tag in ("gcn", "scalar_attention", "freq_gate"):
        bcfg = ModelConfig(in_features=d, hidden=d, classes=2, layers=1,
                           use_layer_norm=True, layer_kind=tag, seed=seed)
        kind = _init_baseline_layer(bcfg, rng)
        hb = Tensor(rng.uniform_array((n, d), -1.0, 1.0), requires_grad=True)
        lines.append(_line(f"layer.{tag}.h",
                           lambda t, k=kind: wsum(baseline_forward(k, t, h0, e)),
                           hb, TOL_LAYER))

    gd = _small_graph(rng, directed=True)
    from .graph import reverse
    e_fwd = edge_arrays(gd)
    e_rev = edge_arrays(reverse(gd))
    dcfg = ModelConfig(in_features=d, hidden=d, classes=2, layers=1,
                       use_layer_norm=True, use_projection=True,
                       directed_mode=True, seed=seed)
    from .model import _init_dir_layer
    dp = _init_dir_layer(dcfg, rng)
    hd = Tensor(rng.uniform_array((gd.num_nodes, d), -1.0, 1.0), requires_grad=True)
    h0d = Tensor._make(rng.uniform_array((gd.num_nodes, d), -1.0, 1.0), False)
    wsum_d = _weighted_sum(rng, (gd.num_nodes, d))
    lines.append(_line("layer.directed_chat.h",
                       lambda t: wsum_d(dir_chat_forward(t, h0d, gd, dp.fwd, dp.rev,
                                                         e_fwd, e_rev)),
                       hd, TOL_LAYER))
    return lines


def model_checks(seed: int = 0) -> list[CheckLine]:
    """End-to-end loss gradient for every parameter of a small model."""
    rng = Rng(seed)
    g = _small_graph(rng)
    e = edge_arrays(g)
    n, f = g.num_nodes, 3
    x = Tensor._make(rng.uniform_array((n, f), -1.0, 1.0), False)
    labels = np.array([rng.below(2) for _ in range(n)], dtype=np.int64)
    mask = np.ones(n, dtype=bool)

    cfg = ModelConfig(in_features=f, hidden=4, classes=2, layers=2,
                      use_layer_norm=True, use_projection=True, seed=seed)
    model = init_model(cfg, Rng(seed + 1))

    def loss_fn(_t):
        logits = model_forward(model, x, e)
        return ad.softmax_cross_entropy(logits, labels, mask)

    lines = []
    for name, param in model.parameters():
        lines.append(_line(f"model.{name}", loss_fn, param, TOL_MODEL))
    return lines


def run_suite(seed: int = 0) -> list[CheckLine]:
    lines = op_checks(seed)
    lines += adjointness_checks(seed)
    lines += layer_checks(seed)
    lines += model_checks(seed)
    return lines


def format_report(lines) -> str:
    out = []
    width = max(len(l.name) for l in lines)
    for l in lines:
        status = "ok  " if l.passed else "FAIL"
        out.append(f"{status} {l.name:<{width}}  rel_err {l.max_rel_err:.3e}  tol {l.tol:.0e}")
    failed = sum(0 if l.passed else 1 for l in lines)
    out.append(f"{len(lines) - failed}/{len(lines)} gradient checks passed")
    return "\n".join(out)
