"""Over-smoothing diagnostics.

Local variation and Dirichlet energy, the random-weight deep-stack energy
experiment on grid graphs, numeric checks of the two smoothing bounds
(the local-variation increment bound and the message-collapse tie-probability
comparison), and extraction of per-node attention cosine matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import Dataset
from .graph import Graph, edge_arrays, grid_graph
from .layers import LAYER_KINDS, bare_forward
from .model import (ChatGnnModel, ModelConfig, _init_baseline_layer,
                    _init_chat_layer, model_forward)
from .rng import Rng

MAX_EXPERIMENT_LAYERS = 10000
PROP1_SLACK = 1e-9


def local_variation_all(x: np.ndarray, g: Graph) -> np.ndarray:
    """Per-node sum over neighbors of the squared feature distance."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(g.num_nodes)
    if g.num_arcs == 0:
        return out
    src = np.repeat(np.arange(g.num_nodes), g.degrees)
    sq = ((x[src] - x[g.col_idx]) ** 2).sum(axis=1)
    np.add.at(out, src, sq)
    return out


def local_variation(x: np.ndarray, g: Graph, v: int) -> float:
    x = np.asarray(x, dtype=np.float64)
    nbrs = g.neighbors(v)
    if nbrs.size == 0:
        return 0.0
    return float(((x[v] - x[nbrs]) ** 2).sum())


def dirichlet_energy(x: np.ndarray, g: Graph) -> float:
    """Mean local variation: (1/N) sum_v sum_{w in N(v)} ||x_v - x_w||^2."""
    return float(local_variation_all(x, g).sum() / g.num_nodes)


# --- deep random-weight stacks ------------------------------------------------


@dataclass
class EnergyTrace:
    model_kind: str
    per_layer_energy: np.ndarray  # index 0 is the input-feature energy

    @property
    def num_layers(self) -> int:
        return self.per_layer_energy.size - 1


def _experiment_params(kind: str, width: int, rng: Rng):
    cfg = ModelConfig(in_features=width, hidden=width, classes=2, layers=1,
                      use_layer_norm=False, use_projection=False, layer_kind=kind)
    if kind == "chat":
        return _init_chat_layer(cfg, rng)
    return _init_baseline_layer(cfg, rng)


def energy_decay_experiment(model_kind: str, layers: int, rows: int, cols: int,
                            seed: int) -> EnergyTrace:
    """Dirichlet energy of a deep untrained stack on a 4-neighbor grid.

    Two input channels ~ U(0,1), fresh Glorot weights each layer, and the
    bare message-passing step only: no anchor residual, no normalization,
    no combine projections. Entry 0 of the trace is the input energy.
    """
    if model_kind not in LAYER_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}, expected one of {LAYER_KINDS}")
    if not 0 <= layers <= MAX_EXPERIMENT_LAYERS:
        raise ValueError(f"layers must be in [0, {MAX_EXPERIMENT_LAYERS}]")
    g = grid_graph(rows, cols)
    e = edge_arrays(g)
    rng = Rng(seed)
    x = rng.uniform_array((g.num_nodes, 2))
    energies = [dirichlet_energy(x, g)]
    h = Tensor._make(x, False)
    with ad.no_grad():
        for _ in range(layers):
            params = _experiment_params(model_kind, 2, rng)
            h = bare_forward(model_kind, h, e, params)
            energies.append(dirichlet_energy(h.data, g))
    return EnergyTrace(model_kind, np.array(energies))


def write_energy_csv(trace: EnergyTrace, path: str, header_comments=()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        fh.write("layer,energy\n")
        for i, val in enumerate(trace.per_layer_energy):
            fh.write(f"{i},{float(val)!r}\n")


# --- bound on the local-variation increment -----------------------------------


@dataclass
class Prop1Report:
    num_nodes: int
    deltas: np.ndarray
    bounds: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def prop1_check(h: np.ndarray, m: np.ndarray, g: Graph,
                slack: float = PROP1_SLACK) -> Prop1Report:
    """Check, node by node, that adding message m to state h raises the
    local variation by at most sum_w (delta_wv^2 + 2 c delta_wv), where
    delta_wv = ||m_w - m_v|| and c is the largest adjacent-pair distance
    under h. Violations beyond `slack` are reported.
    """
    h = np.asarray(h, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if h.shape != m.shape:
        raise ValueError(f"state {h.shape} and message {m.shape} shapes differ")
    before = local_variation_all(h, g)
    after = local_variation_all(h + m, g)
    deltas = after - before

    if g.num_arcs:
        src = np.repeat(np.arange(g.num_nodes), g.degrees)
        c = float(np.sqrt(((h[src] - h[g.col_idx]) ** 2).sum(axis=1).max()))
        d_arc = np.sqrt(((m[src] - m[g.col_idx]) ** 2).sum(axis=1))
        bounds = np.zeros(g.num_nodes)
        np.add.at(bounds, src, d_arc ** 2 + 2.0 * c * d_arc)
    else:
        bounds = np.zeros(g.num_nodes)

    violations = [(int(v), float(deltas[v]), float(bounds[v]))
                  for v in np.flatnonzero(deltas > bounds + slack)]
    return Prop1Report(g.num_nodes, deltas, bounds, violations)


# --- message-collapse tie probabilities ----------------------------------------


def collapse_monte_carlo(neighborhood_size: int, dims: int, trials: int,
                         score_support, seed: int) -> tuple[float, float]:
    """Empirical odds that two same-neighborhood nodes get distinct messages.

    Scores are drawn uniformly from the finite score_support for each of
    the shared neighbors; the scalar-attention variant uses one score per
    neighbor, the channel-wise variant one score per neighbor per channel
    (its first channel doubles as the scalar score, so dims=1 makes the
    two frequencies identical draws). Neighbor features are fixed at 1,
    so a message difference is nonzero exactly when some score differs.
    Returns (freq_scalar, freq_channel).
    """
    support = np.asarray(list(score_support), dtype=np.float64)
    if support.size == 0:
        raise ValueError("score_support must be a nonempty finite set")
    if neighborhood_size < 1 or dims < 1 or trials < 1:
        raise ValueError("neighborhood_size, dims, trials must be >= 1")
    rng = Rng(seed)
    per_trial = neighborhood_size * dims
    scalar_hits = 0
    channel_hits = 0
    for _ in range(trials):
        bv = support[rng.integers_array(per_trial, support.size)]
        bw = support[rng.integers_array(per_trial, support.size)]
        diff = bv != bw
        if diff.any():
            channel_hits += 1
            # scalar scores are the first channel of each neighbor block
            if diff[::dims].any():
                scalar_hits += 1
    return scalar_hits / trials, channel_hits / trials


# --- attention cosine matrices --------------------------------------------------


@dataclass
class CosineDump:
    node: int
    neighbors: np.ndarray
    layers: list  # layer indices
    matrices: list  # one (deg, deg) array per entry of layers
    zero_flags: list  # per layer: bool array marking zero attention vectors


def attention_cosine(model: ChatGnnModel, dataset: Dataset, node_ids,
                     layer_range=None) -> tuple[list[CosineDump], list[str]]:
    """Pairwise cosine matrices between a node's incident attention vectors.

    Returns (dumps, notices); nodes with fewer than two neighbors are
    skipped and noted. Zero attention vectors get cosine 0 everywhere
    (their diagonal included) and are flagged in the dump.
    """
    if model.config.layer_kind != "chat" or model.config.directed_mode:
        raise ValueError("attention extraction needs an undirected chat model")
    e = edge_arrays(dataset.graph)
    x = Tensor._make(np.asarray(dataset.features, dtype=np.float64), False)
    with ad.no_grad():
        _, attn_layers = model_forward(model, x, e, collect_attention=True)
    if layer_range is None:
        layer_ids = list(range(len(attn_layers)))
    else:
        layer_ids = [i for i in layer_range if 0 <= i < len(attn_layers)]

    dumps, notices = [], []
    for node in node_ids:
        arcs = np.flatnonzero(e.dst == node)
        if arcs.size < 2:
            notices.append(f"node {node}: skipped, {arcs.size} neighbor(s), need 2")
            continue
        matrices, flags = [], []
        for li in layer_ids:
            beta = attn_layers[li][arcs]
            norms = np.sqrt((beta ** 2).sum(axis=1))
            zero = norms == 0.0
            unit = np.divide(beta, norms[:, None], out=np.zeros_like(beta),
                             where=norms[:, None] != 0)
            gram = unit @ unit.T
            gram = np.clip((gram + gram.T) / 2.0, -1.0, 1.0)
            np.fill_diagonal(gram, np.where(zero, 0.0, 1.0))
            gram[zero, :] = 0.0
            gram[:, zero] = 0.0
            matrices.append(gram)
            flags.append(zero)
        dumps.append(CosineDump(int(node), e.src[arcs].copy(), layer_ids,
                                matrices, flags))
    return dumps, notices


def format_cosine_dumps(dumps, notices=()) -> str:
    """Structured text rendering: node header, then per-layer matrix rows."""
    lines = []
    for note in notices:
        lines.append(f"# {note}")
    for d in dumps:
        lines.append(f"node {d.node}")
        lines.append("neighbors " + " ".join(str(int(j)) for j in d.neighbors))
        for li, mat, zero in zip(d.layers, d.matrices, d.zero_flags):
            suffix = ""
            if zero.any():
                suffix = "  # zero-vector rows: " + " ".join(
                    str(int(j)) for j in np.flatnonzero(zero))
            lines.append(f"layer {li}{suffix}")
            for row in mat:
                lines.append("  " + " ".join(f"{v:+.6f}" for v in row))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
