"""Full model assembly: input projection, L message-passing layers with an
initial-residual anchor and optional layer norm, and a linear output head.

The message-passing stack defaults to the channel-attentive layer but can
be built from any baseline kind, which is how depth sweeps and ablations
get architecture-matched comparisons.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import CheckpointFormatError, ShapeError
from .graph import EdgeArrays
from .layers import (BaselineKind, ChatLayerParams, LAYER_KINDS, baseline_forward,
                     chat_layer_forward, channel_attention, aggregate_messages,
                     combine, _wrap)
from .rng import Rng, glorot_uniform

CHECKPOINT_FORMAT = "chatgnn-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    in_features: int
    hidden: int
    classes: int
    layers: int
    use_layer_norm: bool = True
    use_projection: bool = False
    directed_mode: bool = False
    seed: int = 0
    layer_kind: str = "chat"
    use_initial_residual: bool = True

    def validate(self) -> None:
        for name in ("in_features", "hidden", "classes", "layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"ModelConfig.{name} must be >= 1")
        if self.layer_kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer_kind {self.layer_kind!r}; "
                             f"expected one of {LAYER_KINDS}")
        if self.directed_mode and self.layer_kind != "chat":
            raise ValueError("directed_mode is only supported for chat layers")


@dataclass
class DirLayerParams:
    """Per-direction parameter pair for directed graphs."""

    fwd: ChatLayerParams
    rev: ChatLayerParams


@dataclass
class ChatGnnModel:
    config: ModelConfig
    w_in: Tensor
    b_in: Tensor
    layers: list
    w_out: Tensor
    b_out: Tensor
    _params: list = field(default_factory=list, repr=False)

    def parameters(self) -> list[tuple[str, Tensor]]:
        """Trainable (name, tensor) pairs in a stable order."""
        return list(self._params)

    def num_params(self) -> int:
        return sum(t.data.size for _, t in self._params)

    def zero_grad(self) -> None:
        for _, t in self._params:
            t.grad = None


def _param(arr: np.ndarray) -> Tensor:
    return Tensor(arr, requires_grad=True)


def _init_chat_layer(cfg: ModelConfig, rng: Rng) -> ChatLayerParams:
    d = cfg.hidden
    p = ChatLayerParams(
        w_self=_param(glorot_uniform(rng, d, d)),
        w_neigh=_param(glorot_uniform(rng, d, d)),
        use_layer_norm=cfg.use_layer_norm,
    )
    if cfg.use_projection:
        p.proj_self = _param(glorot_uniform(rng, d, d))
        p.proj_neigh = _param(glorot_uniform(rng, d, d))
    if cfg.use_layer_norm:
        p.ln_gamma = _param(np.ones((1, d)))
        p.ln_beta = _param(np.zeros((1, d)))
    return p


def _init_baseline_layer(cfg: ModelConfig, rng: Rng) -> BaselineKind:
    d = cfg.hidden
    kind = BaselineKind(tag=cfg.layer_kind, use_layer_norm=cfg.use_layer_norm)
    if cfg.layer_kind == "gcn":
        kind.w = _param(glorot_uniform(rng, d, d))
    elif cfg.layer_kind == "scalar_attention":
        kind.w = _param(glorot_uniform(rng, d, d))
        vec = glorot_uniform(rng, 1, 2 * d)
        kind.attn_self = _param(vec[:, :d])
        kind.attn_neigh = _param(vec[:, d:])
    elif cfg.layer_kind == "freq_gate":
        vec = glorot_uniform(rng, 1, 2 * d)
        kind.gate_self = _param(vec[:, :d])
        kind.gate_neigh = _param(vec[:, d:])
    if cfg.use_layer_norm:
        kind.ln_gamma = _param(np.ones((1, d)))
        kind.ln_beta = _param(np.zeros((1, d)))
    return kind


def _init_dir_layer(cfg: ModelConfig, rng: Rng) -> DirLayerParams:
    d = cfg.hidden
    fwd = ChatLayerParams(
        w_self=_param(glorot_uniform(rng, d, d)),
        w_neigh=_param(glorot_uniform(rng, d, d)),
        use_layer_norm=cfg.use_layer_norm,
    )
    rev = ChatLayerParams(
        w_self=_param(glorot_uniform(rng, d, d)),
        w_neigh=_param(glorot_uniform(rng, d, d)),
    )
    if cfg.use_projection:
        fwd.proj_self = _param(glorot_uniform(rng, d, d))
        fwd.proj_neigh = _param(glorot_uniform(rng, d, d))
        rev.proj_neigh = _param(glorot_uniform(rng, d, d))
    if cfg.use_layer_norm:
        fwd.ln_gamma = _param(np.ones((1, d)))
        fwd.ln_beta = _param(np.zeros((1, d)))
    return DirLayerParams(fwd=fwd, rev=rev)


def _collect_params(model: ChatGnnModel) -> None:
    out = [("w_in", model.w_in), ("b_in", model.b_in)]
    for i, layer in enumerate(model.layers):
        prefix = f"layer{i}."
        if isinstance(layer, ChatLayerParams):
            items = [("w_self", layer.w_self), ("w_neigh", layer.w_neigh),
                     ("proj_self", layer.proj_self), ("proj_neigh", layer.proj_neigh),
                     ("ln_gamma", layer.ln_gamma), ("ln_beta", layer.ln_beta)]
        elif isinstance(layer, DirLayerParams):
            items = [("fwd.w_self", layer.fwd.w_self), ("fwd.w_neigh", layer.fwd.w_neigh),
                     ("rev.w_self", layer.rev.w_self), ("rev.w_neigh", layer.rev.w_neigh),
                     ("fwd.proj_self", layer.fwd.proj_self),
                     ("fwd.proj_neigh", layer.fwd.proj_neigh),
                     ("rev.proj_neigh", layer.rev.proj_neigh),
                     ("ln_gamma", layer.fwd.ln_gamma), ("ln_beta", layer.fwd.ln_beta)]
        else:
            items = [("w", layer.w), ("attn_self", layer.attn_self),
                     ("attn_neigh", layer.attn_neigh), ("gate_self", layer.gate_self),
                     ("gate_neigh", layer.gate_neigh),
                     ("ln_gamma", layer.ln_gamma), ("ln_beta", layer.ln_beta)]
        out.extend((prefix + n, t) for n, t in items if t is not None)
    out.extend([("w_out", model.w_out), ("b_out", model.b_out)])
    model._params = out


def init_model(cfg: ModelConfig, rng: Rng) -> ChatGnnModel:
    """Glorot-uniform weights, zero biases, unit layer-norm gains."""
    cfg.validate()
    f, d, k = cfg.in_features, cfg.hidden, cfg.classes
    w_in = _param(glorot_uniform(rng, d, f))
    b_in = _param(np.zeros((1, d)))
    layers = []
    for _ in range(cfg.layers):
        if cfg.directed_mode:
            layers.append(_init_dir_layer(cfg, rng))
        elif cfg.layer_kind == "chat":
            layers.append(_init_chat_layer(cfg, rng))
        else:
            layers.append(_init_baseline_layer(cfg, rng))
    w_out = _param(glorot_uniform(rng, k, d))
    b_out = _param(np.zeros((1, k)))
    model = ChatGnnModel(cfg, w_in, b_in, layers, w_out, b_out)
    _collect_params(model)
    return model


def model_forward(model: ChatGnnModel, x: Tensor, e: EdgeArrays,
                  e_rev: Optional[EdgeArrays] = None,
                  collect_attention: bool = False):
    """Logits of shape (N, classes); softmax lives in the loss.

    With collect_attention=True returns (logits, attn_list) where
    attn_list holds the per-arc attention array of every chat layer.
    """
    cfg = model.config
    if x.cols != cfg.in_features:
        raise ShapeError("model_forward", x.shape, (x.rows, cfg.in_features))
    if cfg.directed_mode and e_rev is None:
        raise ValueError("directed model needs reverse-direction edge arrays")
    h0 = ad.relu(ad.add(ad.linear(x, model.w_in), model.b_in))
    anchor = h0 if cfg.use_initial_residual else None
    h = h0
    attn_dumps = []
    for layer in model.layers:
        if isinstance(layer, DirLayerParams):
            m_fwd = aggregate_messages(h, e, channel_attention(h, e, layer.fwd))
            m_rev = aggregate_messages(h, e_rev, channel_attention(h, e_rev, layer.rev))
            if layer.fwd.proj_self is None:
                h_tilde = ad.add(ad.add(h, m_fwd), m_rev)
            else:
                h_tilde = ad.add(
                    ad.add(ad.linear(h, layer.fwd.proj_self),
                           ad.linear(m_fwd, layer.fwd.proj_neigh)),
                    ad.linear(m_rev, layer.rev.proj_neigh))
            h = _wrap(h_tilde, anchor, layer.fwd.ln_gamma, layer.fwd.ln_beta,
                      layer.fwd.use_layer_norm)
        elif isinstance(layer, ChatLayerParams):
            attn = channel_attention(h, e, layer)
            if collect_attention:
                attn_dumps.append(attn.data.copy())
            m = aggregate_messages(h, e, attn)
            h = _wrap(combine(h, m, layer), anchor, layer.ln_gamma, layer.ln_beta,
                      layer.use_layer_norm)
        else:
            h = baseline_forward(layer, h, anchor, e)
    logits = ad.add(ad.linear(h, model.w_out), model.b_out)
    if collect_attention:
        return logits, attn_dumps
    return logits


# --- checkpoint io ----------------------------------------------------------


def save_checkpoint(model: ChatGnnModel, path: str) -> None:
    """Single JSON document: config fields plus flat row-major arrays with shapes."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "params": [
            {"name": name, "shape": list(t.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in model.parameters()
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str) -> tuple[ChatGnnModel, ModelConfig]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"{path}: not a valid checkpoint document: {exc}")
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointFormatError(f"{path}: missing checkpoint format marker")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported version {doc.get('version')!r}")
    try:
        cfg = ModelConfig(**doc["config"])
        entries = {p["name"]: p for p in doc["params"]}
    except (KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"{path}: malformed checkpoint: {exc}")
    model = init_model(cfg, Rng(cfg.seed))
    names = [name for name, _ in model.parameters()]
    if set(names) != set(entries):
        raise CheckpointFormatError(
            f"{path}: parameter set mismatch for the stored config")
    for name, t in model.parameters():
        entry = entries[name]
        shape = tuple(entry["shape"])
        if shape != t.shape:
            raise CheckpointFormatError(
                f"{path}: parameter {name} has shape {shape}, expected {t.shape}")
        try:
            arr = np.array(entry["data"], dtype=np.float64).reshape(shape)
        except (ValueError, TypeError) as exc:
            raise CheckpointFormatError(f"{path}: parameter {name}: {exc}")
        if not np.isfinite(arr).all():
            raise CheckpointFormatError(f"{path}: parameter {name} has non-finite entries")
        t.data = np.ascontiguousarray(arr)
    return model, cfg
