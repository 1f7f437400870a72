"""Channel-attentive graph network engine.

Node classification on sparse graphs with per-channel attention message
passing, a small reverse-mode autodiff core, a full-batch Adam trainer,
and over-smoothing diagnostics (Dirichlet energy traces, bound checks,
attention cosine matrices).
"""

from .analysis import (CosineDump, EnergyTrace, attention_cosine,
                       collapse_monte_carlo, dirichlet_energy,
                       energy_decay_experiment, local_variation, prop1_check)
from .autodiff import Tape, Tensor, backward, grad_check, no_grad, zero_grads
from .data import (Dataset, Split, load_dataset, random_splits, row_normalize,
                   save_dataset, synthetic_classification)
from .errors import (ChatGnnError, CheckpointFormatError, DatasetFormatError,
                     DatasetValidationError, GraphIndexError, ShapeError)
from .graph import EdgeArrays, Graph, build_graph, edge_arrays, grid_graph, reverse
from .layers import (aggregate_messages, baseline_forward, channel_attention,
                     chat_layer_forward, combine, dir_chat_forward)
from .model import (ChatGnnModel, ModelConfig, init_model, load_checkpoint,
                    model_forward, save_checkpoint)
from .rng import Rng, glorot_uniform
from .trainer import TrainConfig, TrainResult, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "ChatGnnError", "CheckpointFormatError", "DatasetFormatError",
    "DatasetValidationError", "GraphIndexError", "ShapeError",
    "Tensor", "Tape", "no_grad", "backward", "zero_grads", "grad_check",
    "Rng", "glorot_uniform",
    "Graph", "EdgeArrays", "build_graph", "edge_arrays", "grid_graph", "reverse",
    "channel_attention", "aggregate_messages", "combine", "chat_layer_forward",
    "baseline_forward", "dir_chat_forward",
    "ModelConfig", "ChatGnnModel", "init_model", "model_forward",
    "save_checkpoint", "load_checkpoint",
    "TrainConfig", "TrainResult", "train", "evaluate",
    "Dataset", "Split", "load_dataset", "save_dataset", "row_normalize",
    "random_splits", "synthetic_classification",
    "EnergyTrace", "CosineDump", "local_variation", "dirichlet_energy",
    "energy_decay_experiment", "prop1_check", "collapse_monte_carlo",
    "attention_cosine",
    "__version__",
]
