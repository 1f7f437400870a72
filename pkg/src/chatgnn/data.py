"""Dataset file format, split management, and result serialization.

The on-disk format is line-oriented text (see docs/dataset_format.md):
a `chatgraph 1` magic line, scalar header fields, an edge list, dense
feature rows, a label line, and per-split index lines. Floats are
written with repr so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DatasetFormatError, DatasetValidationError
from .graph import Graph, build_graph
from .rng import Rng

DEFAULT_FRACTIONS = (0.48, 0.32, 0.20)


@dataclass
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass
class Dataset:
    name: str
    graph: Graph
    features: np.ndarray    # (N, F) float64
    labels: np.ndarray      # (N,) int64 in [0, num_classes)
    num_classes: int
    splits: list[Split]
    row_normalized: bool = False


def row_normalize(features: np.ndarray) -> np.ndarray:
    """Divide each row by its L1 sum; all-zero rows stay zero."""
    feats = np.asarray(features, dtype=np.float64)
    sums = np.abs(feats).sum(axis=1, keepdims=True)
    out = np.divide(feats, sums, out=np.zeros_like(feats), where=sums != 0)
    return out


def random_splits(n: int, num_splits: int, fractions=DEFAULT_FRACTIONS,
                  seed: int = 0) -> list[Split]:
    """Disjoint train/val/test index sets, deterministic per seed.

    Sizes are the rounded fractions with test taking the remainder of
    the covered span, so (0.5, 0.3, 0.2) on n=10 gives 5/3/2.
    """
    if len(fractions) != 3 or sum(fractions) > 1.0 + 1e-9:
        raise ValueError(f"fractions must be 3 values summing to <= 1, got {fractions}")
    n_train = int(round(n * fractions[0]))
    n_val = int(round(n * fractions[1]))
    n_test = int(round(n * sum(fractions))) - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"n={n} too small for nonempty splits at {fractions}")
    rng = Rng(seed)
    out = []
    for _ in range(num_splits):
        perm = rng.permutation(n)
        out.append(Split(
            train=np.sort(perm[:n_train]),
            val=np.sort(perm[n_train:n_train + n_val]),
            test=np.sort(perm[n_train + n_val:n_train + n_val + n_test]),
        ))
    return out


# --- structured-text dataset format ----------------------------------------


class _Reader:
    def __init__(self, path: str, lines: list[str]):
        self.path = path
        self.lines = lines
        self.pos = 0

    def next_line(self, what: str) -> tuple[int, str]:
        while self.pos < len(self.lines):
            self.pos += 1
            raw = self.lines[self.pos - 1].strip()
            if raw and not raw.startswith("#"):
                return self.pos, raw
        raise DatasetFormatError(self.path, len(self.lines), f"unexpected end of file, expected {what}")

    def keyword(self, key: str) -> list[str]:
        no, line = self.next_line(f"'{key} ...'")
        parts = line.split()
        if parts[0] != key:
            raise DatasetFormatError(self.path, no, f"expected '{key}', found {parts[0]!r}")
        return parts[1:]

    def keyword_int(self, key: str) -> int:
        no = self.pos
        parts = self.keyword(key)
        try:
            return int(parts[0])
        except (IndexError, ValueError):
            raise DatasetFormatError(self.path, no + 1, f"'{key}' needs one integer value")


def _parse_index_line(reader: _Reader, key: str, n: int) -> np.ndarray:
    no, line = reader.next_line(f"'{key} <count> <indices>'")
    parts = line.split()
    if parts[0] != key:
        raise DatasetFormatError(reader.path, no, f"expected '{key}', found {parts[0]!r}")
    try:
        count = int(parts[1])
        idx = np.array([int(p) for p in parts[2:]], dtype=np.int64)
    except (IndexError, ValueError):
        raise DatasetFormatError(reader.path, no, f"malformed '{key}' index line")
    if idx.size != count:
        raise DatasetFormatError(reader.path, no,
                                 f"'{key}' declares {count} indices but lists {idx.size}")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DatasetValidationError(f"splits.{key}", f"index out of range [0, {n})")
    return idx


def load_dataset(path: str) -> Dataset:
    """Parse and validate a dataset file; see docs/dataset_format.md."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = _Reader(path, fh.readlines())
    no, magic = reader.next_line("'chatgraph 1'")
    if magic.split() != ["chatgraph", "1"]:
        raise DatasetFormatError(path, no, "missing 'chatgraph 1' magic line")
    name = " ".join(reader.keyword("name")) or "unnamed"
    n = reader.keyword_int("nodes")
    num_features = reader.keyword_int("features")
    num_classes = reader.keyword_int("classes")
    directed = bool(reader.keyword_int("directed"))
    normalize = bool(reader.keyword_int("row_normalize"))
    num_edges = reader.keyword_int("edges")
    if n < 1 or num_features < 1 or num_classes < 1:
        raise DatasetValidationError("header", "nodes, features, classes must be >= 1")

    edges = np.zeros((num_edges, 2), dtype=np.int64)
    for i in range(num_edges):
        no, line = reader.next_line("an edge 'u v'")
        parts = line.split()
        try:
            edges[i] = (int(parts[0]), int(parts[1]))
        except (IndexError, ValueError):
            raise DatasetFormatError(path, no, "edge lines must be 'u v'")
    if num_edges and (edges.min() < 0 or edges.max() >= n):
        raise DatasetValidationError("edges", f"endpoint out of range [0, {n})")

    reader.keyword("node_features")
    features = np.zeros((n, num_features), dtype=np.float64)
    for i in range(n):
        no, line = reader.next_line("a feature row")
        parts = line.split()
        if len(parts) != num_features:
            raise DatasetFormatError(
                path, no, f"feature row has {len(parts)} values, expected {num_features}")
        try:
            features[i] = [float(p) for p in parts]
        except ValueError:
            raise DatasetFormatError(path, no, "feature rows must be numeric")
    if not np.isfinite(features).all():
        raise DatasetValidationError("features", "non-finite feature value")

    reader.keyword("labels")
    no, line = reader.next_line("the label line")
    try:
        labels = np.array([int(p) for p in line.split()], dtype=np.int64)
    except ValueError:
        raise DatasetFormatError(path, no, "labels must be integers")
    if labels.size != n:
        raise DatasetFormatError(path, no, f"{labels.size} labels for {n} nodes")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise DatasetValidationError(
            "labels", f"label outside [0, {num_classes})")

    num_splits = reader.keyword_int("splits")
    if num_splits < 1:
        raise DatasetValidationError("splits", "at least one split required")
    splits = []
    for s in range(num_splits):
        declared = reader.keyword_int("split")
        if declared != s:
            raise DatasetValidationError("splits", f"split {s} labeled as {declared}")
        train = _parse_index_line(reader, "train", n)
        val = _parse_index_line(reader, "val", n)
        test = _parse_index_line(reader, "test", n)
        combined = np.concatenate([train, val, test])
        if np.unique(combined).size != combined.size:
            raise DatasetValidationError(
                "splits", f"split {s} has overlapping train/val/test indices")
        splits.append(Split(train, val, test))

    if normalize:
        features = row_normalize(features)
    graph = build_graph(n, edges, directed=directed)
    return Dataset(name, graph, features, labels, num_classes, splits,
                   row_normalized=normalize)


def save_dataset(ds: Dataset, path: str) -> None:
    """Inverse of load_dataset; feature floats written with full precision."""
    g = ds.graph
    src = np.repeat(np.arange(g.num_nodes), g.degrees)
    if g.directed:
        pairs = np.stack([src, g.col_idx], axis=1)
    else:
        keep = src < g.col_idx
        pairs = np.stack([src[keep], g.col_idx[keep]], axis=1)
    feats = ds.features
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("chatgraph 1\n")
        fh.write(f"name {ds.name}\n")
        fh.write(f"nodes {g.num_nodes}\n")
        fh.write(f"features {feats.shape[1]}\n")
        fh.write(f"classes {ds.num_classes}\n")
        fh.write(f"directed {int(g.directed)}\n")
        # Normalization already applied in memory; loading must not redo it.
        fh.write("row_normalize 0\n")
        fh.write(f"edges {pairs.shape[0]}\n")
        for u, v in pairs:
            fh.write(f"{u} {v}\n")
        fh.write("node_features\n")
        for row in feats:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write("labels\n")
        fh.write(" ".join(str(int(y)) for y in ds.labels) + "\n")
        fh.write(f"splits {len(ds.splits)}\n")
        for i, sp in enumerate(ds.splits):
            fh.write(f"split {i}\n")
            for key, idx in (("train", sp.train), ("val", sp.val), ("test", sp.test)):
                fh.write(f"{key} {idx.size} " + " ".join(str(int(j)) for j in idx) + "\n")


# --- result serialization ---------------------------------------------------


def write_metrics_csv(history, path: str, header_comments=()) -> None:
    """Per-epoch metrics CSV; header_comments become leading '# ' lines."""
    if not history:
        raise ValueError("empty metrics history")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_acc", "test_metric"])
        for em in history:
            writer.writerow([em.epoch, repr(float(em.train_loss)),
                             repr(float(em.val_accuracy)),
                             repr(float(em.test_metric))])


def format_mean_std(results) -> str:
    """'85.0 ± 7.1': mean and sample standard deviation, percent, one decimal."""
    arr = np.asarray(list(results), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no results to summarize")
    mean = arr.mean() * 100.0
    std = arr.std(ddof=1) * 100.0 if arr.size > 1 else 0.0
    return f"{mean:.1f} ± {std:.1f}"


def write_summary(results, path: str, header_comments=()) -> str:
    """Write the mean ± stddev line (plus per-split values) to a text file."""
    line = format_mean_std(results)
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        fh.write(f"test_metric: {line}\n")
        fh.write("per_split: " + " ".join(repr(float(r)) for r in results) + "\n")
    return line


# --- synthetic datasets ------------------------------------------------------


def synthetic_classification(num_nodes: int, num_classes: int, num_features: int,
                             avg_degree: float, edge_homophily: float,
                             feature_noise: float, seed: int,
                             num_splits: int = 10,
                             name: str = "synthetic") -> Dataset:
    """Random node-classification dataset with controllable homophily.

    Features are a noisy one-hot class pattern tiled across the feature
    dimension, so labels are recoverable from features alone. Each node
    draws round(avg_degree) edge partners; a partner shares the node's
    class with probability edge_homophily, otherwise it is drawn from
    the other classes. Low edge_homophily gives a heterophilous graph.
    """
    if num_features < num_classes:
        raise ValueError("need num_features >= num_classes")
    rng = Rng(seed)
    labels = np.array([rng.below(num_classes) for _ in range(num_nodes)], dtype=np.int64)
    # Guarantee every class appears so splits can contain each label.
    for c in range(num_classes):
        labels[c % num_nodes] = c
    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]

    features = rng.uniform_array((num_nodes, num_features), -feature_noise, feature_noise)
    for v in range(num_nodes):
        features[v, labels[v]::num_classes] += 1.0

    edges = []
    per_node = max(1, int(round(avg_degree)))
    for v in range(num_nodes):
        for _ in range(per_node):
            same = rng.uniform() < edge_homophily
            pool = by_class[labels[v]]
            if not same or pool.size < 2:
                c = rng.below(num_classes - 1)
                if c >= labels[v]:
                    c += 1
                pool = by_class[c] if by_class[c].size else np.arange(num_nodes)
            w = int(pool[rng.below(pool.size)])
            if w != v:
                edges.append((v, w))
    graph = build_graph(num_nodes, edges, directed=False)
    splits = random_splits(num_nodes, num_splits, DEFAULT_FRACTIONS, seed=seed + 1)
    return Dataset(name, graph, features, labels, num_classes, splits)


def overfit_sanity_dataset(seed: int = 7) -> Dataset:
    """20-node two-class dataset used by the trainer sanity checks."""
    return synthetic_classification(
        num_nodes=20, num_classes=2, num_features=8, avg_degree=2.0,
        edge_homophily=0.3, feature_noise=0.4, seed=seed, num_splits=2,
        name="overfit-sanity")
