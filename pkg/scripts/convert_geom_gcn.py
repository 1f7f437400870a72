#!/usr/bin/env python3
"""Convert a geom-gcn style benchmark dump into the chatgraph text format.

Expected inputs (the layout the public WebKB/heterophily dumps use):

  out1_graph_edges.txt            header line, then one "src<TAB>dst" per line
  out1_node_feature_label.txt     header line, then "id<TAB>f1,f2,...<TAB>label"
  <name>_split_0.6_0.2_<i>.npz    arrays train_mask, val_mask, test_mask (0/1)

Field mapping (bit-exact):
  - node ids are used as-is as row indices; features keep their text order
  - every edge line becomes one undirected edge (the loader symmetrizes
    and deduplicates, so a directed dump loses nothing)
  - each split npz becomes one split block, masks turned into index lists

Example:
  python scripts/convert_geom_gcn.py --edges texas/out1_graph_edges.txt \\
      --features texas/out1_node_feature_label.txt \\
      --splits 'texas/texas_split_0.6_0.2_*.npz' \\
      --name texas --row-normalize --out data/texas.graph
"""

import argparse
import glob
import sys

import numpy as np


def read_edges(path):
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for line in lines[1:]:  # skip header
        parts = line.split()
        if len(parts) >= 2:
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def read_features_labels(path):
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for line in lines[1:]:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            continue
        node = int(parts[0])
        feats = np.array([float(x) for x in parts[1].split(",")])
        rows[node] = (feats, int(parts[2]))
    n = max(rows) + 1
    dim = rows[next(iter(rows))][0].size
    features = np.zeros((n, dim))
    labels = np.zeros(n, dtype=np.int64)
    for node, (feats, label) in rows.items():
        features[node] = feats
        labels[node] = label
    return features, labels


def read_split(path):
    with np.load(path) as z:
        return (np.flatnonzero(z["train_mask"]),
                np.flatnonzero(z["val_mask"]),
                np.flatnonzero(z["test_mask"]))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--edges", required=True)
    ap.add_argument("--features", required=True)
    ap.add_argument("--splits", required=True,
                    help="glob pattern for the split .npz files")
    ap.add_argument("--name", required=True)
    ap.add_argument("--row-normalize", action="store_true",
                    help="L1-normalize feature rows at load time")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    pairs = read_edges(args.edges)
    features, labels = read_features_labels(args.features)
    split_paths = sorted(glob.glob(args.splits))
    if not split_paths:
        print(f"error: no split files match {args.splits!r}", file=sys.stderr)
        return 1
    splits = [read_split(p) for p in split_paths]
    n = features.shape[0]
    num_classes = int(labels.max()) + 1

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("chatgraph 1\n")
        fh.write(f"name {args.name}\n")
        fh.write(f"nodes {n}\n")
        fh.write(f"features {features.shape[1]}\n")
        fh.write(f"classes {num_classes}\n")
        fh.write("directed 0\n")
        fh.write(f"row_normalize {int(args.row_normalize)}\n")
        fh.write(f"edges {len(pairs)}\n")
        for u, v in pairs:
            fh.write(f"{u} {v}\n")
        fh.write("node_features\n")
        for row in features:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write("labels\n")
        fh.write(" ".join(str(int(y)) for y in labels) + "\n")
        fh.write(f"splits {len(splits)}\n")
        for i, (train, val, test) in enumerate(splits):
            fh.write(f"split {i}\n")
            for key, idx in (("train", train), ("val", val), ("test", test)):
                fh.write(f"{key} {idx.size} " + " ".join(str(int(j)) for j in idx) + "\n")
    print(f"wrote {args.out}: {n} nodes, {len(pairs)} edge lines, "
          f"{len(splits)} splits")
    return 0


if __name__ == "__main__":
    sys.exit(main())
