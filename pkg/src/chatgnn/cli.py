"""Command-line interface.

Subcommands: train, eval, depth-sweep, dirichlet, attention, gradcheck.
Report paths write delimited text plus a rendered PNG figure side by side,
and every output file echoes the flag set in `# key=value` header lines so
a result can be reproduced from its own header.

Exit codes: 0 success, 1 runtime or validation failure, 2 flag errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .analysis import (attention_cosine, energy_decay_experiment,
                       format_cosine_dumps, write_energy_csv)
from .data import load_dataset, write_metrics_csv, write_summary
from .errors import ChatGnnError
from .gradcheck import format_report, run_suite
from .layers import LAYER_KINDS
from .model import ModelConfig, init_model, load_checkpoint, save_checkpoint
from .rng import Rng
from .trainer import METRICS, TrainConfig, evaluate, train

SWEEP_DEPTHS = (2, 4, 8, 16, 32)
SWEEP_HIDDEN = 32


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected 'on' or 'off', got {value!r}")
    return value == "on"


def _add_model_flags(p: argparse.ArgumentParser, default_kind: str = "chat") -> None:
    p.add_argument("--model", choices=LAYER_KINDS, default=default_kind,
                   help="message-passing layer kind")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--layer-norm", type=_on_off, default=True, metavar="{on,off}")
    p.add_argument("--projection", type=_on_off, default=False, metavar="{on,off}")
    p.add_argument("--directed", type=_on_off, default=False, metavar="{on,off}")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=200)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--metric", choices=METRICS, default="accuracy")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chatgnn",
        description="Channel-attentive graph network training and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a dataset and write metrics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=".")
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--split", default="all",
                   help="split index or 'all' (default all)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", type=int, default=0)
    p.add_argument("--metric", choices=METRICS, default="accuracy")

    p = sub.add_parser("depth-sweep",
                       help=f"test metric at depths {SWEEP_DEPTHS}, hidden {SWEEP_HIDDEN}")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--models", default="chat,gcn",
                   help="comma-separated layer kinds")
    p.add_argument("--layer-norm", type=_on_off, default=True, metavar="{on,off}")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("dirichlet", help="deep random-weight energy trace on a grid")
    p.add_argument("--model", choices=LAYER_KINDS, default="chat")
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")

    p = sub.add_parser("attention", help="attention cosine matrices for sampled nodes")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--nodes", type=int, default=5,
                   help="how many nodes to sample")
    p.add_argument("--first-layers", type=int, default=5,
                   help="restrict to the first k layers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _echo(args, keys) -> list[str]:
    lines = [f"command={args.command}"]
    for key in keys:
        lines.append(f"{key.replace('_', '-')}={getattr(args, key)}")
    return lines


def _model_config(args, dataset, kind: str, seed: int) -> ModelConfig:
    return ModelConfig(
        in_features=dataset.features.shape[1],
        hidden=args.hidden,
        classes=dataset.num_classes,
        layers=args.layers,
        use_layer_norm=args.layer_norm,
        use_projection=args.projection,
        directed_mode=args.directed,
        seed=seed,
        layer_kind=kind,
    )


def _train_config(args) -> TrainConfig:
    # patience above max_epochs can never fire; clamp so short runs work
    return TrainConfig(lr=args.lr, weight_decay=args.weight_decay,
                       max_epochs=args.max_epochs,
                       patience=min(args.patience, args.max_epochs),
                       warmup=args.warmup, test_metric=args.metric)


def _split_indices(spec: str, num_splits: int) -> list[int]:
    if spec == "all":
        return list(range(num_splits))
    idx = int(spec)
    if not 0 <= idx < num_splits:
        raise ValueError(f"split {idx} out of range, dataset has {num_splits}")
    return [idx]


def _cmd_train(args) -> int:
    from . import plots
    ds = load_dataset(args.dataset)
    if args.directed and not ds.graph.directed:
        raise ValueError("--directed on requires a directed dataset")
    os.makedirs(args.out, exist_ok=True)
    echo = _echo(args, ["dataset", "model", "layers", "hidden", "layer_norm",
                        "projection", "directed", "lr", "weight_decay",
                        "max_epochs", "patience", "warmup", "metric", "split",
                        "seed"])
    splits = _split_indices(args.split, len(ds.splits))
    cfg_train = _train_config(args)
    results = []
    for si in splits:
        cfg = _model_config(args, ds, args.model, seed=args.seed + si)
        model = init_model(cfg, Rng(cfg.seed))
        out = train(model, ds, si, cfg_train)
        final = evaluate(out.model, ds, ds.splits[si].test, cfg_train.test_metric)
        results.append(final)
        stem = os.path.join(args.out, f"split{si}")
        write_metrics_csv(out.history, stem + "_metrics.csv", echo)
        plots.plot_training_curves(out.history, stem + "_training.png")
        save_checkpoint(out.model, stem + "_model.ckpt.json")
        print(f"split {si}: test_{cfg_train.test_metric}={final:.4f} "
              f"best_epoch={out.best_epoch}")
    line = write_summary(results, os.path.join(args.out, "summary.txt"), echo)
    print(f"summary: {line}")
    return 0


def _cmd_eval(args) -> int:
    ds = load_dataset(args.dataset)
    model, _cfg = load_checkpoint(args.checkpoint)
    if not 0 <= args.split < len(ds.splits):
        raise ValueError(f"split {args.split} out of range, dataset has {len(ds.splits)}")
    value = evaluate(model, ds, ds.splits[args.split].test, args.metric)
    print(f"test_{args.metric} {value:.6f}")
    return 0


def _cmd_depth_sweep(args) -> int:
    from . import plots
    ds = load_dataset(args.dataset)
    os.makedirs(args.out, exist_ok=True)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    for k in kinds:
        if k not in LAYER_KINDS:
            raise ValueError(f"unknown model kind {k!r}, expected one of {LAYER_KINDS}")
    echo = _echo(args, ["dataset", "models", "layer_norm", "lr", "weight_decay",
                        "max_epochs", "patience", "warmup", "metric", "seed"])
    cfg_train = _train_config(args)
    rows = []
    for kind in kinds:
        for depth in SWEEP_DEPTHS:
            per_split = []
            for si in range(len(ds.splits)):
                cfg = ModelConfig(
                    in_features=ds.features.shape[1], hidden=SWEEP_HIDDEN,
                    classes=ds.num_classes, layers=depth,
                    use_layer_norm=args.layer_norm, layer_kind=kind,
                    seed=args.seed + si)
                model = init_model(cfg, Rng(cfg.seed))
                out = train(model, ds, si, cfg_train)
                per_split.append(
                    evaluate(out.model, ds, ds.splits[si].test, cfg_train.test_metric))
            arr = np.asarray(per_split)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            rows.append((kind, depth, float(arr.mean()), std))
            print(f"{kind} layers={depth}: mean_test={arr.mean():.4f} ± {std:.4f}")
    csv_path = os.path.join(args.out, "depth_sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        for comment in echo:
            fh.write(f"# {comment}\n")
        fh.write("model,layers,mean_test,std_test\n")
        for kind, depth, mean, std in rows:
            fh.write(f"{kind},{depth},{mean!r},{std!r}\n")
    plots.plot_depth_sweep(rows, os.path.join(args.out, "depth_sweep.png"),
                           metric_name=f"test {cfg_train.test_metric}")
    return 0


def _cmd_dirichlet(args) -> int:
    from . import plots
    os.makedirs(args.out, exist_ok=True)
    trace = energy_decay_experiment(args.model, args.depth, args.rows, args.cols,
                                    args.seed)
    echo = _echo(args, ["model", "rows", "cols", "depth", "seed"])
    stem = os.path.join(args.out, f"energy_{args.model}")
    write_energy_csv(trace, stem + ".csv", echo)
    plots.plot_energy_traces([trace], stem + ".png")
    print(f"wrote {stem}.csv ({trace.per_layer_energy.size} rows) and {stem}.png")
    return 0


def _cmd_attention(args) -> int:
    from . import plots
    ds = load_dataset(args.dataset)
    model, cfg = load_checkpoint(args.checkpoint)
    os.makedirs(args.out, exist_ok=True)
    rng = Rng(args.seed)
    perm = rng.permutation(ds.graph.num_nodes)
    node_ids = [int(v) for v in perm[:args.nodes]]
    layer_range = range(min(args.first_layers, cfg.layers))
    dumps, notices = attention_cosine(model, ds, node_ids, layer_range)
    echo = _echo(args, ["dataset", "checkpoint", "nodes", "first_layers", "seed"])
    text = "".join(f"# {line}\n" for line in echo) + format_cosine_dumps(dumps, notices)
    path = os.path.join(args.out, "attention.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    if dumps:
        plots.plot_cosine_heatmaps(dumps, os.path.join(args.out, "attention.png"))
    for note in notices:
        print(f"note: {note}")
    print(f"wrote {path} ({len(dumps)} node dump(s))")
    return 0


def _cmd_gradcheck(args) -> int:
    lines = run_suite(args.seed)
    print(format_report(lines))
    return 0 if all(l.passed for l in lines) else 1


_DISPATCH = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "depth-sweep": _cmd_depth_sweep,
    "dirichlet": _cmd_dirichlet,
    "attention": _cmd_attention,
    "gradcheck": _cmd_gradcheck,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (ChatGnnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
