"""Command-line interface.

Subcommands: gen-data, cluster, train, eval.  Every subcommand emits
machine-readable JSON records, one per line, and is deterministic given its
--seed.  Flags override an optional key=value config file.  Exit codes:
0 success, 2 flag/config errors, 3 I/O errors, 4 algorithm failure,
5 no valid query.
"""

import argparse
import json
import sys

import numpy as np

from . import data as data_mod
from .baselines import DbscanConfig, dbscan_fit, dissolve_small, kmeans_fit, relabel_compact
from .camera_entropy import camera_histogram, cie
from .embedder import load_embedder, save_embedder
from .errors import (
    BadModelFile,
    CamclustError,
    DimensionMismatch,
    Malformed,
    NoValidQuery,
)
from .evaluation import adjusted_rand_index, evaluate_map_cmc
from .hdc import HdcConfig, hdc_fit
from .metrics import DEFAULT_EULER_ALPHA, k_reciprocal_jaccard
from .training import CLUSTERING_CHOICES, TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ALGORITHM = 4
EXIT_NO_QUERY = 5


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record) + "\n")


def _read_config_file(path) -> dict:
    """key=value pairs, one per line, '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values


def _coerce(parser_defaults: dict, key: str, raw: str):
    current = parser_defaults.get(key)
    if isinstance(current, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="camclust",
        description="Camera-aware clustering and contrastive embedding training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic multi-camera dataset")
    g.add_argument("--out", required=True, help="output dataset file")
    g.add_argument("--ids", type=int, default=50)
    g.add_argument("--cameras", type=int, default=4)
    g.add_argument("--samples-per-id", type=int, default=8)
    g.add_argument("--dim", type=int, default=32)
    g.add_argument("--bias", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("cluster", help="cluster a dataset file and report quality")
    c.add_argument("--data", required=True)
    c.add_argument("--algorithm", choices=CLUSTERING_CHOICES, default="hdc")
    c.add_argument("--model", default=None, help="embed features with this model first")
    c.add_argument("--clusters", type=int, default=50)
    c.add_argument("--max-iters", type=int, default=20)
    c.add_argument("--min-cluster-size", type=int, default=4)
    c.add_argument("--alpha-euler", type=float, default=DEFAULT_EULER_ALPHA)
    c.add_argument("--k1", type=int, default=30)
    c.add_argument("--k2", type=int, default=6)
    c.add_argument("--eps", type=float, default=0.6)
    c.add_argument("--min-samples", type=int, default=4)
    c.add_argument("--no-normalize", action="store_true",
                   help="cluster raw rows instead of l2-normalized rows (hdc only)")
    c.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="run the full training loop on a dataset file")
    t.add_argument("--data", required=True)
    t.add_argument("--model-out", default=None, help="write final embedder weights here")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--warmup-epochs", type=int, default=3)
    t.add_argument("--iters", type=int, default=20)
    t.add_argument("--p", type=int, default=8)
    t.add_argument("--k-inst", type=int, default=4)
    t.add_argument("--lr", type=float, default=3.5e-4)
    t.add_argument("--weight-decay", type=float, default=5e-4)
    t.add_argument("--momentum", type=float, default=0.2)
    t.add_argument("--tau", type=float, default=0.05)
    t.add_argument("--clustering", choices=CLUSTERING_CHOICES, default="hdc")
    t.add_argument("--no-cie", action="store_true")
    t.add_argument("--update", choices=("vanilla", "hard", "tccl", "chd"), default="chd")
    t.add_argument("--clusters", type=int, default=50)
    t.add_argument("--min-cluster-size", type=int, default=4)
    t.add_argument("--alpha-euler", type=float, default=DEFAULT_EULER_ALPHA)
    t.add_argument("--k1", type=int, default=30)
    t.add_argument("--k2", type=int, default=6)
    t.add_argument("--eps", type=float, default=0.6)
    t.add_argument("--min-samples", type=int, default=4)
    t.add_argument("--d-out", type=int, default=16)
    t.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("eval", help="evaluate a saved embedder on a dataset file")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--no-cross-camera-filter", action="store_true")

    subparsers = {"gen-data": g, "cluster": c, "train": t, "eval": e}
    for p in subparsers.values():
        p.add_argument("--config", default=None, help="key=value config file; flags override")
    return parser, subparsers


def _apply_config_file(subparser, args, argv):
    """Fill unset flags from the config file; explicit flags win."""
    if not args.config:
        return args
    actions = [a for a in subparser._actions if a.dest != "help"]
    defaults = {a.dest: a.default for a in actions}
    raw = _read_config_file(args.config)
    explicit = set()
    for a in actions:
        for opt in a.option_strings:
            if opt in argv:
                explicit.add(a.dest)
    for key, raw_val in raw.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise ValueError(f"unknown config key {key!r}")
        if dest in explicit:
            continue
        setattr(args, dest, _coerce(defaults, dest, raw_val))
    return args


def cmd_gen_data(args) -> int:
    cfg = data_mod.SynthConfig(
        g=args.ids,
        c=args.cameras,
        samples_per_id=args.samples_per_id,
        d_in=args.dim,
        camera_bias=args.bias,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    ds = data_mod.generate_synthetic(cfg)
    data_mod.save_dataset(ds, args.out)
    _emit(
        {
            "command": "gen-data",
            "path": args.out,
            "n": ds.n,
            "ids": cfg.g,
            "cameras": cfg.c,
            "bias": cfg.camera_bias,
            "seed": cfg.seed,
        }
    )
    return EXIT_OK


def cmd_cluster(args) -> int:
    ds = data_mod.load_dataset(args.data)
    feats = ds.features
    if args.model is not None:
        feats = load_embedder(args.model).transform(feats)
    if args.algorithm == "hdc":
        labels = hdc_fit(
            feats,
            HdcConfig(
                k=args.clusters,
                max_iters=args.max_iters,
                min_cluster_size=args.min_cluster_size,
                alpha_euler=args.alpha_euler,
                k1=args.k1,
                k2=args.k2,
                seed=args.seed,
                normalize=not args.no_normalize,
            ),
        )
    elif args.algorithm == "kmeans":
        labels = kmeans_fit(
            feats,
            args.clusters,
            max_iters=args.max_iters,
            seed=args.seed,
            min_cluster_size=args.min_cluster_size,
        )
    else:
        jac = k_reciprocal_jaccard(feats, args.k1, args.k2)
        labels = dbscan_fit(jac, DbscanConfig(args.eps, args.min_samples))
        labels = relabel_compact(dissolve_small(labels, args.min_cluster_size))

    n_clusters = int(labels.max()) + 1 if (labels >= 0).any() else 0
    sizes = [int((labels == kk).sum()) for kk in range(n_clusters)]
    cies = [cie(camera_histogram(ds.camera, labels == kk)) for kk in range(n_clusters)]
    record = {
        "command": "cluster",
        "algorithm": args.algorithm,
        "n": ds.n,
        "clusters": n_clusters,
        "outliers": int((labels < 0).sum()),
        "cluster_sizes": sizes,
        "mean_cie": float(np.mean(cies)) if cies else 0.0,
        "ari": None,
    }
    if (ds.true_id >= 0).all():
        record["ari"] = adjusted_rand_index(ds.true_id, labels)
    _emit(record)
    return EXIT_OK


def cmd_train(args) -> int:
    ds = data_mod.load_dataset(args.data)
    config = TrainConfig(
        epochs=args.epochs,
        warmup_epochs=min(args.warmup_epochs, args.epochs),
        iters_per_epoch=args.iters,
        p=args.p,
        k_inst=args.k_inst,
        base_lr=args.lr,
        weight_decay=args.weight_decay,
        momentum=args.momentum,
        tau=args.tau,
        clustering=args.clustering,
        use_cie=not args.no_cie,
        update_strategy=args.update,
        num_clusters=args.clusters,
        min_cluster_size=args.min_cluster_size,
        alpha_euler=args.alpha_euler,
        k1=args.k1,
        k2=args.k2,
        dbscan_eps=args.eps,
        dbscan_min_samples=args.min_samples,
        d_out=args.d_out,
        seed=args.seed,
    )
    report = train(ds, config)
    for rec in report.epochs:
        _emit(
            {
                "epoch": rec.epoch,
                "mean_loss": rec.mean_loss,
                "clusters": rec.num_clusters,
                "outliers": rec.num_outliers,
                "mean_cie": rec.mean_cie,
                "map": rec.map,
                "rank1": rec.rank1,
                "rank5": rec.rank5,
                "rank10": rec.rank10,
            }
        )
    if args.model_out is not None:
        save_embedder(report.embedder, args.model_out)
    return EXIT_OK


def cmd_eval(args) -> int:
    embedder = load_embedder(args.model)
    ds = data_mod.load_dataset(args.data)
    report = evaluate_map_cmc(
        embedder, ds, cross_camera_filter=not args.no_cross_camera_filter
    )
    _emit(
        {
            "command": "eval",
            "map": report.map,
            "rank1": report.cmc[1],
            "rank5": report.cmc[5],
            "rank10": report.cmc[10],
            "num_queries": report.num_queries,
        }
    )
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(subparsers[args.command], args, argv)
    except OSError as exc:
        print(f"camclust: config error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"camclust: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except NoValidQuery as exc:
        print(f"camclust: {exc}", file=sys.stderr)
        return EXIT_NO_QUERY
    except (BadModelFile, Malformed, DimensionMismatch) as exc:
        print(f"camclust: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"camclust: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"camclust: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CamclustError as exc:
        print(f"camclust: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
