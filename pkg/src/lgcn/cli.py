"""Command-line entry point: train / analyze / gen.

Every command is deterministic given its config and seed; reports are JSON
with sorted keys and no timestamps, so identical runs produce identical
bytes.  Exit codes: 0 success, 1 config error, 2 data error, 3 undefined
metric.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .graphs import (
    Graph,
    GraphParseError,
    UndefinedMetricError,
    all_pairs_distances,
    average_distortion,
    delta_avg,
    generate_blocks,
    generate_tree,
    load_graph,
    save_graph,
)
from .hyperboloid import project_to_manifold
from .model import LgcnConfig, save_checkpoint, train


class ConfigError(ValueError):
    """Invalid configuration (bad flags, bad config file, bad parameters)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; keep 1 for config
        raise ConfigError(message)


# Config file keys: LgcnConfig fields (minus dims, which is derived) plus
# dataset paths, output directory and the dim/layers pair.
_CONFIG_KEYS = {
    "task": str,
    "edges": str,
    "features": str,
    "labels": str,
    "out": str,
    "dim": int,
    "layers": int,
    "nonlinearity": str,
    "attention": bool,
    "tie_curvature": bool,
    "dropconnect": float,
    "lr": float,
    "weight_decay": float,
    "max_epochs": int,
    "patience": int,
    "seed": int,
    "r": float,
    "t": float,
    "beta_init": float,
    "geometry": str,
}

_DEFAULTS = {
    "task": "lp",
    "dim": 16,
    "layers": 2,
    "nonlinearity": "leaky_relu:0.5",
    "attention": True,
    "tie_curvature": False,
    "dropconnect": 0.0,
    "lr": 0.01,
    "weight_decay": 0.0,
    "max_epochs": 200,
    "patience": 100,
    "seed": 0,
    "r": 2.0,
    "t": 1.0,
    "beta_init": 1.0,
    "geometry": "hyperboloid",
    "out": "run",
}


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    out = {}
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        want = _CONFIG_KEYS[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want) or (want is not bool and isinstance(value, bool)):
            raise ConfigError(f"config key {key!r} expects {want.__name__}, got {value!r}")
        out[key] = value
    return out


def _effective_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        cfg.update(_load_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if "edges" not in cfg:
        raise ConfigError("an edge list is required (--edges or config key 'edges')")
    return cfg


def _load_dataset(cfg: dict) -> Graph:
    for key in ("edges", "features", "labels"):
        path = cfg.get(key)
        if path is not None and not os.path.exists(path):
            raise GraphParseError(f"{key} file not found: {path}")
    return load_graph(cfg["edges"], cfg.get("features"), cfg.get("labels"))


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    graph = _load_dataset(cfg)
    try:
        model_config = LgcnConfig(
            dims=[graph.feature_matrix().shape[1]] + [cfg["dim"]] * cfg["layers"],
            nonlinearity=cfg["nonlinearity"],
            attention=cfg["attention"],
            tie_curvature=cfg["tie_curvature"],
            dropconnect=cfg["dropconnect"],
            lr=cfg["lr"],
            weight_decay=cfg["weight_decay"],
            max_epochs=cfg["max_epochs"],
            patience=cfg["patience"],
            seed=cfg["seed"],
            task=cfg["task"],
            r=cfg["r"],
            t=cfg["t"],
            beta_init=cfg["beta_init"],
            geometry=cfg["geometry"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    result = train(graph, model_config)

    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metrics.jsonl"), "w") as fh:
        for row in result.history:
            json.dump(row, fh, sort_keys=True)
            fh.write("\n")
    save_checkpoint(result.model, os.path.join(out_dir, "checkpoint.json"))
    metric_key = "test_auc" if cfg["task"] == "lp" else "test_accuracy"
    report = {
        "task": cfg["task"],
        "seed": cfg["seed"],
        "best_epoch": result.best_epoch,
        "epochs_run": len(result.history),
        "val_metric": result.val_metric,
        metric_key: result.test_metric,
        "config": {k: cfg[k] for k in sorted(cfg)},
    }
    report_path = os.path.join(out_dir, "report.json")
    _write_json(report_path, report)
    print(json.dumps(report, sort_keys=True))
    return 0


def _load_embeddings(path: str, beta: float):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise GraphParseError(f"{path}:{lineno}: non-numeric coordinate") from None
    if not rows:
        raise GraphParseError(f"{path}: empty embedding file")
    return [project_to_manifold(np.array(r), beta) for r in rows]


def _cmd_analyze(args: argparse.Namespace) -> int:
    if not os.path.exists(args.edges):
        raise GraphParseError(f"edges file not found: {args.edges}")
    graph = load_graph(args.edges)
    report: dict = {}
    mode = args.hyperbolicity
    if mode:
        if mode == "exact":
            result = delta_avg(graph, mode="exact", cap=args.exact_cap)
        elif mode.startswith("sampled:"):
            samples = int(mode.split(":", 1)[1])
            result = delta_avg(graph, mode="sampled", samples=samples, seed=args.seed)
        else:
            raise ConfigError(f"--hyperbolicity expects 'exact' or 'sampled:<m>', got {mode!r}")
        report.update(result.as_dict())
    if args.distortion:
        if not os.path.exists(args.distortion):
            raise GraphParseError(f"embeddings file not found: {args.distortion}")
        embeddings = _load_embeddings(args.distortion, args.beta)
        if len(embeddings) != graph.n:
            raise GraphParseError(
                f"{len(embeddings)} embedding rows for a graph with {graph.n} nodes"
            )
        report["distortion"] = average_distortion(embeddings, all_pairs_distances(graph))
    if not report:
        raise ConfigError("nothing to analyze: pass --hyperbolicity and/or --distortion")
    line = json.dumps(report, sort_keys=True)
    print(line)
    if args.out:
        _write_json(args.out, report)
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    try:
        if args.kind == "tree":
            graph = generate_tree(
                depth=args.depth,
                branching=args.branching,
                feature_mode=args.features,
                noise=args.noise,
                seed=args.seed,
            )
        else:
            graph = generate_blocks(
                n=args.nodes,
                p_in=args.p_in,
                p_out=args.p_out,
                noise=args.noise,
                seed=args.seed,
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    paths = save_graph(graph, args.out)
    summary = {
        "kind": args.kind,
        "nodes": graph.n,
        "edges": int(graph.num_edges),
        "seed": args.seed,
        "files": paths,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="lgcn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", parents=[], help="train a model and write run artifacts")
    p_train.add_argument("--config", help="JSON config file; flags override its values")
    p_train.add_argument("--task", choices=["lp", "nc"])
    p_train.add_argument("--edges")
    p_train.add_argument("--features")
    p_train.add_argument("--labels")
    p_train.add_argument("--out")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--dim", type=int)
    p_train.add_argument("--layers", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--dropconnect", type=float)
    p_train.add_argument("--weight-decay", dest="weight_decay", type=float)
    p_train.add_argument("--max-epochs", dest="max_epochs", type=int)
    p_train.add_argument("--patience", type=int)
    p_train.add_argument("--nonlinearity")
    p_train.add_argument("--geometry", choices=["hyperboloid", "euclidean"])
    p_train.add_argument("--no-attention", dest="attention", action="store_false", default=None)
    p_train.add_argument("--tie-curvature", dest="tie_curvature", action="store_true", default=None)
    p_train.set_defaults(func=_cmd_train)

    p_an = sub.add_parser("analyze", help="graph hyperbolicity and embedding distortion")
    p_an.add_argument("--edges", required=True)
    p_an.add_argument("--hyperbolicity", help="'exact' or 'sampled:<m>'")
    p_an.add_argument("--distortion", help="embedding CSV (one node per row, n+1 coords)")
    p_an.add_argument("--beta", type=float, default=1.0, help="curvature of the embeddings")
    p_an.add_argument("--seed", type=int, default=0)
    p_an.add_argument("--exact-cap", type=int, default=30)
    p_an.add_argument("--out", help="also write the report JSON here")
    p_an.set_defaults(func=_cmd_analyze)

    p_gen = sub.add_parser("gen", help="generate synthetic datasets")
    gen_sub = p_gen.add_subparsers(dest="kind", required=True)
    g_tree = gen_sub.add_parser("tree", help="complete branching tree")
    g_tree.add_argument("--depth", type=int, required=True)
    g_tree.add_argument("--branching", type=int, default=2)
    g_tree.add_argument("--features", choices=["path", "onehot", "label"], default="path")
    g_tree.add_argument("--noise", type=float, default=0.1)
    g_tree.add_argument("--seed", type=int, default=0)
    g_tree.add_argument("--out", required=True)
    g_tree.set_defaults(func=_cmd_gen)
    g_blocks = gen_sub.add_parser("blocks", help="two-block stochastic block model")
    g_blocks.add_argument("--nodes", type=int, required=True)
    g_blocks.add_argument("--p-in", dest="p_in", type=float, required=True)
    g_blocks.add_argument("--p-out", dest="p_out", type=float, required=True)
    g_blocks.add_argument("--noise", type=float, default=0.1)
    g_blocks.add_argument("--seed", type=int, default=0)
    g_blocks.add_argument("--out", required=True)
    g_blocks.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (GraphParseError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except UndefinedMetricError as exc:
        print(f"undefined metric: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
