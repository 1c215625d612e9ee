"""Command-line driver: ``sne <command> [flags]``.

Commands: stats, walk, train, export, eval-nodes, eval-links, sweep, synth.
Exit status is 0 on success, 1 on runtime errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import evaluation
from .graph import GraphFormatError, degree_stats, load_edge_list, load_node_classes
from .graph import write_edge_list, write_node_classes
from .storage import load_checkpoint, read_embeddings, save_checkpoint, write_embeddings
from .synthetic import two_community_graph
from .train import TrainConfig, train, write_loss_csv
from .walks import WalkConfig, generate_samples, write_corpus

logger = logging.getLogger("sne")

SWEEP_PARAMS = {
    "d": "dim", "dim": "dim",
    "l": "path_len", "path-len": "path_len",
    "t": "walks_per_node", "samples": "walks_per_node", "walks-per-node": "walks_per_node",
}


class UsageError(Exception):
    pass


def _graph_flags(p, classes=False):
    p.add_argument("--edges", required=True, help="signed edge list <src> <dst> <sign>")
    p.add_argument("--directed", action="store_true", help="treat edges as directed")
    p.add_argument("--resolve-conflicts", choices=("error", "drop"), default="error",
                   help="what to do with pairs listed with both signs")
    if classes:
        p.add_argument("--classes", help="node class file <node> <class>")


def _walk_flags(p):
    p.add_argument("--path-len", "--l", type=int, default=3, help="path length l (use 1 for sparse directed graphs)")
    p.add_argument("--walk-len", type=int, default=40, help="maximum random walk length L")
    p.add_argument("--walks-per-node", type=int, default=20, help="walks started per node t")
    p.add_argument("--seed", type=int, default=0, help="master random seed")


def _train_flags(p):
    _walk_flags(p)
    p.add_argument("--dim", type=int, default=100, help="embedding dimension d")
    p.add_argument("--neg-samples", type=int, default=512, help="sampled-softmax negatives k")
    p.add_argument("--distribution", choices=("uniform", "log-uniform"), default="uniform",
                   help="negative-sampling distribution")
    p.add_argument("--no-correction", action="store_true",
                   help="drop the log(k q) sampled-softmax correction")
    p.add_argument("--lr", type=float, default=0.1, help="Adagrad learning rate")
    p.add_argument("--epochs", type=int, default=5, help="passes over the corpus")
    p.add_argument("--unsigned-ablation", action="store_true",
                   help="share one context vector for both signs")
    p.add_argument("--shuffle", action="store_true", help="shuffle sample order every epoch")
    p.add_argument("--corpus", help="read training samples from this corpus file")
    p.add_argument("--checkpoint-every", type=int, default=0,
                   help="write a checkpoint every N samples (0 = only at the end)")
    p.add_argument("--resume", help="continue from this checkpoint")
    p.add_argument("--workers", type=int, default=1,
                   help="lock-free training threads (>1 is nondeterministic)")


def _eval_flags(p, links=False):
    p.add_argument("--model", help="checkpoint to evaluate (otherwise train from --edges)")
    p.add_argument("--embeddings", help="embedding file to evaluate instead of a checkpoint")
    p.add_argument("--mode", choices=("s", "st"), default="st", help="node representation")
    p.add_argument("--lam", type=float, default=1e-4, help="L2 strength of the classifier")
    p.add_argument("--iters", type=int, default=500, help="gradient-descent iterations")
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds")
    if links:
        p.add_argument("--op", choices=[o.value for o in evaluation.EdgeOperator],
                       default="hadamard", help="edge operator")
        p.add_argument("--subsample-negatives", action="store_true",
                       help="balance classes at min(|E+|, |E-|) when positives are scarce")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="sne", description="Signed network embedding.",
                                     formatter_class=fmt)
    parser.add_argument("--config", help="key=value file with flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("stats", help="node and edge counts", formatter_class=fmt)
    _graph_flags(p)

    p = sub.add_parser("walk", help="write the training corpus", formatter_class=fmt)
    _graph_flags(p)
    _walk_flags(p)
    p.add_argument("--out", required=True, help="corpus file")

    p = sub.add_parser("train", help="train embeddings", formatter_class=fmt)
    _graph_flags(p)
    _train_flags(p)
    p.add_argument("--mode", choices=("s", "st"), default="st", help="representation written out")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("export", help="write embeddings from a checkpoint", formatter_class=fmt)
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--mode", choices=("s", "st"), default="st", help="node representation")
    p.add_argument("--out", required=True, help="embedding file")

    for name, links in (("eval-nodes", False), ("eval-links", True)):
        p = sub.add_parser(name, formatter_class=fmt,
                           help="link prediction" if links else "node classification")
        _graph_flags(p, classes=not links)
        _train_flags(p)
        _eval_flags(p, links)
        p.add_argument("--out", help="fold,accuracy report CSV")

    p = sub.add_parser("sweep", help="accuracy as one hyperparameter varies", formatter_class=fmt)
    _graph_flags(p, classes=True)
    _train_flags(p)
    _eval_flags(p, links=True)
    p.add_argument("--task", choices=("nodes", "links"), default="links", help="evaluation task")
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS), help="hyperparameter")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True, help="value,accuracy CSV")

    p = sub.add_parser("synth", help="write a two-community benchmark", formatter_class=fmt)
    p.add_argument("--n", type=int, default=200, help="nodes per community")
    p.add_argument("--p-in", type=float, default=0.05, help="positive edge probability inside")
    p.add_argument("--p-out", type=float, default=0.05, help="negative edge probability across")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", required=True, help="output directory (edges.tsv, classes.tsv)")
    return parser


def read_config(path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _apply_config(parser, argv, config_path) -> None:
    """Install config-file values as defaults of the command named in ``argv``."""
    choices = parser._subparsers._group_actions[0].choices
    command = next((tok for tok in argv if tok in choices), None)
    if command is None:
        return
    sub = choices[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in read_config(config_path).items():
        action = actions.get(key)
        if action is None or key == "help":
            raise UsageError(f"unknown config key {key!r} for {command}")
        try:
            if action.nargs == 0:  # store_true flags
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(raw) if action.type else raw
        except ValueError:
            raise UsageError(f"bad value {raw!r} for config key {key!r}") from None
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r} must be one of {sorted(action.choices)}")
        action.required = False
    sub.set_defaults(**defaults)


def _load_graph(args):
    graph = load_edge_list(args.edges, directed=args.directed,
                           resolve_conflicts=args.resolve_conflicts)
    if getattr(args, "classes", None):
        graph = load_node_classes(args.classes, graph)
    return graph


def _walk_config(args) -> WalkConfig:
    return WalkConfig(args.walk_len, args.walks_per_node, args.path_len, args.seed)


def _train_config(args, checkpoint_path=None, **overrides) -> TrainConfig:
    walk = dict(walk_length=args.walk_len, walks_per_node=args.walks_per_node,
                path_len=args.path_len, seed=args.seed)
    walk.update({k: overrides.pop(k) for k in list(overrides) if k in walk})
    fields = dict(
        dim=args.dim, walk=WalkConfig(**walk), neg_samples=args.neg_samples,
        distribution=args.distribution, correction=not args.no_correction, lr=args.lr,
        epochs=args.epochs, seed=args.seed, unsigned_ablation=args.unsigned_ablation,
        shuffle=args.shuffle, workers=args.workers,
        checkpoint_every=args.checkpoint_every if checkpoint_path else 0,
        checkpoint_path=checkpoint_path if args.checkpoint_every else None,
    )
    fields.update(overrides)
    return TrainConfig(**fields)


def cmd_stats(args):
    print(degree_stats(_load_graph(args)))


def cmd_walk(args):
    graph = _load_graph(args)
    count = write_corpus(generate_samples(graph, _walk_config(args)), args.out)
    print(f"wrote {count} samples to {args.out}")


def cmd_train(args):
    graph = _load_graph(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.txt"
    cfg = _train_config(args, checkpoint_path=str(ckpt))
    model, report = train(graph, cfg, corpus=args.corpus, resume=args.resume)
    save_checkpoint(ckpt, model, report.optimizer, graph.labels,
                    dict(epoch=cfg.epochs, offset=0, loss_sum=0.0,
                         epoch_losses=report.epoch_losses, corpus_size=report.corpus_size,
                         final=True))
    write_embeddings(model, graph.labels, out / "embeddings.txt", args.mode)
    write_loss_csv(report, out / "loss.csv")
    print(f"trained on {report.samples_processed} samples; final mean nll "
          f"{report.epoch_losses[-1]:.6f}; wrote {out}")


def cmd_export(args):
    model, _, labels, _ = load_checkpoint(args.model)
    write_embeddings(model, labels, args.out, args.mode)
    print(f"wrote {args.out}")


def _representation_source(args, graph, **overrides):
    """Model or representation matrix aligned with ``graph`` node ids."""
    if args.model and args.embeddings:
        raise UsageError("give at most one of --model and --embeddings")
    if args.model:
        model, _, labels, _ = load_checkpoint(args.model)
        if labels != graph.labels:
            raise ValueError("checkpoint labels do not match the graph")
        return model
    if args.embeddings:
        labels, reps, mode = read_embeddings(args.embeddings)
        if mode.value != args.mode:
            raise ValueError(f"embedding file holds mode {mode.value!r}, not {args.mode!r}")
        row = {label: i for i, label in enumerate(labels)}
        missing = [l for l in graph.labels if l not in row]
        if missing:
            raise ValueError(f"embedding file lacks node {missing[0]!r}")
        return reps[[row[l] for l in graph.labels]]
    model, _ = train(graph, _train_config(args, **overrides), corpus=args.corpus)
    return model


def _evaluate(args, graph, source):
    if args.command == "eval-nodes" or getattr(args, "task", None) == "nodes":
        return evaluation.evaluate_node_classification(
            source, graph, args.mode, args.lam, args.seed, args.folds, args.iters)
    return evaluation.evaluate_link_prediction(
        source, graph, args.mode, args.op, args.lam, args.seed, args.folds, args.iters,
        subsample_negatives=args.subsample_negatives)


def cmd_eval(args):
    graph = _load_graph(args)
    if args.command == "eval-nodes" and not graph.node_classes:
        raise UsageError("eval-nodes needs --classes")
    report = _evaluate(args, graph, _representation_source(args, graph))
    if args.out:
        evaluation.write_eval_report(report, args.out)
        out = Path(args.out)
        evaluation.write_confusion_csv(report, out.with_name(out.stem + ".confusion.csv"))
    print(f"mean accuracy {report.mean_accuracy:.4f} over {len(report.fold_accuracies)} folds")


def cmd_sweep(args):
    graph = _load_graph(args)
    if args.task == "nodes" and not graph.node_classes:
        raise UsageError("--task nodes needs --classes")
    if args.model or args.embeddings:
        raise UsageError("sweep trains its own models; drop --model/--embeddings")
    field = SWEEP_PARAMS[args.param]
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated integers, got {args.values!r}") from None
    rows = []
    for value in values:
        source = _representation_source(args, graph, **{field: value})
        acc = _evaluate(args, graph, source).mean_accuracy
        rows.append((value, acc))
        print(f"{args.param}={value}: accuracy {acc:.4f}")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "accuracy"])
        writer.writerows((v, repr(a)) for v, a in rows)


def cmd_synth(args):
    graph = two_community_graph(args.n, args.p_in, args.p_out, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(graph, out / "edges.tsv", preserve_order=False)
    write_node_classes(graph, out / "classes.tsv")
    print(f"{degree_stats(graph)}; wrote {out}")


COMMANDS = {
    "stats": cmd_stats, "walk": cmd_walk, "train": cmd_train, "export": cmd_export,
    "eval-nodes": cmd_eval, "eval-links": cmd_eval, "sweep": cmd_sweep, "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    try:
        config = pre.parse_known_args(argv)[0].config
        if config:
            _apply_config(parser, argv, config)
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sne: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sne: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sne: error: {exc}", file=sys.stderr)
        return 2
    except (GraphFormatError, ValueError, OSError, KeyError) as exc:
        print(f"sne: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
