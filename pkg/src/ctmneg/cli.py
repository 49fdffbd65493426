"""Command-line interface.

Subcommands: train, topics, eval, benchmark, search, classify. Every flag
can also be given in a key=value config file (--config); explicit flags
override the file. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .autodiff import NumericsError
from .corpus import CorpusError, SplitSpec
from .harness import (
    DEFAULT_TOPIC_COUNTS,
    ClassifierConfig,
    ExperimentGrid,
    classify as run_classify,
    hyperparam_search,
    prepare_dataset,
    run_benchmark,
    train_model,
)
from .metrics import evaluate_topics
from .model import CtmNegModel, ModelConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CorpusError(f"{path}: bad config line {line!r}")
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
        return values
    except OSError as exc:
        raise CorpusError(f"cannot read config file: {exc}") from exc


def _add_dataset_flags(p: argparse.ArgumentParser, labels: bool = False):
    p.add_argument("--corpus", required=True, help="one document per line, tokens whitespace-separated")
    if labels:
        p.add_argument("--labels", required=True, help="one label per line")
    p.add_argument("--embeddings", default=None, help="CTXE embedding file")
    p.add_argument("--fallback-embeddings", action="store_true",
                   help="use seeded random-projection pseudo-embeddings")
    p.add_argument("--fallback-dim", type=int, default=64)
    p.add_argument("--fallback-seed", type=int, default=0)
    p.add_argument("--vocab-size", type=int, default=2000)


def build_parser() -> _Parser:
    parser = _Parser(prog="ctmneg", description=__doc__)
    parser.add_argument("--config", default=None, help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub

    p = sub.add_parser("train", parents=[], help="train a topic model")
    _add_dataset_flags(p)
    p.add_argument("--topics", type=int, required=True)
    p.add_argument("--s", type=int, default=1, help="number of top topics to perturb")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="triplet loss weight")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("ctm_neg", "ctm", "prodlda"), default="ctm_neg")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--loss-trace", default=None, help="per-epoch loss CSV")

    p = sub.add_parser("topics", help="print top words per topic")
    p.add_argument("--model", required=True)
    p.add_argument("--top-k", type=int, default=10)

    p = sub.add_parser("eval", help="score a model's topics on a corpus")
    _add_dataset_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--metrics", default="npmi,cv,irbo")
    p.add_argument("--top-k", type=int, default=10)

    p = sub.add_parser("benchmark", help="sweep topic counts x modes x runs")
    _add_dataset_flags(p)
    p.add_argument("--grid", default="default",
                   help="'default' or comma-separated topic counts")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--modes", default="ctm_neg,ctm,prodlda")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report CSV path")

    p = sub.add_parser("search", help="grid/random search over (S, lambda)")
    _add_dataset_flags(p)
    p.add_argument("--topics", type=int, required=True)
    p.add_argument("--budget", type=int, default=9)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("classify", help="document classification from theta features")
    _add_dataset_flags(p, labels=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split-seed", type=int, default=0)

    return parser


def _dataset_from_args(args, vocab=None):
    return prepare_dataset(
        args.corpus,
        labels_path=getattr(args, "labels", None),
        embeddings_path=args.embeddings,
        vocab_size=args.vocab_size,
        use_fallback_embeddings=args.fallback_embeddings,
        fallback_dim=args.fallback_dim,
        fallback_seed=args.fallback_seed,
    )


def _cmd_train(args) -> int:
    dataset = _dataset_from_args(args)
    if args.mode != "prodlda" and dataset.embeddings is None:
        raise CorpusError(
            "mode requires --embeddings or --fallback-embeddings"
        )
    config = ModelConfig(
        n_topics=args.topics,
        vocab_size=dataset.vocab.size,
        context_dim=(
            dataset.embeddings.shape[1] if args.mode != "prodlda" else 0
        ),
        perturb_top_s=args.s,
        triplet_weight=args.lam if args.mode == "ctm_neg" else 0.0,
        margin=args.margin,
        epochs=args.epochs,
        seed=args.seed,
        mode=args.mode,
    )
    model = train_model(dataset, config)
    model.save(args.out, dataset.vocab)
    if args.loss_trace:
        model.write_loss_trace(args.loss_trace)
    final = model.loss_trace[-1]
    print(
        f"trained {args.mode} T={args.topics} epochs={args.epochs} "
        f"final_loss={final.total:.4f} -> {args.out}"
    )
    return EXIT_OK


def _cmd_topics(args) -> int:
    model, vocab = CtmNegModel.load(args.model)
    for i, topic in enumerate(model.get_topics(vocab, k=args.top_k)):
        print(f"topic {i}: {' '.join(topic)}")
    return EXIT_OK


def _model_features(model: CtmNegModel, vocab, dataset):
    from .corpus import to_bow

    bow = np.stack(
        [to_bow(doc, vocab).l1_normalized for doc in dataset.corpus.documents]
    )
    ctx = dataset.embeddings if model.config.uses_context else None
    if model.config.uses_context and ctx is None:
        raise CorpusError("model needs context embeddings; pass --embeddings "
                          "or --fallback-embeddings")
    return model.infer_theta(bow, ctx)


def _cmd_eval(args) -> int:
    model, vocab = CtmNegModel.load(args.model)
    dataset = _dataset_from_args(args)
    topics = model.get_topics(vocab, k=args.top_k)
    report = evaluate_topics(topics, dataset.corpus.documents, top_k=args.top_k)
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    values = {"npmi": report.mean_npmi, "cv": report.mean_cv, "irbo": report.irbo}
    for name in wanted:
        if name not in values:
            raise CorpusError(f"unknown metric {name!r}")
        print(f"{name}={values[name]:.6f}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    dataset = _dataset_from_args(args)
    if args.grid == "default":
        topic_counts = DEFAULT_TOPIC_COUNTS
    else:
        topic_counts = tuple(int(t) for t in args.grid.split(","))
    grid = ExperimentGrid(
        topic_counts=topic_counts,
        runs=args.runs,
        modes=tuple(m.strip() for m in args.modes.split(",")),
        default_hyperparams=(args.s, args.lam),
        epochs=args.epochs,
        master_seed=args.master_seed,
    )
    report = run_benchmark(grid, dataset, out_path=args.out)
    for mode, agg in report.aggregates.items():
        print(
            f"{mode}: NPMI mean={agg['npmi']['mean']:.4f} "
            f"median={agg['npmi']['median']:.4f} "
            f"IRBO mean={agg['irbo']['mean']:.4f}"
        )
    print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_search(args) -> int:
    dataset = _dataset_from_args(args)
    if dataset.embeddings is None:
        raise CorpusError("search requires --embeddings or --fallback-embeddings")
    s, lam = hyperparam_search(
        dataset, args.topics, budget=args.budget, epochs=args.epochs, seed=args.seed
    )
    print(f"best S={s} lambda={lam:.4f}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    model, vocab = CtmNegModel.load(args.model)
    dataset = _dataset_from_args(args)
    if dataset.corpus.labels is None:
        raise CorpusError("classification requires --labels")
    features = _model_features(model, vocab, dataset)
    n = len(dataset)
    rng = np.random.default_rng(SplitSpec(seed=args.split_seed).seed)
    order = rng.permutation(n)
    n_dev = int(0.15 * n)
    n_test = int(0.15 * n)
    n_train = n - n_dev - n_test
    train_idx = order[:n_train]
    test_idx = order[n_train + n_dev:]
    labels = dataset.corpus.labels
    accuracy = run_classify(
        features[train_idx],
        [labels[i] for i in train_idx],
        features[test_idx],
        [labels[i] for i in test_idx],
        ClassifierConfig(seed=args.split_seed),
    )
    print(f"accuracy={accuracy:.4f}")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "topics": _cmd_topics,
    "eval": _cmd_eval,
    "benchmark": _cmd_benchmark,
    "search": _cmd_search,
    "classify": _cmd_classify,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # config file values act as defaults; explicit flags win
    if "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
        except IndexError:
            parser.error("--config requires a path")
        try:
            config = _load_config_file(cfg_path)
        except CorpusError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        parser.set_defaults(**config)
        # a config-supplied value satisfies a required flag
        for sub in parser.subcommands.choices.values():
            sub.set_defaults(**config)
            for action in sub._actions:
                if action.dest in config:
                    action.required = False
    args = parser.parse_args(argv)
    # config-file values arrive as strings; coerce the numeric ones
    for attr in ("topics", "s", "epochs", "seed", "runs", "budget", "top_k",
                 "vocab_size", "master_seed", "split_seed", "fallback_dim",
                 "fallback_seed"):
        if hasattr(args, attr) and isinstance(getattr(args, attr), str):
            setattr(args, attr, int(getattr(args, attr)))
    for attr in ("lam", "margin"):
        if hasattr(args, attr) and isinstance(getattr(args, attr), str):
            setattr(args, attr, float(getattr(args, attr)))
    if hasattr(args, "fallback_embeddings") and isinstance(
        args.fallback_embeddings, str
    ):
        args.fallback_embeddings = args.fallback_embeddings.lower() in (
            "1", "true", "yes",
        )
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
