"""Experiment runner: dataset preparation, benchmark sweeps over topic
counts and seeds, hyperparameter search, extrinsic document classification,
and report emission."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .corpus import (
    BowVector,
    Corpus,
    CorpusError,
    Vocabulary,
    build_vocabulary,
    drop_empty_documents,
    fallback_embeddings,
    load_corpus,
    load_embeddings,
    to_bow,
)
from .metrics import MetricReport, evaluate_topics
from .model import CtmNegModel, ModelConfig

DEFAULT_TOPIC_COUNTS = (10, 20, 30, 40, 50, 60, 90, 120)


@dataclass
class Dataset:
    """A prepared corpus: vocabulary, BoW views, aligned embeddings."""

    name: str
    corpus: Corpus
    vocab: Vocabulary
    bows: list[BowVector]
    embeddings: np.ndarray | None

    def __len__(self) -> int:
        return len(self.corpus)

    def subset(self, indices: np.ndarray) -> "Dataset":
        docs = [self.corpus.documents[i] for i in indices]
        labels = (
            [self.corpus.labels[i] for i in indices]
            if self.corpus.labels is not None
            else None
        )
        return Dataset(
            name=self.name,
            corpus=Corpus(documents=docs, labels=labels),
            vocab=self.vocab,
            bows=[self.bows[i] for i in indices],
            embeddings=self.embeddings[indices] if self.embeddings is not None else None,
        )

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for doc in self.corpus.documents:
            h.update(" ".join(doc).encode("utf-8"))
            h.update(b"\n")
        h.update("\n".join(self.vocab.words).encode("utf-8"))
        if self.embeddings is not None:
            h.update(np.ascontiguousarray(self.embeddings, dtype="<f4").tobytes())
        return h.hexdigest()


def prepare_dataset(
    corpus_path: str,
    labels_path: str | None = None,
    embeddings_path: str | None = None,
    vocab_size: int = 2000,
    use_fallback_embeddings: bool = False,
    fallback_dim: int = 64,
    fallback_seed: int = 0,
    name: str | None = None,
) -> Dataset:
    """Load and align everything a model needs; documents emptied by
    vocabulary filtering are dropped together with their labels and
    embedding rows."""
    corpus = load_corpus(corpus_path, labels_path)
    vocab = build_vocabulary(corpus, max_size=vocab_size)
    embeddings = None
    if embeddings_path is not None:
        embeddings = load_embeddings(embeddings_path, expected_docs=len(corpus))
    corpus, embeddings = drop_empty_documents(corpus, vocab, embeddings)
    if embeddings is None and use_fallback_embeddings:
        embeddings = fallback_embeddings(
            corpus, vocab, dim=fallback_dim, seed=fallback_seed
        )
    bows = [to_bow(doc, vocab) for doc in corpus.documents]
    return Dataset(
        name=name or os.path.basename(corpus_path),
        corpus=corpus,
        vocab=vocab,
        bows=bows,
        embeddings=embeddings,
    )


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-cell seed from the master seed and cell coordinates."""
    key = "|".join(str(p) for p in (master_seed, *parts)).encode("utf-8")
    return int.from_bytes(
        hashlib.blake2b(key, digest_size=8).digest(), "little"
    ) % (2**31)


def train_model(dataset: Dataset, config: ModelConfig) -> CtmNegModel:
    model = CtmNegModel(config)
    model.fit(dataset.bows, dataset.embeddings if config.uses_context else None)
    return model


def evaluate_model(
    model: CtmNegModel, dataset: Dataset, top_k: int = 10
) -> MetricReport:
    topics = model.get_topics(dataset.vocab, k=top_k)
    return evaluate_topics(topics, dataset.corpus.documents, top_k=top_k)


# -- benchmark sweep -----------------------------------------------------


@dataclass
class ExperimentGrid:
    topic_counts: tuple[int, ...] = DEFAULT_TOPIC_COUNTS
    runs: int = 5
    modes: tuple[str, ...] = ("ctm_neg", "ctm", "prodlda")
    # per-topic-count (S, lambda) for ctm_neg; missing counts use the default
    hyperparams: dict[int, tuple[int, float]] = field(default_factory=dict)
    default_hyperparams: tuple[int, float] = (1, 0.5)
    epochs: int = 50
    master_seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if any(t < 2 for t in self.topic_counts):
            raise ValueError("topic counts must be >= 2")

    def cell_hyperparams(self, n_topics: int) -> tuple[int, float]:
        return self.hyperparams.get(n_topics, self.default_hyperparams)


@dataclass
class CellResult:
    mode: str
    n_topics: int
    run: int
    seed: int
    npmi: float = float("nan")
    cv: float = float("nan")
    irbo: float = float("nan")
    failed: bool = False
    error: str = ""


@dataclass
class BenchmarkReport:
    cells: list[CellResult]
    cell_medians: dict[tuple[str, int], dict[str, float]]
    aggregates: dict[str, dict[str, dict[str, float]]]


def _cell_cache_key(grid: ExperimentGrid, dataset_hash: str, cell: CellResult,
                    s: int, lam: float) -> str:
    key = "|".join(
        str(p)
        for p in (
            dataset_hash, cell.mode, cell.n_topics, cell.run, cell.seed,
            s, lam, grid.epochs,
        )
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def run_benchmark(
    grid: ExperimentGrid,
    dataset: Dataset,
    out_path: str | None = None,
    cache_dir: str | None = None,
) -> BenchmarkReport:
    """Train runs x |topic counts| x |modes| models with derived seeds,
    score each, and aggregate medians per cell and mean/median of the cell
    medians per mode. Failed cells are recorded and skipped in aggregation;
    completed cells are cached by content hash so a sweep is resumable."""
    dataset_hash = dataset.content_hash()
    if cache_dir is None and out_path is not None:
        cache_dir = out_path + ".cache"
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)

    cells: list[CellResult] = []
    for n_topics, mode, run in product(grid.topic_counts, grid.modes, range(grid.runs)):
        seed = derive_seed(grid.master_seed, dataset.name, n_topics, mode, run)
        cell = CellResult(mode=mode, n_topics=n_topics, run=run, seed=seed)
        s, lam = grid.cell_hyperparams(n_topics)
        if mode != "ctm_neg":
            lam = 0.0
        cache_file = None
        if cache_dir is not None:
            cache_file = os.path.join(
                cache_dir, _cell_cache_key(grid, dataset_hash, cell, s, lam) + ".json"
            )
            if os.path.exists(cache_file):
                with open(cache_file, encoding="utf-8") as fh:
                    cached = json.load(fh)
                cell.npmi, cell.cv, cell.irbo = (
                    cached["npmi"], cached["cv"], cached["irbo"],
                )
                cell.failed = cached["failed"]
                cell.error = cached.get("error", "")
                cells.append(cell)
                continue
        try:
            config = ModelConfig(
                n_topics=n_topics,
                vocab_size=dataset.vocab.size,
                context_dim=(
                    dataset.embeddings.shape[1]
                    if mode != "prodlda" and dataset.embeddings is not None
                    else 0
                ),
                perturb_top_s=min(s, n_topics - 1),
                triplet_weight=lam,
                epochs=grid.epochs,
                seed=seed,
                mode=mode,
            )
            model = train_model(dataset, config)
            report = evaluate_model(model, dataset)
            cell.npmi = report.mean_npmi
            cell.cv = report.mean_cv
            cell.irbo = report.irbo
        except Exception as exc:  # record and continue: one bad cell must not kill the sweep
            cell.failed = True
            cell.error = f"{type(exc).__name__}: {exc}"
        cells.append(cell)
        if cache_file is not None:
            with open(cache_file, "w", encoding="utf-8") as fh:
                json.dump(
                    {
                        "npmi": cell.npmi, "cv": cell.cv, "irbo": cell.irbo,
                        "failed": cell.failed, "error": cell.error,
                    },
                    fh,
                )

    report = _aggregate(grid, cells)
    if out_path is not None:
        emit_report(report, out_path, fmt="csv")
        emit_report(report, out_path + ".md", fmt="markdown")
    return report


def _aggregate(grid: ExperimentGrid, cells: list[CellResult]) -> BenchmarkReport:
    cell_medians: dict[tuple[str, int], dict[str, float]] = {}
    for mode in grid.modes:
        for n_topics in grid.topic_counts:
            ok = [
                c for c in cells
                if c.mode == mode and c.n_topics == n_topics and not c.failed
            ]
            if not ok:
                continue
            cell_medians[(mode, n_topics)] = {
                "npmi": float(np.median([c.npmi for c in ok])),
                "cv": float(np.median([c.cv for c in ok])),
                "irbo": float(np.median([c.irbo for c in ok])),
            }
    aggregates: dict[str, dict[str, dict[str, float]]] = {}
    for mode in grid.modes:
        mode_cells = [
            cell_medians[(mode, t)]
            for t in grid.topic_counts
            if (mode, t) in cell_medians
        ]
        if not mode_cells:
            continue
        aggregates[mode] = {
            metric: {
                "mean": float(np.mean([m[metric] for m in mode_cells])),
                "median": float(np.median([m[metric] for m in mode_cells])),
            }
            for metric in ("npmi", "cv", "irbo")
        }
    return BenchmarkReport(
        cells=cells, cell_medians=cell_medians, aggregates=aggregates
    )


def emit_report(report: BenchmarkReport, path: str, fmt: str = "csv") -> None:
    """Write per-cell rows (csv) or the mean/median summary table (markdown)."""
    if fmt == "csv":
        lines = ["model,T,seed,NPMI,CV,IRBO"]
        for c in report.cells:
            if c.failed:
                lines.append(f"{c.mode},{c.n_topics},{c.seed},,,")
            else:
                lines.append(
                    f"{c.mode},{c.n_topics},{c.seed},"
                    f"{c.npmi:.6f},{c.cv:.6f},{c.irbo:.6f}"
                )
        text = "\n".join(lines) + "\n"
    elif fmt == "markdown":
        lines = [
            "| Model | NPMI Mean | NPMI Median | CV Mean | CV Median "
            "| IRBO Mean | IRBO Median |",
            "|---|---|---|---|---|---|---|",
        ]
        for mode, agg in report.aggregates.items():
            lines.append(
                f"| {mode} "
                f"| {agg['npmi']['mean']:.3f} | {agg['npmi']['median']:.3f} "
                f"| {agg['cv']['mean']:.3f} | {agg['cv']['median']:.3f} "
                f"| {agg['irbo']['mean']:.3f} | {agg['irbo']['median']:.3f} |"
            )
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- hyperparameter search -------------------------------------------------


def hyperparam_search(
    dataset: Dataset,
    n_topics: int,
    s_grid: tuple[int, ...] = (1, 2, 3),
    budget: int = 9,
    epochs: int = 50,
    seed: int = 0,
    dev_fraction: float = 0.15,
) -> tuple[int, float]:
    """Seeded grid/random search over (S, lambda): S from the grid, lambda
    sampled uniformly from [0, 1]. Trains on a train split and picks the
    configuration with the best topic NPMI on the dev split."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_dev = max(1, int(dev_fraction * len(dataset)))
    dev = dataset.subset(order[:n_dev])
    train = dataset.subset(order[n_dev:])

    n_lambda = -(-budget // len(s_grid))  # ceil
    candidates = [
        (s, float(lam))
        for lam in rng.uniform(0.0, 1.0, size=n_lambda)
        for s in s_grid
    ][:budget]

    best: tuple[float, int, float] | None = None
    for s, lam in candidates:
        config = ModelConfig(
            n_topics=n_topics,
            vocab_size=dataset.vocab.size,
            context_dim=(
                dataset.embeddings.shape[1] if dataset.embeddings is not None else 0
            ),
            perturb_top_s=min(s, n_topics - 1),
            triplet_weight=lam,
            epochs=epochs,
            seed=derive_seed(seed, "search", s, lam),
            mode="ctm_neg" if dataset.embeddings is not None else "prodlda",
        )
        model = train_model(train, config)
        topics = model.get_topics(dataset.vocab)
        score = evaluate_topics(topics, dev.corpus.documents).mean_npmi
        if best is None or score > best[0]:
            best = (score, s, lam)
    return best[1], best[2]


# -- extrinsic classification ------------------------------------------------


@dataclass
class ClassifierConfig:
    learning_rate: float = 0.05
    l2: float = 1e-4
    epochs: int = 200
    seed: int = 0


@dataclass
class LinearClassifier:
    classes: list[str]
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    loss_history: list[float] = field(default_factory=list)

    def predict(self, features: np.ndarray) -> list[str]:
        scores = features @ self.weights.T + self.bias
        return [self.classes[i] for i in scores.argmax(axis=1)]


def train_classifier(
    features: np.ndarray, labels: list[str], config: ClassifierConfig | None = None
) -> LinearClassifier:
    """One-vs-rest linear SVM trained by full-batch hinge-loss subgradient
    descent with L2 regularization."""
    config = config or ClassifierConfig()
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise CorpusError("classification needs at least 2 classes in train")
    features = np.asarray(features, dtype=np.float64)
    n, d = features.shape
    targets = np.full((n, len(classes)), -1.0)
    class_index = {c: i for i, c in enumerate(classes)}
    for row, label in enumerate(labels):
        targets[row, class_index[label]] = 1.0

    rng = np.random.default_rng(config.seed)
    weights = rng.normal(scale=0.01, size=(len(classes), d))
    bias = np.zeros(len(classes))
    clf = LinearClassifier(classes=classes, weights=weights, bias=bias)
    for _ in range(config.epochs):
        scores = features @ weights.T + bias
        margins = targets * scores
        active = (margins < 1.0).astype(np.float64)
        hinge = np.maximum(0.0, 1.0 - margins)
        loss = hinge.mean() + 0.5 * config.l2 * float((weights**2).sum())
        clf.loss_history.append(loss)
        grad_scores = -(active * targets) / n
        grad_w = grad_scores.T @ features + config.l2 * weights
        grad_b = grad_scores.sum(axis=0)
        weights -= config.learning_rate * grad_w
        bias -= config.learning_rate * grad_b
    clf.weights = weights
    clf.bias = bias
    return clf


def classify(
    train_features: np.ndarray,
    train_labels: list[str],
    test_features: np.ndarray,
    test_labels: list[str],
    config: ClassifierConfig | None = None,
) -> float:
    """Train on theta-features and report test accuracy. Classes unseen in
    train are still scored (and necessarily counted wrong)."""
    clf = train_classifier(train_features, train_labels, config)
    predictions = clf.predict(np.asarray(test_features, dtype=np.float64))
    correct = sum(p == t for p, t in zip(predictions, test_labels))
    return correct / len(test_labels)
