"""Corpus ingestion: pre-tokenized text loading, vocabulary construction,
bag-of-words views, train/dev/test splitting, and the binary context-embedding
file format (CTXE)."""

from __future__ import annotations

import struct
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


class CorpusError(ValueError):
    """Malformed or inconsistent input data."""


EMBEDDING_MAGIC = b"CTXE"
EMBEDDING_VERSION = 1


@dataclass
class Corpus:
    documents: list[list[str]]
    labels: list[str] | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.documents):
            raise CorpusError(
                f"label/document count mismatch: {len(self.labels)} labels "
                f"for {len(self.documents)} documents"
            )

    def __len__(self) -> int:
        return len(self.documents)


@dataclass
class Vocabulary:
    words: list[str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise CorpusError("vocabulary contains duplicate words")

    @property
    def size(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass
class BowVector:
    counts: dict[int, int]
    l1_normalized: np.ndarray

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def dense_counts(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        for i, c in self.counts.items():
            out[i] = c
        return out


@dataclass
class SplitSpec:
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        if any(r <= 0 for r in self.ratios):
            raise CorpusError("split ratios must be positive")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise CorpusError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def load_corpus(path: str, labels_path: str | None = None) -> Corpus:
    """Read a corpus file: one document per line, whitespace-separated tokens."""
    with open(path, encoding="utf-8") as fh:
        documents = [line.split() for line in fh.read().splitlines()]
    labels = None
    if labels_path is not None:
        with open(labels_path, encoding="utf-8") as fh:
            labels = [line.strip() for line in fh.read().splitlines()]
        if len(labels) != len(documents):
            raise CorpusError(
                f"label/document count mismatch: {len(labels)} labels "
                f"for {len(documents)} documents"
            )
    return Corpus(documents=documents, labels=labels)


def build_vocabulary(corpus: Corpus, max_size: int = 2000) -> Vocabulary:
    """Keep the `max_size` most frequent tokens; ties broken lexicographically."""
    if max_size < 1:
        raise CorpusError("max_size must be >= 1")
    freq = Counter()
    for doc in corpus.documents:
        freq.update(doc)
    if not freq:
        raise CorpusError("corpus has zero tokens")
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(words=[w for w, _ in ranked[:max_size]])


def to_bow(document: list[str], vocab: Vocabulary) -> BowVector:
    """Count in-vocabulary tokens and produce the L1-normalized dense view."""
    counts: dict[int, int] = {}
    for token in document:
        idx = vocab.index.get(token)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    total = sum(counts.values())
    if total == 0:
        raise CorpusError("document is empty after vocabulary filtering")
    dense = np.zeros(vocab.size)
    for i, c in counts.items():
        dense[i] = c / total
    return BowVector(counts=counts, l1_normalized=dense)


def drop_empty_documents(
    corpus: Corpus,
    vocab: Vocabulary,
    embeddings: np.ndarray | None = None,
) -> tuple[Corpus, np.ndarray | None]:
    """Drop documents with no in-vocabulary tokens, keeping labels and
    embedding rows aligned. Warns once if anything is dropped."""
    keep = [
        i for i, doc in enumerate(corpus.documents)
        if any(t in vocab.index for t in doc)
    ]
    dropped = len(corpus.documents) - len(keep)
    if dropped:
        warnings.warn(f"dropped {dropped} documents empty after vocabulary filtering")
    docs = [corpus.documents[i] for i in keep]
    labels = [corpus.labels[i] for i in keep] if corpus.labels is not None else None
    emb = embeddings[keep] if embeddings is not None else None
    return Corpus(documents=docs, labels=labels), emb


def split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic shuffle by seed, then contiguous slicing. Sizes are
    floor(ratio * N) with the remainder going to train."""
    n = len(corpus)
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(n)
    n_dev = int(spec.ratios[1] * n)
    n_test = int(spec.ratios[2] * n)
    n_train = n - n_dev - n_test
    if n_train < 1 or n_dev < 1 or n_test < 1:
        raise CorpusError(f"corpus of {n} documents is too small to split")
    parts = (
        order[:n_train],
        order[n_train:n_train + n_dev],
        order[n_train + n_dev:],
    )

    def take(idx):
        docs = [corpus.documents[i] for i in idx]
        labels = (
            [corpus.labels[i] for i in idx] if corpus.labels is not None else None
        )
        return Corpus(documents=docs, labels=labels)

    return tuple(take(idx) for idx in parts)


def write_embeddings(path: str, matrix: np.ndarray) -> None:
    """Write an (n_docs, dim) matrix in the CTXE binary format."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise CorpusError("embedding matrix must be 2-dimensional")
    n_docs, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<IQI", EMBEDDING_VERSION, n_docs, dim))
        fh.write(matrix.tobytes())


def load_embeddings(path: str, expected_docs: int | None = None) -> np.ndarray:
    """Read a CTXE file back to an (n_docs, dim) float32 matrix."""
    with open(path, "rb") as fh:
        payload = fh.read()
    header_len = 4 + struct.calcsize("<IQI")
    if len(payload) < header_len or payload[:4] != EMBEDDING_MAGIC:
        raise CorpusError(f"{path}: not a CTXE embedding file (bad magic)")
    version, n_docs, dim = struct.unpack("<IQI", payload[4:header_len])
    if version != EMBEDDING_VERSION:
        raise CorpusError(f"{path}: unsupported CTXE version {version}")
    expected_bytes = header_len + n_docs * dim * 4
    if len(payload) != expected_bytes:
        raise CorpusError(
            f"{path}: truncated or oversized payload "
            f"({len(payload)} bytes, expected {expected_bytes})"
        )
    if expected_docs is not None and n_docs != expected_docs:
        raise CorpusError(
            f"{path}: embedding rows ({n_docs}) do not match document count "
            f"({expected_docs})"
        )
    matrix = np.frombuffer(payload[header_len:], dtype="<f4").reshape(n_docs, dim)
    if not np.all(np.isfinite(matrix)):
        raise CorpusError(f"{path}: embeddings contain non-finite values")
    return matrix


def fallback_embeddings(
    corpus: Corpus, vocab: Vocabulary, dim: int = 64, seed: int = 0
) -> np.ndarray:
    """Deterministic pseudo-embeddings: a seeded random projection of each
    document's L1-normalized BoW vector. Stands in for a real contextual
    encoder so the pipeline runs self-contained."""
    if dim < 1:
        raise CorpusError("embedding dim must be >= 1")
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((vocab.size, dim))
    rows = [to_bow(doc, vocab).l1_normalized @ projection for doc in corpus.documents]
    return np.asarray(rows)
