"""Corpus-to-embedding extraction and the CTXE binary writer."""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

DEFAULT_MODEL = "paraphrase-distilroberta-base-v2"
MAGIC = b"CTXE"
VERSION = 1

Encoder = Callable[[list[str]], np.ndarray]


class ExtractionError(RuntimeError):
    """Unusable input, encoder failure, or output write failure."""


class _RevisionAware(Protocol):
    revision: str


@dataclass(frozen=True)
class EmbedJob:
    corpus_path: str
    out_path: str
    model_name: str = DEFAULT_MODEL
    batch_size: int = 32

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExtractionError("batch size must be >= 1")


def _read_documents(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            docs = [line.rstrip("\n") for line in fh]
    except OSError as exc:
        raise ExtractionError(f"cannot read corpus: {exc}") from exc
    if not docs:
        raise ExtractionError(f"{path}: corpus is empty")
    return docs


def deterministic_encoder(dim: int = 768) -> Encoder:
    """Offline encoder: each document maps to a fixed pseudo-random vector
    seeded from a hash of its text, so equal inputs always produce equal
    bytes. Useful for tests and for exercising the pipeline without the
    real checkpoint."""

    def encode(texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), dim), dtype=np.float32)
        for i, text in enumerate(texts):
            digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            rows[i] = rng.standard_normal(dim, dtype=np.float32)
        return rows

    encode.revision = "deterministic-stub"
    return encode


def load_transformer_encoder(model_name: str = DEFAULT_MODEL) -> Encoder:
    """Wrap a sentence-transformers checkpoint as an encoder callable. The
    resolved checkpoint revision (commit hash when available, else the
    library version) is exposed on the callable for provenance."""
    try:
        from sentence_transformers import SentenceTransformer, __version__
    except ImportError as exc:
        raise ExtractionError(
            "sentence-transformers is not installed; install the 'model' "
            "extra or supply an encoder"
        ) from exc
    try:
        model = SentenceTransformer(model_name)
    except Exception as exc:
        raise ExtractionError(
            f"cannot load checkpoint {model_name!r}: {exc}"
        ) from exc

    def encode(texts: list[str]) -> np.ndarray:
        return np.asarray(
            model.encode(texts, show_progress_bar=False, convert_to_numpy=True),
            dtype=np.float32,
        )

    commit = getattr(getattr(model, "model_card_data", None), "base_model_revision", None)
    encode.revision = commit or f"sentence-transformers=={__version__}"
    return encode


def _encode_corpus(docs: list[str], encoder: Encoder, batch_size: int) -> np.ndarray:
    batches = []
    for start in range(0, len(docs), batch_size):
        batch = np.asarray(encoder(docs[start:start + batch_size]), dtype="<f4")
        if batch.ndim != 2 or batch.shape[0] != len(docs[start:start + batch_size]):
            raise ExtractionError(
                f"encoder returned shape {batch.shape} for a batch of "
                f"{len(docs[start:start + batch_size])} documents"
            )
        batches.append(batch)
    matrix = np.vstack(batches)
    if not np.all(np.isfinite(matrix)):
        raise ExtractionError("encoder produced non-finite values")
    return matrix


def _write_ctxe_atomic(path: str, matrix: np.ndarray) -> None:
    """Write header + payload to a temp file in the target directory, then
    rename into place so a reader never sees a partial file."""
    n_docs, dim = matrix.shape
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".ctxe.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IQI", VERSION, n_docs, dim))
            fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
        os.replace(tmp_path, path)
    except OSError as exc:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise ExtractionError(f"cannot write output: {exc}") from exc


def extract_embeddings(job: EmbedJob, encoder: Encoder | None = None) -> np.ndarray:
    """Encode every corpus line and write the CTXE file plus a ``.revision``
    sidecar recording which checkpoint produced it. Returns the matrix."""
    docs = _read_documents(job.corpus_path)
    if encoder is None:
        encoder = load_transformer_encoder(job.model_name)
    matrix = _encode_corpus(docs, encoder, job.batch_size)
    _write_ctxe_atomic(job.out_path, matrix)
    revision = getattr(encoder, "revision", "unknown")
    with open(job.out_path + ".revision", "w", encoding="utf-8") as fh:
        fh.write(f"model={job.model_name}\nrevision={revision}\n")
    return matrix
