"""Encode each line of a corpus file with a sentence encoder and write the
result as a CTXE binary embedding file (magic ``CTXE``, u32 version, u64 row
count, u32 dim, float32 little-endian row-major payload).

The encoder is injectable: any callable mapping a list of strings to a 2-D
float array works. The default loads a sentence-transformers checkpoint;
:func:`deterministic_encoder` provides a fully offline stand-in.
"""

from .extract import (
    DEFAULT_MODEL,
    EmbedJob,
    ExtractionError,
    deterministic_encoder,
    extract_embeddings,
    load_transformer_encoder,
)

__all__ = [
    "DEFAULT_MODEL",
    "EmbedJob",
    "ExtractionError",
    "deterministic_encoder",
    "extract_embeddings",
    "load_transformer_encoder",
]
