"""Synthetic corpus generation with planted topic structure, for smoke
tests, benchmarks, and runnable examples that need no external data."""

from __future__ import annotations

import numpy as np

from .corpus import Corpus


def make_topic_corpus(
    n_docs: int,
    vocab_size: int,
    n_topics: int,
    seed: int = 0,
    doc_len: tuple[int, int] = (40, 80),
    labeled: bool = False,
    background_vocab_frac: float = 0.0,
    background_mass: float = 0.0,
) -> Corpus:
    """Synthetic corpus with planted topic structure: the vocabulary is cut
    into per-topic word blocks with Zipf-like within-block frequencies, and
    each document mixes one dominant and one minor topic.

    `background_vocab_frac` reserves that fraction of the vocabulary (the
    highest word ids) as topic-free background words, and `background_mass`
    is the share of each document's tokens drawn from them. Background words
    co-occur with everything, so they dilute topic coherence the way
    high-frequency function words do in real corpora."""
    if not 0.0 <= background_mass < 1.0 or not 0.0 <= background_vocab_frac < 1.0:
        raise ValueError("background fractions must be in [0, 1)")
    rng = np.random.default_rng(seed)
    words = [f"w{i:04d}" for i in range(vocab_size)]
    n_background = int(vocab_size * background_vocab_frac)
    n_topical = vocab_size - n_background
    block = n_topical // n_topics
    zipf = 1.0 / np.arange(1, block + 1)
    topic_dists = []
    for t in range(n_topics):
        probs = np.zeros(vocab_size)
        probs[t * block:(t + 1) * block] = zipf
        topic_dists.append(probs / probs.sum())
    background = np.zeros(vocab_size)
    if n_background:
        background[n_topical:] = 1.0 / np.arange(1, n_background + 1)
        background /= background.sum()
    docs, labels = [], []
    for _ in range(n_docs):
        main = int(rng.integers(n_topics))
        minor = int(rng.integers(n_topics))
        topical = 0.85 * topic_dists[main] + 0.15 * topic_dists[minor]
        mix = (1.0 - background_mass) * topical + background_mass * background
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        idx = rng.choice(vocab_size, size=length, p=mix)
        docs.append([words[i] for i in idx])
        labels.append(f"class{main}")
    return Corpus(documents=docs, labels=labels if labeled else None)
