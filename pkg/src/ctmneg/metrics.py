"""Topic-quality metrics: boolean sliding-window co-occurrence statistics,
NPMI and CV coherence, and rank-biased-overlap-based topic diversity."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

NPMI_WINDOW = 10
CV_WINDOW = 110
RBO_PERSISTENCE = 0.9
TOP_K = 10
SMOOTHING_EPS = 1e-12


@dataclass
class CooccurrenceStats:
    window: int
    n_windows: int
    word_counts: dict[str, int]
    pair_counts: dict[tuple[str, str], int]
    eps: float = SMOOTHING_EPS

    def p_word(self, w: str) -> float:
        if w not in self.word_counts:
            raise KeyError(f"word {w!r} absent from reference corpus")
        return self.word_counts[w] / self.n_windows

    def p_pair(self, wi: str, wj: str) -> float:
        key = (wi, wj) if wi <= wj else (wj, wi)
        return self.pair_counts.get(key, 0) / self.n_windows


@dataclass
class MetricReport:
    per_topic_npmi: list[float] = field(default_factory=list)
    per_topic_cv: list[float] = field(default_factory=list)
    mean_npmi: float = float("nan")
    mean_cv: float = float("nan")
    irbo: float = float("nan")


def cooccurrence_counts(
    documents: list[list[str]],
    window: int,
    restrict_to: set[str] | None = None,
) -> CooccurrenceStats:
    """Count boolean co-occurrences over consecutive token windows. Each
    document contributes max(1, len - window + 1) virtual documents; a
    document shorter than the window yields exactly one.

    `restrict_to` limits counting to the given words (the evaluation only
    ever needs topic words; counting all V^2 pairs would be wasteful)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if not documents:
        raise ValueError("reference corpus is empty")
    word_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    n_windows = 0
    for doc in documents:
        n_virtual = max(1, len(doc) - window + 1)
        n_windows += n_virtual
        for start in range(n_virtual):
            tokens = doc[start:start + window]
            if restrict_to is not None:
                present = sorted({t for t in tokens if t in restrict_to})
            else:
                present = sorted(set(tokens))
            for w in present:
                word_counts[w] = word_counts.get(w, 0) + 1
            for pair in combinations(present, 2):
                pair_counts[pair] = pair_counts.get(pair, 0) + 1
    return CooccurrenceStats(
        window=window,
        n_windows=n_windows,
        word_counts=word_counts,
        pair_counts=pair_counts,
    )


def npmi_pair(stats: CooccurrenceStats, wi: str, wj: str) -> float:
    """Normalized pointwise mutual information of one word pair, with the
    smoothing constant inside both logarithms."""
    p_i = stats.p_word(wi)
    p_j = stats.p_word(wj)
    p_ij = stats.p_pair(wi, wj)
    numerator = np.log((p_ij + stats.eps) / (p_i * p_j))
    denominator = -np.log(p_ij + stats.eps)
    if abs(denominator) < 1e-300:
        return 0.0
    return float(numerator / denominator)


def topic_npmi(stats: CooccurrenceStats, topic: list[str]) -> float:
    """Mean NPMI over all unordered pairs of topic words."""
    usable = [w for w in topic if w in stats.word_counts]
    if len(usable) < 2:
        raise ValueError("topic has fewer than 2 words present in the reference")
    pairs = list(combinations(usable, 2))
    return float(np.mean([npmi_pair(stats, a, b) for a, b in pairs]))


def cv_score(stats: CooccurrenceStats, topic: list[str]) -> float:
    """One-set-segmentation CV: cosine similarity between each word's NPMI
    context vector and the topic's summed context vector. Self-pairs count
    as +1; an all-zero vector scores 0."""
    usable = [w for w in topic if w in stats.word_counts]
    if len(usable) < 2:
        raise ValueError("topic has fewer than 2 words present in the reference")
    k = len(usable)
    vectors = np.empty((k, k))
    for i, wi in enumerate(usable):
        for j, wj in enumerate(usable):
            vectors[i, j] = 1.0 if i == j else npmi_pair(stats, wi, wj)
    v_total = vectors.sum(axis=0)
    sims = []
    for i in range(k):
        norm_i = np.linalg.norm(vectors[i])
        norm_t = np.linalg.norm(v_total)
        if norm_i == 0.0 or norm_t == 0.0:
            sims.append(0.0)
        else:
            sims.append(float(vectors[i] @ v_total / (norm_i * norm_t)))
    return float(np.mean(sims))


def rbo(
    l1: list[str],
    l2: list[str],
    p: float = RBO_PERSISTENCE,
    k: int = TOP_K,
) -> float:
    """Extrapolated truncated rank-biased overlap:
    (1-p) * sum_{d<=k} p^(d-1) * A_d + p^k * A_k, with A_d the overlap of
    the depth-d prefixes divided by d. Shorter lists are evaluated to their
    length; identical lists score exactly 1."""
    if not 0 < p < 1:
        raise ValueError("persistence must be in (0, 1)")
    depth = min(k, len(l1), len(l2))
    if depth == 0:
        return 0.0
    seen1: set[str] = set()
    seen2: set[str] = set()
    overlap = 0
    total = 0.0
    agreement = 0.0
    for d in range(1, depth + 1):
        a, b = l1[d - 1], l2[d - 1]
        if a == b:
            overlap += 1
        else:
            if a in seen2:
                overlap += 1
            if b in seen1:
                overlap += 1
            seen1.add(a)
            seen2.add(b)
        agreement = overlap / d
        total += (1 - p) * p ** (d - 1) * agreement
    return total + p**depth * agreement


def irbo(
    topics: list[list[str]],
    p: float = RBO_PERSISTENCE,
    k: int = TOP_K,
) -> float:
    """1 minus the mean pairwise RBO over all topic pairs: 0 for identical
    topics, 1 for completely dissimilar ones."""
    if len(topics) < 2:
        raise ValueError("IRBO needs at least 2 topics")
    scores = [rbo(a, b, p=p, k=k) for a, b in combinations(topics, 2)]
    return 1.0 - float(np.mean(scores))


def evaluate_topics(
    topics: list[list[str]],
    reference_docs: list[list[str]],
    npmi_window: int = NPMI_WINDOW,
    cv_window: int = CV_WINDOW,
    rbo_p: float = RBO_PERSISTENCE,
    top_k: int = TOP_K,
) -> MetricReport:
    """Score a topic list against a reference corpus: per-topic and mean
    NPMI/CV plus corpus-level IRBO."""
    words = {w for topic in topics for w in topic}
    stats_npmi = cooccurrence_counts(reference_docs, npmi_window, restrict_to=words)
    stats_cv = cooccurrence_counts(reference_docs, cv_window, restrict_to=words)
    report = MetricReport()
    for topic in topics:
        report.per_topic_npmi.append(topic_npmi(stats_npmi, topic[:top_k]))
        report.per_topic_cv.append(cv_score(stats_cv, topic[:top_k]))
    report.mean_npmi = float(np.mean(report.per_topic_npmi))
    report.mean_cv = float(np.mean(report.per_topic_cv))
    report.irbo = irbo(topics, p=rbo_p, k=top_k)
    return report
