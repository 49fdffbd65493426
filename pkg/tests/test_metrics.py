import math
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctmneg.metrics import (
    CooccurrenceStats,
    cooccurrence_counts,
    cv_score,
    evaluate_topics,
    irbo,
    npmi_pair,
    rbo,
    topic_npmi,
)

EPS = 1e-12


# -- independent brute-force oracles ----------------------------------------


def brute_windows(docs, window):
    """Enumerate virtual documents as explicit token sets."""
    out = []
    for doc in docs:
        if len(doc) <= window:
            out.append(set(doc))
        else:
            for start in range(len(doc) - window + 1):
                out.append(set(doc[start:start + window]))
    return out


def brute_npmi(docs, window, wi, wj):
    virtual = brute_windows(docs, window)
    n = len(virtual)
    p_i = sum(wi in v for v in virtual) / n
    p_j = sum(wj in v for v in virtual) / n
    p_ij = sum(wi in v and wj in v for v in virtual) / n
    return math.log((p_ij + EPS) / (p_i * p_j)) / -math.log(p_ij + EPS)


def brute_cv(docs, window, topic):
    k = len(topic)
    vectors = np.array(
        [
            [1.0 if i == j else brute_npmi(docs, window, topic[i], topic[j])
             for j in range(k)]
            for i in range(k)
        ]
    )
    v_total = vectors.sum(axis=0)
    sims = []
    for i in range(k):
        denom = np.linalg.norm(vectors[i]) * np.linalg.norm(v_total)
        sims.append(0.0 if denom == 0 else vectors[i] @ v_total / denom)
    return float(np.mean(sims))


def brute_rbo(l1, l2, p, k):
    depth = min(k, len(l1), len(l2))
    if depth == 0:
        return 0.0
    agreements = [
        len(set(l1[:d]) & set(l2[:d])) / d for d in range(1, depth + 1)
    ]
    head = sum((1 - p) * p ** (d - 1) * a for d, a in enumerate(agreements, 1))
    return head + p**depth * agreements[-1]


# -- co-occurrence counting -----------------------------------------------


class TestCooccurrenceCounts:
    def test_window_larger_than_doc(self):
        stats = cooccurrence_counts([["a", "b"]], window=10)
        assert stats.n_windows == 1
        assert stats.word_counts == {"a": 1, "b": 1}
        assert stats.p_pair("a", "b") == 1.0

    def test_sliding_enumeration(self):
        stats = cooccurrence_counts([["a", "b", "c"]], window=2)
        assert stats.n_windows == 2
        assert stats.p_pair("a", "b") == 0.5
        assert stats.p_pair("b", "c") == 0.5
        assert stats.p_pair("a", "c") == 0.0

    def test_symmetry(self):
        stats = cooccurrence_counts([["a", "b", "a", "c"], ["c", "b"]], window=3)
        for wi, wj in combinations("abc", 2):
            assert stats.p_pair(wi, wj) == stats.p_pair(wj, wi)

    def test_pair_bounded_by_marginals(self):
        docs = [["a", "b", "c", "a"], ["b", "c"], ["a"]]
        stats = cooccurrence_counts(docs, window=2)
        for wi, wj in combinations("abc", 2):
            assert stats.p_pair(wi, wj) <= min(stats.p_word(wi), stats.p_word(wj)) <= 1

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            cooccurrence_counts([], window=5)

    def test_restriction_matches_full_counts(self):
        docs = [["a", "b", "c", "d"], ["b", "d", "a"]]
        full = cooccurrence_counts(docs, window=2)
        restricted = cooccurrence_counts(docs, window=2, restrict_to={"a", "b"})
        assert restricted.word_counts["a"] == full.word_counts["a"]
        assert restricted.p_pair("a", "b") == full.p_pair("a", "b")


class TestNpmiPair:
    DOCS = [["a", "b"], ["a", "b"], ["c", "d"]]

    def test_always_cooccurring(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        value = npmi_pair(stats, "a", "b")
        assert abs(value - brute_npmi(self.DOCS, 10, "a", "b")) < 1e-12
        assert abs(value - 1.0) < 1e-9

    def test_never_cooccurring(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        value = npmi_pair(stats, "a", "c")
        assert abs(value - brute_npmi(self.DOCS, 10, "a", "c")) < 1e-12
        assert value < -0.9

    def test_independent_words_near_zero(self):
        # p(ab) = p(a) p(b): a in half the windows, b in half, together in a quarter
        docs = [["a", "b"], ["a", "x"], ["b", "y"], ["x", "y"]]
        stats = cooccurrence_counts(docs, window=10)
        assert abs(npmi_pair(stats, "a", "b")) < 1e-6

    def test_absent_word_rejected(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        with pytest.raises(KeyError):
            npmi_pair(stats, "a", "zzz")

    def test_matches_oracle_on_random_corpora(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            docs = [
                list(rng.choice(list("abcde"), size=rng.integers(1, 9)))
                for _ in range(rng.integers(1, 11))
            ]
            window = int(rng.integers(1, 6))
            stats = cooccurrence_counts(docs, window=window)
            present = sorted(stats.word_counts)
            for wi, wj in combinations(present, 2):
                expected = brute_npmi(docs, window, wi, wj)
                assert abs(npmi_pair(stats, wi, wj) - expected) < 1e-9


class TestTopicNpmi:
    DOCS = [["a", "b"], ["a", "b"], ["c", "d"]]

    def test_two_word_topic_is_single_pair(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        assert topic_npmi(stats, ["a", "b"]) == npmi_pair(stats, "a", "b")

    def test_always_cooccurring_topic(self):
        docs = [["x", "y", "z"]] * 4 + [["q", "r"]]
        stats = cooccurrence_counts(docs, window=10)
        assert topic_npmi(stats, ["x", "y", "z"]) > 0.99

    def test_order_invariant(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        a = topic_npmi(stats, ["a", "b", "c"])
        b = topic_npmi(stats, ["c", "a", "b"])
        assert a == b

    def test_too_few_words(self):
        stats = cooccurrence_counts(self.DOCS, window=10)
        with pytest.raises(ValueError):
            topic_npmi(stats, ["a"])


class TestCvScore:
    def test_identical_context_vectors(self):
        # both words co-occur with everything identically -> CV = 1
        docs = [["a", "b"]] * 3 + [["c", "d"]]
        stats = cooccurrence_counts(docs, window=10)
        assert abs(cv_score(stats, ["a", "b"]) - 1.0) < 1e-9

    def test_always_cooccurring_topic(self):
        docs = [["a", "b", "c"], ["a", "b", "c"], ["d", "e", "f"]]
        stats = cooccurrence_counts(docs, window=110)
        assert abs(cv_score(stats, ["a", "b", "c"]) - 1.0) < 1e-9

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for trial in range(10):
            docs = [
                list(rng.choice(list("abcdef"), size=rng.integers(2, 8)))
                for _ in range(rng.integers(2, 11))
            ]
            window = int(rng.integers(1, 5))
            stats = cooccurrence_counts(docs, window=window)
            present = sorted(stats.word_counts)
            if len(present) < 3:
                continue
            topic = present[:3]
            expected = brute_cv(docs, window, topic)
            assert abs(cv_score(stats, topic) - expected) < 1e-9

    def test_cosine_self_similarity(self):
        v = np.array([0.3, -0.2, 0.9])
        assert abs(v @ v / (np.linalg.norm(v) ** 2) - 1.0) < 1e-12


class TestRbo:
    def test_identical_lists(self):
        for p in (0.5, 0.9, 0.98):
            for k in (1, 3, 10):
                assert abs(rbo(list("abcd"), list("abcd"), p=p, k=k) - 1.0) < 1e-12

    def test_disjoint_lists(self):
        assert rbo(list("abc"), list("xyz"), p=0.9, k=3) == 0.0

    def test_hand_evaluated_example(self):
        assert abs(rbo(["a", "b"], ["b", "a"], p=0.9, k=2) - 0.9) < 1e-12

    def test_exhaustive_against_brute_force(self):
        # all ranked lists (distinct symbols) of length <= 4 over a 5-symbol alphabet
        alphabet = "abcde"
        lists = [
            list(perm)
            for n in range(1, 5)
            for perm in permutations(alphabet, n)
        ]
        for p in (0.5, 0.9):
            for l1 in lists:
                for l2 in lists:
                    expected = brute_rbo(l1, l2, p, 10)
                    assert abs(rbo(l1, l2, p=p, k=10) - expected) < 1e-9

    def test_bad_persistence(self):
        with pytest.raises(ValueError):
            rbo(["a"], ["a"], p=1.0)


class TestIrbo:
    def test_identical_topics(self):
        topics = [list("abc")] * 4
        assert abs(irbo(topics)) < 1e-12

    def test_disjoint_topics(self):
        topics = [["a", "b"], ["c", "d"], ["e", "f"]]
        assert abs(irbo(topics) - 1.0) < 1e-12

    def test_two_identical_one_disjoint(self):
        topics = [list("ab"), list("ab"), list("xy")]
        assert abs(irbo(topics) - 2 / 3) < 1e-12

    def test_permutation_invariant(self):
        topics = [list("abc"), list("bca"), list("xyz"), list("axy")]
        base = irbo(topics)
        for perm in permutations(topics):
            assert abs(irbo(list(perm)) - base) < 1e-12

    def test_single_topic_rejected(self):
        with pytest.raises(ValueError):
            irbo([["a", "b"]])


class TestEvaluateTopics:
    def test_report_fields_and_ranges(self):
        docs = [["a", "b", "c"], ["a", "b", "d"], ["e", "f", "g"], ["e", "f", "h"]]
        topics = [["a", "b", "c"], ["e", "f", "g"]]
        report = evaluate_topics(topics, docs)
        assert len(report.per_topic_npmi) == 2
        assert -1.0 <= report.mean_npmi <= 1.0
        assert 0.0 <= report.mean_cv <= 1.0
        assert 0.0 <= report.irbo <= 1.0

    def test_coherent_beats_incoherent(self):
        docs = [["a", "b", "c"]] * 5 + [["x", "y", "z"]] * 5
        coherent = evaluate_topics([["a", "b", "c"], ["x", "y", "z"]], docs)
        mixed = evaluate_topics([["a", "x", "c"], ["b", "y", "z"]], docs)
        assert coherent.mean_npmi > mixed.mean_npmi
