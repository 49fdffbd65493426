import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctmneg.corpus import (
    Corpus,
    CorpusError,
    SplitSpec,
    Vocabulary,
    build_vocabulary,
    drop_empty_documents,
    fallback_embeddings,
    load_corpus,
    load_embeddings,
    split,
    to_bow,
    write_embeddings,
)


class TestLoadCorpus:
    def test_two_line_file(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("a b\nc d\n", encoding="utf-8")
        corpus = load_corpus(str(path))
        assert corpus.documents == [["a", "b"], ["c", "d"]]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("", encoding="utf-8")
        assert len(load_corpus(str(path))) == 0

    def test_label_count_mismatch(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("a b\nc d\n", encoding="utf-8")
        labels = tmp_path / "l.txt"
        labels.write_text("x\ny\nz\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="label/document count mismatch"):
            load_corpus(str(corpus), str(labels))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus(str(tmp_path / "nope.txt"))

    def test_labels_aligned(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("a b\nc d\n", encoding="utf-8")
        labels = tmp_path / "l.txt"
        labels.write_text("x\ny\n", encoding="utf-8")
        assert load_corpus(str(corpus), str(labels)).labels == ["x", "y"]


class TestBuildVocabulary:
    def test_tie_broken_lexicographically(self):
        corpus = Corpus(documents=[["a", "a", "b"], ["b", "c"]])
        vocab = build_vocabulary(corpus, max_size=2)
        assert vocab.words == ["a", "b"]

    def test_under_capacity(self):
        vocab = build_vocabulary(Corpus(documents=[["x", "y", "z"]]), max_size=10)
        assert sorted(vocab.words) == ["x", "y", "z"]

    def test_single_word(self):
        vocab = build_vocabulary(Corpus(documents=[["q", "q", "q"]]), max_size=1)
        assert vocab.words == ["q"]

    def test_zero_tokens(self):
        with pytest.raises(CorpusError):
            build_vocabulary(Corpus(documents=[[], []]), max_size=5)

    def test_deterministic(self):
        corpus = Corpus(documents=[["b", "a", "c", "a"], ["c", "b"]])
        v1 = build_vocabulary(corpus, max_size=3)
        v2 = build_vocabulary(corpus, max_size=3)
        assert v1.words == v2.words

    def test_order_by_frequency_then_lex(self):
        corpus = Corpus(documents=[["z", "z", "z"], ["m", "m"], ["a", "a"]])
        vocab = build_vocabulary(corpus, max_size=3)
        assert vocab.words == ["z", "a", "m"]


class TestToBow:
    def test_counts_and_normalization(self, tiny_vocab):
        bow = to_bow(["a", "a", "b"], Vocabulary(words=["a", "b", "c"]))
        assert bow.counts == {0: 2, 1: 1}
        np.testing.assert_allclose(bow.l1_normalized, [2 / 3, 1 / 3, 0])

    def test_all_oov(self):
        with pytest.raises(CorpusError, match="empty after"):
            to_bow(["z", "z"], Vocabulary(words=["a", "b"]))

    def test_single_word(self):
        bow = to_bow(["c"], Vocabulary(words=["a", "b", "c"]))
        np.testing.assert_allclose(bow.l1_normalized, [0, 0, 1])

    @given(
        st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=30),
    )
    def test_normalized_is_simplex(self, tokens):
        vocab = Vocabulary(words=list("abcd"))
        if not any(t in vocab.index for t in tokens):
            with pytest.raises(CorpusError):
                to_bow(tokens, vocab)
            return
        bow = to_bow(tokens, vocab)
        assert abs(bow.l1_normalized.sum() - 1.0) < 1e-9
        assert (bow.l1_normalized >= 0).all()


class TestSplit:
    def _corpus(self, n):
        return Corpus(documents=[[f"w{i}"] for i in range(n)])

    def test_sizes_100(self):
        tr, dev, te = split(self._corpus(100), SplitSpec())
        assert (len(tr), len(dev), len(te)) == (70, 15, 15)

    def test_remainder_to_train(self):
        tr, dev, te = split(self._corpus(10), SplitSpec())
        assert (len(tr), len(dev), len(te)) == (8, 1, 1)

    def test_same_seed_identical(self):
        c = self._corpus(50)
        a = split(c, SplitSpec(seed=3))
        b = split(c, SplitSpec(seed=3))
        for x, y in zip(a, b):
            assert x.documents == y.documents

    def test_partition(self):
        c = self._corpus(37)
        parts = split(c, SplitSpec(seed=1))
        seen = [tuple(d) for p in parts for d in p.documents]
        assert sorted(seen) == sorted(tuple(d) for d in c.documents)
        assert len(set(seen)) == len(seen)

    def test_too_small(self):
        with pytest.raises(CorpusError):
            split(self._corpus(3), SplitSpec())

    def test_bad_ratios(self):
        with pytest.raises(CorpusError):
            SplitSpec(ratios=(0.5, 0.2, 0.2))

    def test_labels_follow_documents(self):
        c = Corpus(
            documents=[[f"w{i}"] for i in range(20)],
            labels=[f"l{i}" for i in range(20)],
        )
        tr, dev, te = split(c, SplitSpec(seed=5))
        for part in (tr, dev, te):
            for doc, label in zip(part.documents, part.labels):
                assert label == "l" + doc[0][1:]


class TestEmbeddingFile:
    def test_roundtrip_bit_exact(self, tmp_path):
        matrix = np.array([[1.5, -2.25, 3.0], [0.1, 0.2, 0.3]], dtype=np.float32)
        path = str(tmp_path / "e.ctxe")
        write_embeddings(path, matrix)
        back = load_embeddings(path, expected_docs=2)
        assert back.dtype == np.float32
        assert (back == matrix).all()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.ctxe"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CorpusError, match="magic"):
            load_embeddings(str(path))

    def test_doc_count_mismatch(self, tmp_path):
        path = str(tmp_path / "e.ctxe")
        write_embeddings(path, np.zeros((5, 3), dtype=np.float32))
        with pytest.raises(CorpusError, match="do not match"):
            load_embeddings(path, expected_docs=4)

    def test_truncated(self, tmp_path):
        path = tmp_path / "e.ctxe"
        write_embeddings(str(path), np.zeros((2, 3), dtype=np.float32))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(CorpusError, match="truncated"):
            load_embeddings(str(path))


class TestFallbackEmbeddings:
    def test_identical_documents_identical_rows(self, tiny_vocab):
        corpus = Corpus(documents=[["a", "b"], ["a", "b"], ["c"]])
        emb = fallback_embeddings(corpus, tiny_vocab, dim=5, seed=1)
        np.testing.assert_array_equal(emb[0], emb[1])

    def test_seed_changes_output(self, tiny_vocab):
        corpus = Corpus(documents=[["a", "b"], ["c", "d"]])
        e1 = fallback_embeddings(corpus, tiny_vocab, dim=5, seed=1)
        e2 = fallback_embeddings(corpus, tiny_vocab, dim=5, seed=2)
        assert (e1 != e2).any()

    def test_finite(self, tiny_vocab):
        corpus = Corpus(documents=[["a"], ["b", "c", "c"]])
        emb = fallback_embeddings(corpus, tiny_vocab, dim=16, seed=0)
        assert np.isfinite(emb).all()
        assert emb.shape == (2, 16)


class TestDropEmptyDocuments:
    def test_drops_and_keeps_alignment(self):
        vocab = Vocabulary(words=["a", "b"])
        corpus = Corpus(
            documents=[["a"], ["zzz"], ["b", "b"]], labels=["x", "y", "z"]
        )
        emb = np.arange(6, dtype=np.float32).reshape(3, 2)
        with pytest.warns(UserWarning, match="dropped 1"):
            kept, kept_emb = drop_empty_documents(corpus, vocab, emb)
        assert kept.documents == [["a"], ["b", "b"]]
        assert kept.labels == ["x", "z"]
        np.testing.assert_array_equal(kept_emb, emb[[0, 2]])
