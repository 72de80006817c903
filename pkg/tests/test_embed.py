import numpy as np
import pytest
from hypothesis import given, strategies as st

from veriscope.embed import avg_embedding, load_default_embeddings, load_embeddings
from veriscope.errors import FormatError
from veriscope.text import tokenize


class TestLoadEmbeddings:
    def test_basic(self):
        table = load_embeddings(["cat 1 2 3", "dog 4 5 6"])
        assert table.dimension == 3
        assert len(table) == 2
        assert np.allclose(table.vocab["dog"], [4, 5, 6])

    def test_inconsistent_dimension_reports_line(self):
        with pytest.raises(FormatError, match="line 2"):
            load_embeddings(["cat 1 2 3", "dog 4 5 6 7"])

    def test_empty_stream(self):
        with pytest.raises(FormatError):
            load_embeddings([])

    def test_duplicate_keeps_first(self):
        table = load_embeddings(["cat 1 2", "cat 9 9"])
        assert len(table) == 1
        assert np.allclose(table.vocab["cat"], [1, 2])

    def test_non_numeric_value(self):
        with pytest.raises(FormatError, match="line 1"):
            load_embeddings(["cat one 2"])

    def test_bundled_table(self):
        table = load_default_embeddings()
        assert table.dimension == 8
        assert len(table) > 150


class TestAvgEmbedding:
    def test_single_word(self):
        table = load_embeddings(["w 1 2 3"])
        out = avg_embedding(tokenize("w"), table)
        assert np.allclose(out.vector, [1, 2, 3])
        assert out.coverage == 1.0

    def test_midpoint(self):
        table = load_embeddings(["u 0 0", "v 2 4"])
        out = avg_embedding(tokenize("u v"), table)
        assert np.allclose(out.vector, [1, 2])

    def test_all_oov(self):
        table = load_embeddings(["w 1 2 3"])
        out = avg_embedding(tokenize("nope never"), table)
        assert np.allclose(out.vector, 0.0)
        assert out.coverage == 0.0

    def test_lookup_is_lowercased(self):
        table = load_embeddings(["w 2 2"])
        out = avg_embedding(tokenize("W"), table)
        assert np.allclose(out.vector, [2, 2])

    def test_partial_coverage(self):
        table = load_embeddings(["w 4 0"])
        out = avg_embedding(tokenize("w oov"), table)
        assert out.coverage == 0.5
        assert np.allclose(out.vector, [4, 0])

    @given(order=st.permutations(["w0", "w1", "w2", "w3"]))
    def test_permutation_invariant(self, toy_table, order):
        base = avg_embedding(tokenize("w0 w1 w2 w3"), toy_table).vector
        other = avg_embedding(tokenize(" ".join(order)), toy_table).vector
        assert np.allclose(base, other)

    @given(words=st.lists(st.sampled_from([f"w{i}" for i in range(20)]), min_size=1, max_size=8))
    def test_mean_within_componentwise_bounds(self, toy_table, words):
        vectors = np.array([toy_table.vocab[w] for w in words])
        mean = avg_embedding(tokenize(" ".join(words)), toy_table).vector
        assert np.all(mean <= vectors.max(axis=0) + 1e-12)
        assert np.all(mean >= vectors.min(axis=0) - 1e-12)
