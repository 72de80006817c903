import math

import pytest
from hypothesis import given, strategies as st

from veriscope.errors import CannotRelaxError, EmptyQueryError, FormatError
from veriscope.querygen import (
    IdfTable,
    Query,
    build_idf,
    generate_query,
    load_default_idf,
    rank_terms,
    relax,
)


class TestBuildIdf:
    def test_token_in_both_docs(self):
        idf = build_idf(["clock tower", "clock shop"])
        assert idf.idf("clock") == pytest.approx(1.0)

    def test_token_in_one_doc(self):
        idf = build_idf(["clock tower", "old shop"])
        assert idf.idf("clock") == pytest.approx(math.log(3 / 2) + 1, abs=1e-9)

    def test_unseen_token(self):
        idf = build_idf(["clock tower", "old shop"])
        assert idf.idf("zeppelin") == pytest.approx(math.log(3) + 1, abs=1e-9)

    def test_df_counts_documents_not_occurrences(self):
        idf = build_idf(["clock clock clock", "other words"])
        assert idf.df["clock"] == 1

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            build_idf([])

    def test_save_load_round_trip(self, tmp_path):
        idf = build_idf(["clock tower", "old shop"])
        path = tmp_path / "idf.tsv"
        idf.save(path)
        loaded = IdfTable.load(path)
        assert loaded.doc_count == idf.doc_count
        assert loaded.df == idf.df

    def test_load_rejects_missing_header(self, tmp_path):
        path = tmp_path / "idf.tsv"
        path.write_text("clock\t1\n")
        with pytest.raises(FormatError):
            IdfTable.load(path)

    def test_df_range_validated(self):
        with pytest.raises(ValueError):
            IdfTable(doc_count=2, df={"w": 3})


class TestRankTerms:
    def test_all_closed_class(self, flat_idf):
        assert rank_terms("of the and by", flat_idf) == []

    def test_tf_breaks_equal_idf(self, flat_idf):
        ranked = rank_terms("clock clock bomb", flat_idf)
        assert [w for w, _ in ranked] == ["clock", "bomb"]
        assert ranked[0][1] > ranked[1][1]

    def test_tie_preserves_claim_order(self, flat_idf):
        ranked = rank_terms("zebra yak", flat_idf)
        assert [w for w, _ in ranked] == ["zebra", "yak"]

    def test_scores_non_increasing(self):
        idf = build_idf(["alpha beta", "alpha gamma", "beta delta epsilon"])
        ranked = rank_terms("alpha beta gamma delta epsilon alpha", idf)
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)


class TestGenerateQuery:
    def test_entities_come_first(self, flat_idf):
        claim = "Ahmed Mohamed arrested in Irving after school clock scare"
        query = generate_query(claim, flat_idf)
        assert query.tokens[:3] == ("ahmed", "mohamed", "irving")
        assert 5 <= len(query) <= 10
        assert "clock" in query.tokens

    def test_caps_at_ten_highest_ranked(self):
        words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta",
                 "theta", "iota", "kappa", "lam", "mu"]
        idf = IdfTable(doc_count=100, df={w: i + 1 for i, w in enumerate(words)})
        claim = " ".join(words)
        query = generate_query(claim, idf)
        assert len(query) == 10
        ranked = [w for w, _ in rank_terms(claim, idf)]
        assert list(query.tokens) == ranked[:10]

    def test_all_closed_class_raises(self, flat_idf):
        with pytest.raises(EmptyQueryError):
            generate_query("Of the and by", flat_idf)

    def test_fewer_than_five_candidates_emits_all(self, flat_idf):
        query = generate_query("purple elephants dancing", flat_idf)
        assert set(query.tokens) == {"purple", "elephants", "dancing"}

    def test_tokens_lowercase_unique_and_from_claim(self, flat_idf):
        claim = "Oskar Brandt opened the famous Brandt foundry near Windmoor"
        query = generate_query(claim, flat_idf)
        assert len(set(query.tokens)) == len(query.tokens)
        lowered = claim.lower()
        assert all(tok in lowered for tok in query.tokens)


class TestRelax:
    def test_drops_last(self):
        q = Query(tokens=("a", "b", "c"))
        assert relax(q).tokens == ("a", "b")

    def test_two_to_one(self):
        assert relax(Query(tokens=("a", "b"))).tokens == ("a",)

    def test_single_token_cannot_relax(self):
        with pytest.raises(CannotRelaxError):
            relax(Query(tokens=("a",)))

    @given(st.integers(2, 10))
    def test_prefix_and_length(self, n):
        q = Query(tokens=tuple(f"t{i}" for i in range(n)))
        r = relax(q)
        assert len(r) == len(q) - 1
        assert q.tokens[: len(r)] == r.tokens


class TestQueryInvariants:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Query(tokens=())

    def test_rejects_too_long(self):
        with pytest.raises(ValueError):
            Query(tokens=tuple(f"t{i}" for i in range(11)))

    def test_rejects_uppercase(self):
        with pytest.raises(ValueError):
            Query(tokens=("Bad",))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            Query(tokens=("a", "a"))


def test_default_idf_loads():
    idf = load_default_idf()
    assert idf.doc_count == 1000
    assert idf.idf("records") < idf.idf("zzz-unseen-token")
