import pytest
from hypothesis import given, strategies as st

from veriscope import text
from veriscope.text import (
    EntityPhrase,
    closed_class_words,
    content_tokens,
    extract_entities,
    split_sentences,
    tokenize,
    word_ngrams,
)


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_keeps_apostrophes_and_records_case(self):
        tokens = tokenize("Australia's election")
        assert [t.lower for t in tokens] == ["australia's", "election"]
        assert [t.is_capitalized for t in tokens] == [True, False]

    def test_keeps_hyphens_drops_punctuation(self):
        tokens = tokenize("state-of-the-art!")
        assert [t.surface for t in tokens] == ["state-of-the-art"]

    def test_positions_are_source_offsets(self):
        tokens = tokenize("a bb  ccc")
        assert [t.position for t in tokens] == [0, 2, 6]

    def test_casefold_is_full_unicode(self):
        (token,) = tokenize("Straße")
        assert token.lower == "strasse"

    @given(st.text(max_size=120))
    def test_idempotent_through_detokenize(self, raw):
        first = tokenize(raw)
        again = tokenize(" ".join(t.surface for t in first))
        assert [t.surface for t in again] == [t.surface for t in first]
        assert [t.is_capitalized for t in again] == [t.is_capitalized for t in first]


class TestSplitSentences:
    def test_two_sentences(self):
        assert len(split_sentences("A b. C d.")) == 2

    def test_no_terminator_is_one_sentence(self):
        sents = split_sentences("no terminator here")
        assert len(sents) == 1
        assert sents[0].text == "no terminator here"

    def test_lowercase_after_period_does_not_split(self):
        assert len(split_sentences("e.g. lower next")) == 1

    def test_terminator_at_end_of_text(self):
        sents = split_sentences("Done!")
        assert len(sents) == 1
        assert sents[0].text == "Done!"

    def test_spans_cover_non_whitespace(self):
        raw = "  First one. Second two!  no cap tail"
        sents = split_sentences(raw)
        joined = "".join(raw[s.char_span[0] : s.char_span[1]] for s in sents)
        assert joined.replace(" ", "") == raw.replace(" ", "")

    def test_spans_ordered_and_disjoint(self):
        sents = split_sentences("A b. C d. E f.")
        spans = [s.char_span for s in sents]
        assert spans == sorted(spans)
        assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))

    def test_never_splits_inside_numbers(self):
        assert len(split_sentences("Pi is 3.14159 roughly")) == 1


class TestContentTokens:
    def test_drops_closed_class(self):
        tokens = tokenize("the clock was confiscated")
        assert [t.surface for t in content_tokens(tokens)] == ["clock", "confiscated"]

    def test_empty(self):
        assert content_tokens([]) == []

    def test_all_closed_class(self):
        assert content_tokens(tokenize("of the and")) == []

    def test_custom_lexicon(self):
        tokens = tokenize("alpha beta")
        assert [t.surface for t in content_tokens(tokens, frozenset({"alpha"}))] == ["beta"]

    def test_preserves_order_and_duplicates(self):
        tokens = tokenize("clock the clock")
        assert [t.surface for t in content_tokens(tokens)] == ["clock", "clock"]

    @given(st.text(max_size=80))
    def test_output_is_subsequence(self, raw):
        tokens = tokenize(raw)
        kept = content_tokens(tokens)
        it = iter(tokens)
        assert all(any(t is k for t in it) for k in kept)

    def test_lexicon_size(self):
        assert len(closed_class_words()) >= 250


class TestExtractEntities:
    def test_multiword_runs(self):
        phrases = extract_entities("He visited Ahmed Mohamed in Irving")
        assert [p.text for p in phrases] == ["Ahmed Mohamed", "Irving"]

    def test_nothing_capitalized(self):
        assert extract_entities("nothing capitalized here") == []

    def test_sentence_initial_kept_when_repeated(self):
        phrases = extract_entities("Chipotle is closing. Chipotle said so.")
        assert [p.text for p in phrases] == ["Chipotle"]

    def test_sentence_initial_dropped_when_unique(self):
        assert extract_entities("The weather is fine") == []

    def test_run_broken_by_punctuation(self):
        phrases = extract_entities("She saw Alice, Bob and Carol Quinn yesterday")
        assert [p.text for p in phrases] == ["Alice", "Bob", "Carol Quinn"]

    def test_multiword_run_at_sentence_start_is_kept(self):
        phrases = extract_entities("Ahmed Mohamed was arrested")
        assert [p.text for p in phrases] == ["Ahmed Mohamed"]

    def test_dedup_by_lowercase(self):
        phrases = extract_entities("today Irving hosted IRVING fans near Irving")
        assert [p.text for p in phrases] == ["Irving"]

    @given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Zs", "Po")), max_size=80))
    def test_phrases_occur_verbatim(self, raw):
        for phrase in extract_entities(raw):
            assert phrase.text in raw
            assert all(t.is_capitalized for t in phrase.tokens)


class TestWordNgrams:
    def test_trigrams(self):
        assert word_ngrams(tokenize("a b c d"), 3) == {"a b c", "b c d"}

    def test_short_text_falls_back_to_unigrams(self):
        assert word_ngrams(tokenize("a"), 3) == {"a"}

    def test_duplicates_collapse_in_set(self):
        assert word_ngrams(tokenize("a a b"), 2) == {"a a", "a b"}

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            word_ngrams(tokenize("a b"), 0)

    def test_lowercased(self):
        assert word_ngrams(tokenize("A B"), 1) == {"a", "b"}

    @given(st.lists(st.sampled_from("abcdef"), min_size=0, max_size=12), st.integers(1, 5))
    def test_size_bound(self, letters, n):
        # when the unigram fallback applies the bound is the token count
        tokens = tokenize(" ".join(letters))
        grams = word_ngrams(tokens, n)
        if len(tokens) >= n:
            assert len(grams) <= max(1, len(tokens) - n + 1)
        else:
            assert len(grams) <= len(tokens)
