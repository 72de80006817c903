"""Deterministic text primitives.

Tokenization, sentence splitting, closed-class word filtering, a
capitalization-based named-entity heuristic, and word n-gram sets. All
functions are pure; the only external state is the bundled closed-class
lexicon, which is loaded once and cached.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

# Word characters optionally joined by apostrophes or hyphens, so that
# "Australia's" and "state-of-the-art" stay single tokens.
_TOKEN_RE = re.compile(r"\w+(?:['’-]\w+)*", re.UNICODE)
_TERMINATOR_RE = re.compile(r"[.!?]+")


@dataclass(frozen=True)
class Token:
    """A single word unit with its casing recorded before folding."""

    surface: str
    lower: str
    is_capitalized: bool
    position: int  # character offset of the surface in the source text

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True)
class Sentence:
    """A sentence span; token positions refer to the original source text."""

    text: str
    tokens: tuple[Token, ...]
    char_span: tuple[int, int]


@dataclass(frozen=True)
class EntityPhrase:
    """A maximal run of capitalized tokens, verbatim from the source."""

    tokens: tuple[Token, ...]
    text: str


def tokenize(text: str) -> list[Token]:
    """Split text on whitespace and punctuation, keeping intra-word
    apostrophes and hyphens. Empty input yields an empty list."""
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        surface = m.group()
        tokens.append(
            Token(
                surface=surface,
                lower=surface.casefold(),
                is_capitalized=surface[0].isupper(),
                position=m.start(),
            )
        )
    return tokens


def split_sentences(text: str) -> list[Sentence]:
    """Split at '.', '!' or '?' followed by whitespace and an uppercase
    letter, or by end-of-text. Text without a terminator is one sentence."""
    cuts = []
    for m in _TERMINATOR_RE.finditer(text):
        j = m.end()
        if j >= len(text):
            cuts.append(j)
            continue
        if not text[j].isspace():
            continue  # e.g. "3.14" or "example.com"
        k = j
        while k < len(text) and text[k].isspace():
            k += 1
        if k >= len(text) or text[k].isupper():
            cuts.append(j)
    if not cuts or cuts[-1] < len(text):
        cuts.append(len(text))

    all_tokens = tokenize(text)
    sentences = []
    prev = 0
    for cut in cuts:
        segment = text[prev:cut]
        stripped = segment.strip()
        if stripped:
            start = prev + (len(segment) - len(segment.lstrip()))
            end = start + len(stripped)
            toks = tuple(t for t in all_tokens if start <= t.position < end)
            sentences.append(Sentence(text=stripped, tokens=toks, char_span=(start, end)))
        prev = cut
    return sentences


_LEXICON: frozenset[str] | None = None


def closed_class_words() -> frozenset[str]:
    """The bundled closed-class lexicon (lowercase), cached after first load."""
    global _LEXICON
    if _LEXICON is None:
        raw = resources.files("veriscope.data").joinpath("closed_class.txt").read_text("utf-8")
        _LEXICON = load_lexicon(raw.splitlines())
    return _LEXICON


def load_lexicon(lines) -> frozenset[str]:
    """Parse a lexicon stream: one lowercase word per line, '#' comments."""
    words = set()
    for line in lines:
        entry = line.split("#", 1)[0].strip()
        if entry:
            words.add(entry.casefold())
    return frozenset(words)


def content_tokens(tokens: list[Token], stopwords: frozenset[str] | None = None) -> list[Token]:
    """Drop closed-class tokens, preserving order and duplicates."""
    if stopwords is None:
        stopwords = closed_class_words()
    return [t for t in tokens if t.lower not in stopwords]


def extract_entities(text: str) -> list[EntityPhrase]:
    """Maximal runs of capitalized tokens separated only by whitespace.

    A run that is a lone sentence-initial token is kept only when the
    same word occurs capitalized somewhere else in the text. Phrases are
    deduplicated by their lowercased text, first occurrence kept.
    """
    tokens = tokenize(text)
    if not tokens:
        return []
    sentence_initial = {
        s.tokens[0].position for s in split_sentences(text) if s.tokens
    }
    cap_counts = Counter(t.lower for t in tokens if t.is_capitalized)

    runs: list[list[Token]] = []
    run: list[Token] = []
    for tok in tokens:
        if tok.is_capitalized:
            if run:
                gap = text[run[-1].position + len(run[-1].surface) : tok.position]
                if gap.strip():
                    runs.append(run)
                    run = []
            run.append(tok)
        elif run:
            runs.append(run)
            run = []
    if run:
        runs.append(run)

    phrases = []
    seen = set()
    for run in runs:
        if (
            len(run) == 1
            and run[0].position in sentence_initial
            and cap_counts[run[0].lower] < 2
        ):
            continue
        start = run[0].position
        end = run[-1].position + len(run[-1].surface)
        phrase_text = text[start:end]
        key = phrase_text.casefold()
        if key in seen:
            continue
        seen.add(key)
        phrases.append(EntityPhrase(tokens=tuple(run), text=phrase_text))
    return phrases


def word_ngrams(tokens: list[Token], n: int) -> set[str]:
    """Space-joined lowercase n-grams; texts shorter than n fall back to
    unigrams so the measure stays defined for one or two word claims."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lowers = [t.lower for t in tokens]
    if len(lowers) < n:
        return set(lowers)
    return {" ".join(lowers[i : i + n]) for i in range(len(lowers) - n + 1)}
