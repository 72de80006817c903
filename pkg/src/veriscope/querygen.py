"""Search query generation: tf-idf term ranking plus entity phrases,
with iterative relaxation by dropping trailing tokens."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import CannotRelaxError, EmptyQueryError, FormatError
from .text import content_tokens, extract_entities, tokenize

MAX_QUERY_TOKENS = 10
MIN_QUERY_TOKENS = 5


@dataclass
class IdfTable:
    """Document frequencies over a reference corpus.

    idf(w) = ln((N + 1) / (df(w) + 1)) + 1, so unseen words get the
    maximal weight ln(N + 1) + 1 and nothing is ever zero-weighted.
    """

    doc_count: int
    df: dict[str, int]

    def __post_init__(self):
        if self.doc_count < 1:
            raise ValueError("doc_count must be positive")
        bad = [w for w, d in self.df.items() if not 1 <= d <= self.doc_count]
        if bad:
            raise ValueError(f"df out of range for: {bad[:5]}")

    def idf(self, token: str) -> float:
        d = self.df.get(token, 0)
        return math.log((self.doc_count + 1) / (d + 1)) + 1.0

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"N={self.doc_count}\n")
            for token in sorted(self.df):
                fh.write(f"{token}\t{self.df[token]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "IdfTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("N="):
                raise FormatError("idf file must start with an N=<int> header", line=1)
            try:
                n = int(header[2:])
            except ValueError:
                raise FormatError(f"bad document count {header!r}", line=1) from None
            df = {}
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    token, count = line.rstrip("\n").split("\t")
                    df[token] = int(count)
                except ValueError:
                    raise FormatError("expected token<TAB>df", line=lineno) from None
        return cls(doc_count=n, df=df)


@dataclass(frozen=True)
class Query:
    """An ordered, duplicate-free, lowercase token list of length 1..10."""

    tokens: tuple[str, ...]
    origin_claim_id: str = ""

    def __post_init__(self):
        if not 1 <= len(self.tokens) <= MAX_QUERY_TOKENS:
            raise ValueError(f"query must have 1..{MAX_QUERY_TOKENS} tokens")
        if any(t != t.casefold() for t in self.tokens):
            raise ValueError("query tokens must be lowercase")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("query tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def build_idf(corpus: Iterable[str]) -> IdfTable:
    """Count, per token, how many documents contain it at least once."""
    df: Counter[str] = Counter()
    n = 0
    for doc in corpus:
        n += 1
        df.update({t.lower for t in tokenize(doc)})
    if n == 0:
        raise ValueError("idf corpus must contain at least one document")
    return IdfTable(doc_count=n, df=dict(df))


def rank_terms(claim_text: str, idf: IdfTable) -> list[tuple[str, float]]:
    """Content words of the claim scored by tf * idf, descending; ties go
    to the word that appears earlier in the claim."""
    words = [t.lower for t in content_tokens(tokenize(claim_text))]
    counts = Counter(words)
    first_pos = {}
    for i, w in enumerate(words):
        first_pos.setdefault(w, i)
    scored = [(w, counts[w] * idf.idf(w)) for w in counts]
    scored.sort(key=lambda ws: (-ws[1], first_pos[ws[0]]))
    return scored


def generate_query(claim_text: str, idf: IdfTable, origin_claim_id: str = "") -> Query:
    """Entity-phrase tokens first (in order of appearance), then ranked
    terms, all deduplicated and capped at 10 tokens total."""
    ordered: list[str] = []
    seen: set[str] = set()
    for phrase in extract_entities(claim_text):
        for tok in phrase.tokens:
            if tok.lower not in seen:
                seen.add(tok.lower)
                ordered.append(tok.lower)
    for word, _score in rank_terms(claim_text, idf):
        if word not in seen:
            seen.add(word)
            ordered.append(word)
    if not ordered:
        raise EmptyQueryError(f"no query candidates in claim: {claim_text!r}")
    return Query(tokens=tuple(ordered[:MAX_QUERY_TOKENS]), origin_claim_id=origin_claim_id)


def relax(query: Query) -> Query:
    """Drop the final token; a one-token query cannot be relaxed."""
    if len(query) < 2:
        raise CannotRelaxError(f"cannot relax single-token query {query.text!r}")
    return Query(tokens=query.tokens[:-1], origin_claim_id=query.origin_claim_id)


_DEFAULT_IDF: IdfTable | None = None


def load_default_idf() -> IdfTable:
    """The bundled precomputed idf table, cached after first load."""
    global _DEFAULT_IDF
    if _DEFAULT_IDF is None:
        path = resources.files("veriscope.data").joinpath("idf_table.tsv")
        with resources.as_file(path) as p:
            _DEFAULT_IDF = IdfTable.load(p)
    return _DEFAULT_IDF
