"""Pre-trained word embeddings and averaged text vectors.

The on-disk format is the plain text one used by publicly distributed
embedding files: ``token v1 v2 ... vd`` per line, space separated, with a
constant dimension across the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import numpy as np

from .errors import FormatError
from .text import Token


@dataclass
class EmbeddingTable:
    dimension: int
    vocab: dict[str, np.ndarray]
    source_name: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("embedding dimension must be positive")
        if not self.vocab:
            raise ValueError("embedding vocabulary must be non-empty")

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)


@dataclass
class TextEmbedding:
    vector: np.ndarray
    coverage: float  # fraction of tokens found in the vocabulary

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage outside [0, 1]: {self.coverage}")


def load_embeddings(reader: Iterable[str], source_name: str = "") -> EmbeddingTable:
    """Parse an embedding stream. Duplicate tokens keep the first row;
    inconsistent dimensions raise FormatError with the offending line."""
    vocab: dict[str, np.ndarray] = {}
    dimension = None
    for lineno, line in enumerate(reader, start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise FormatError("expected a token followed by values", line=lineno)
        token, raw_values = parts[0], parts[1:]
        if dimension is None:
            dimension = len(raw_values)
        elif len(raw_values) != dimension:
            raise FormatError(
                f"expected {dimension} values, got {len(raw_values)}", line=lineno
            )
        try:
            vector = np.array([float(v) for v in raw_values], dtype=np.float64)
        except ValueError:
            raise FormatError("non-numeric embedding value", line=lineno) from None
        if token not in vocab:
            vocab[token] = vector
    if dimension is None:
        raise FormatError("empty embedding stream")
    return EmbeddingTable(dimension=dimension, vocab=vocab, source_name=source_name)


def avg_embedding(tokens: list[Token], table: EmbeddingTable) -> TextEmbedding:
    """Arithmetic mean of the vectors of in-vocabulary tokens (lowercased).

    Out-of-vocabulary tokens contribute nothing; if no token is known the
    vector is all zeros and coverage is 0 so callers can spot degenerate
    embeddings.
    """
    found = [table.vocab[t.lower] for t in tokens if t.lower in table.vocab]
    if not found:
        return TextEmbedding(vector=np.zeros(table.dimension), coverage=0.0)
    vector = np.mean(found, axis=0)
    return TextEmbedding(vector=vector, coverage=len(found) / len(tokens))


_DEFAULT_TABLE: EmbeddingTable | None = None


def load_default_embeddings() -> EmbeddingTable:
    """The small bundled table (d=8), cached after first load."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        raw = resources.files("veriscope.data").joinpath("mini_embeddings_d8.txt")
        with raw.open("r", encoding="utf-8") as fh:
            _DEFAULT_TABLE = load_embeddings(fh, source_name="mini_embeddings_d8")
    return _DEFAULT_TABLE
