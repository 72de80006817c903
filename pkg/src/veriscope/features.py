"""Similarity measures between a claim and retrieved evidence, selection
of the best snippet and best page sentence-triplet, per-engine max/avg
aggregation, and fixed-layout feature vector assembly."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embed import EmbeddingTable, avg_embedding
from .errors import NoMatchError
from .querygen import IdfTable
from .retrieve import EvidenceBundle, SearchResult
from .text import split_sentences, tokenize, word_ngrams

MEASURES = ("tfidf_cos", "emb_cos", "containment")
SOURCES = ("snippet", "page")
AGGREGATES = ("max", "avg")
SIM_BLOCK_SIZE = 24  # 2 engines x 2 sources x 2 aggregates x 3 measures
HIDDEN_SIZE = 60

MODES = ("avg_embeddings", "lstm_embeddings", "lstm_plus_hidden")


@dataclass(frozen=True)
class SimilarityTriple:
    tfidf_cos: float
    emb_cos: float
    containment: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tfidf_cos, self.emb_cos, self.containment])


@dataclass(frozen=True)
class BestMatch:
    text: str
    score: float
    source: str  # "snippet" | "page"
    engine: str
    sims: SimilarityTriple
    rank: int | None = None


@dataclass
class SimilarityBlock:
    """24 aggregated similarity values plus presence flags telling which
    (engine, source) groups actually had evidence (zeros are ambiguous)."""

    values: np.ndarray
    present: dict[str, bool]
    engines: tuple[str, str | None]

    def slot_names(self) -> list[str]:
        names = []
        for engine in self.engines:
            label = engine or "none"
            for source in SOURCES:
                for agg in AGGREGATES:
                    for measure in MEASURES:
                        names.append(f"{label}.{source}.{agg}.{measure}")
        return names


def _tf(text: str) -> Counter:
    return Counter(t.lower for t in tokenize(text))


def tfidf_cosine(a: str, b: str, idf: IdfTable) -> float:
    """Cosine of L2-normalized tf-idf vectors; 0 when either side has no
    tokens (or only zero-weight ones)."""
    ca, cb = _tf(a), _tf(b)
    wa = {w: c * idf.idf(w) for w, c in ca.items()}
    wb = {w: c * idf.idf(w) for w, c in cb.items()}
    na = math.sqrt(sum(v * v for v in wa.values()))
    nb = math.sqrt(sum(v * v for v in wb.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    dot = sum(wa[w] * wb[w] for w in wa.keys() & wb.keys())
    return dot / (na * nb)


def embedding_cosine(a: str, b: str, table: EmbeddingTable) -> float:
    """Cosine of averaged word embeddings; any all-OOV side yields 0."""
    va = avg_embedding(tokenize(a), table).vector
    vb = avg_embedding(tokenize(b), table).vector
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def containment(a: str, b: str) -> float:
    """|S3(a) & S3(b)| / |S3(a)| over word trigrams, with the unigram
    fallback for short texts. Asymmetric: a is the claim side."""
    sa = word_ngrams(tokenize(a), 3)
    if not sa:
        return 0.0
    sb = word_ngrams(tokenize(b), 3)
    return len(sa & sb) / len(sa)


def similarity_triple(claim: str, evidence: str, idf: IdfTable, table: EmbeddingTable) -> SimilarityTriple:
    return SimilarityTriple(
        tfidf_cos=tfidf_cosine(claim, evidence, idf),
        emb_cos=embedding_cosine(claim, evidence, table),
        containment=containment(claim, evidence),
    )


def selection_score(sims: SimilarityTriple) -> float:
    """Mean of the three measures with emb_cos rescaled to [0, 1]."""
    return (sims.tfidf_cos + (sims.emb_cos + 1.0) / 2.0 + sims.containment) / 3.0


def best_triplet(
    claim: str, page_text: str, idf: IdfTable, table: EmbeddingTable, engine: str = ""
) -> BestMatch:
    """Highest scoring rolling window of three consecutive sentences; a
    page with fewer than three sentences is one window. Ties go to the
    earliest window."""
    sentences = split_sentences(page_text)
    if not sentences:
        raise NoMatchError("page has no sentences")
    if len(sentences) < 3:
        windows = [" ".join(s.text for s in sentences)]
    else:
        windows = [
            " ".join(s.text for s in sentences[i : i + 3])
            for i in range(len(sentences) - 2)
        ]
    best = None
    for window in windows:
        sims = similarity_triple(claim, window, idf, table)
        score = selection_score(sims)
        if best is None or score > best.score:
            best = BestMatch(text=window, score=score, source="page", engine=engine, sims=sims)
    return best


def best_snippets(
    claim: str,
    results: list[SearchResult],
    idf: IdfTable,
    table: EmbeddingTable,
    k: int = 1,
) -> list[BestMatch]:
    """Top-k snippets by selection score; ties go to the lower rank."""
    matches = []
    for r in results:
        if not r.snippet:
            continue
        sims = similarity_triple(claim, r.snippet, idf, table)
        matches.append(
            BestMatch(
                text=r.snippet,
                score=selection_score(sims),
                source="snippet",
                engine=r.engine,
                sims=sims,
                rank=r.rank,
            )
        )
    if not matches:
        raise NoMatchError("no result has a snippet")
    matches.sort(key=lambda m: (-m.score, m.rank))
    return matches[:k]


def best_snippet(
    claim: str, results: list[SearchResult], idf: IdfTable, table: EmbeddingTable
) -> BestMatch:
    return best_snippets(claim, results, idf, table, k=1)[0]


def _engine_slots(engines) -> tuple[str, str | None]:
    engines = tuple(engines)
    if not 1 <= len(engines) <= 2:
        raise ValueError("expected one or two engines")
    return (engines[0], engines[1] if len(engines) == 2 else None)


def aggregate_similarities(
    claim: str,
    bundle: EvidenceBundle,
    idf: IdfTable,
    table: EmbeddingTable,
    engines=("google", "bing"),
    sources=("snippet", "page"),
) -> SimilarityBlock:
    """Slot-wise max and mean of the three similarities over up to ten
    hits per engine; pages contribute their best triplet's similarities.
    Groups without evidence stay zero with their presence flag off."""
    slots = _engine_slots(engines)
    values = np.zeros(SIM_BLOCK_SIZE)
    present = {}
    offset = 0
    for engine in slots:
        hits = bundle.results.get(engine, []) if engine else []
        for source in SOURCES:
            triples: list[SimilarityTriple] = []
            if source in sources and engine is not None:
                if source == "snippet":
                    triples = [
                        similarity_triple(claim, r.snippet, idf, table)
                        for r in hits
                        if r.snippet
                    ]
                else:
                    for r in hits:
                        if not r.page_text:
                            continue
                        try:
                            triples.append(best_triplet(claim, r.page_text, idf, table, engine).sims)
                        except NoMatchError:
                            continue
            group = f"{engine or 'none'}.{source}"
            present[group] = bool(triples)
            if triples:
                matrix = np.array([t.as_array() for t in triples])
                values[offset : offset + 3] = matrix.max(axis=0)
                values[offset + 3 : offset + 6] = matrix.mean(axis=0)
            offset += 6
    return SimilarityBlock(values=values, present=present, engines=slots)


# --- feature vector assembly --------------------------------------------------

EMBED_BLOCKS = ("claim", "snippet_a", "page_a", "snippet_b", "page_b")


@dataclass
class FeatureLayout:
    """Names every region of the feature vector so experiments stay
    auditable regardless of mode, dimension, or engine configuration."""

    mode: str
    block_dim: int
    engines: tuple[str, str | None]
    sources: tuple[str, ...]
    sim_slots: list[str]
    blocks: list[tuple[str, int, int]]  # (name, start, length)

    @property
    def size(self) -> int:
        name, start, length = self.blocks[-1]
        return start + length

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "block_dim": self.block_dim,
                "engines": list(self.engines),
                "sources": list(self.sources),
                "sim_slots": self.sim_slots,
                "blocks": [list(b) for b in self.blocks],
                "size": self.size,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, payload: str) -> "FeatureLayout":
        data = json.loads(payload)
        return cls(
            mode=data["mode"],
            block_dim=data["block_dim"],
            engines=tuple(data["engines"]),
            sources=tuple(data["sources"]),
            sim_slots=data["sim_slots"],
            blocks=[tuple(b) for b in data["blocks"]],
        )


@dataclass
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout
    present: dict[str, bool]


def build_layout(mode: str, block_dim: int, engines, sources, with_hidden: bool) -> FeatureLayout:
    slots = _engine_slots(engines)
    blocks = [("similarities", 0, SIM_BLOCK_SIZE)]
    offset = SIM_BLOCK_SIZE
    for name in EMBED_BLOCKS:
        blocks.append((name, offset, block_dim))
        offset += block_dim
    if with_hidden:
        blocks.append(("hidden", offset, HIDDEN_SIZE))
    dummy = SimilarityBlock(values=np.zeros(SIM_BLOCK_SIZE), present={}, engines=slots)
    return FeatureLayout(
        mode=mode,
        block_dim=block_dim,
        engines=slots,
        sources=tuple(sources),
        sim_slots=dummy.slot_names(),
        blocks=blocks,
    )


def select_branch_texts(
    claim: str,
    bundle: EvidenceBundle,
    idf: IdfTable,
    table: EmbeddingTable,
    engines=("google", "bing"),
    sources=("snippet", "page"),
) -> dict[str, str | None]:
    """Best snippet and best page triplet per engine slot, or None where
    that kind of evidence is absent or disabled."""
    slots = _engine_slots(engines)
    texts: dict[str, str | None] = {"claim": claim}
    for label, engine in zip(("a", "b"), slots):
        hits = bundle.results.get(engine, []) if engine else []
        snippet_text = None
        page_text = None
        if engine and "snippet" in sources:
            try:
                snippet_text = best_snippet(claim, hits, idf, table).text
            except NoMatchError:
                pass
        if engine and "page" in sources:
            page_matches = []
            for r in hits:
                if not r.page_text:
                    continue
                try:
                    page_matches.append(best_triplet(claim, r.page_text, idf, table, engine))
                except NoMatchError:
                    continue
            if page_matches:
                page_text = max(page_matches, key=lambda m: m.score).text
        texts[f"snippet_{label}"] = snippet_text
        texts[f"page_{label}"] = page_text
    return texts


def assemble_features(
    claim: str,
    bundle: EvidenceBundle,
    mode: str,
    idf: IdfTable,
    table: EmbeddingTable,
    engines=("google", "bing"),
    sources=("snippet", "page"),
    branch_vectors: dict[str, np.ndarray] | None = None,
    hidden: np.ndarray | None = None,
) -> FeatureVector:
    """Fixed layout: [similarities(24) | claim | snippet_a | page_a |
    snippet_b | page_b | hidden?]. In avg_embeddings mode the text blocks
    are averaged word vectors (d each); in the lstm modes they are the
    encoder outputs supplied by the caller (2H each)."""
    if mode not in MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    sim_block = aggregate_similarities(claim, bundle, idf, table, engines, sources)
    with_hidden = mode == "lstm_plus_hidden"

    if mode == "avg_embeddings":
        block_dim = table.dimension
        texts = select_branch_texts(claim, bundle, idf, table, engines, sources)
        vectors = {}
        for name in EMBED_BLOCKS:
            text_value = texts.get(name)
            if text_value is None:
                vectors[name] = np.zeros(block_dim)
            else:
                vectors[name] = avg_embedding(tokenize(text_value), table).vector
    else:
        if branch_vectors is None:
            raise ValueError(f"mode {mode!r} requires encoder outputs from a trained network")
        missing = [name for name in EMBED_BLOCKS if name not in branch_vectors]
        if missing:
            raise ValueError(f"missing encoder outputs for blocks: {missing}")
        dims = {len(np.asarray(branch_vectors[n]).ravel()) for n in EMBED_BLOCKS}
        if len(dims) != 1:
            raise ValueError("encoder output blocks must share one dimension")
        block_dim = dims.pop()
        vectors = {n: np.asarray(branch_vectors[n], dtype=np.float64).ravel() for n in EMBED_BLOCKS}

    layout = build_layout(mode, block_dim, engines, sources, with_hidden)
    parts = [sim_block.values] + [vectors[n] for n in EMBED_BLOCKS]
    if with_hidden:
        if hidden is None:
            raise ValueError("mode 'lstm_plus_hidden' requires the network's hidden layer")
        hidden = np.asarray(hidden, dtype=np.float64).ravel()
        if hidden.shape[0] != HIDDEN_SIZE:
            raise ValueError(f"hidden layer must have {HIDDEN_SIZE} units")
        parts.append(hidden)
    values = np.concatenate(parts)
    return FeatureVector(values=values, layout=layout, present=dict(sim_block.present))


# --- feature file I/O ---------------------------------------------------------


def write_feature_file(path: str | Path, rows, layout: FeatureLayout) -> None:
    """One example per line: id<TAB>label<TAB>v1,v2,... with a sidecar
    layout JSON next to it."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for example_id, label, values in rows:
            joined = ",".join(repr(float(v)) for v in values)
            fh.write(f"{example_id}\t{label}\t{joined}\n")
    Path(str(path) + ".layout.json").write_text(layout.to_json(), "utf-8")


def read_feature_file(path: str | Path) -> tuple[list[tuple[str, str, np.ndarray]], FeatureLayout]:
    path = Path(path)
    layout = FeatureLayout.from_json(Path(str(path) + ".layout.json").read_text("utf-8"))
    rows = []
    for line in path.read_text("utf-8").splitlines():
        example_id, label, joined = line.split("\t")
        values = np.array([float(v) for v in joined.split(",")], dtype=np.float64)
        rows.append((example_id, label, values))
    return rows, layout
