"""Dataset ingestion, evaluation metrics, experiment orchestration over
the three classifiers (NN, SVM, SVM+NN), the cQA adaptation, and
single-claim prediction on trained artifacts."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import features as feats
from . import neural, svm as svm_mod
from .embed import EmbeddingTable, load_default_embeddings
from .errors import EmptyQueryError, FormatError, NoMatchError
from .neural import EncodedExample, NnModel, TextEncoder, TrainConfig
from .querygen import IdfTable, Query, generate_query, load_default_idf
from .retrieve import (
    CountingProvider,
    DomainPolicy,
    EvidenceBundle,
    FixturePageFetcher,
    FixtureProvider,
    LivePageFetcher,
    attach_page_texts,
    bundle_from_dict,
    bundle_to_dict,
    default_blacklist,
    default_cqa_whitelist,
    merge_bundles,
    retrieve_with_relaxation,
)
from .svm import SvmConfig, SvmModel

log = logging.getLogger(__name__)

LABELS = ("false", "true")
SPLITS = ("train", "dev", "test")
MODELS = ("nn", "svm", "svm+nn")
TASKS = ("rumor", "cqa")


@dataclass
class Example:
    id: str
    claim_text: str
    label: str  # "true" | "false"
    split: str  # "train" | "dev" | "test"
    question: str | None = None
    answer: str | None = None
    category: str | None = None

    @property
    def label_index(self) -> int:
        return 1 if self.label == "true" else 0

    @property
    def label_sign(self) -> float:
        return 1.0 if self.label == "true" else -1.0


def cqa_build_claim(question: str, answer: str) -> str:
    """Question text followed by the answer, whitespace normalized. This
    concatenation drives query generation and similarity computation."""
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    if not answer or not answer.strip():
        raise ValueError("answer must be non-empty")
    return " ".join(f"{question} {answer}".split())


def load_dataset(path: str | Path) -> list[Example]:
    """One JSON object per line. Claims may be given directly or, for cQA
    rows, built from the question and answer fields."""
    examples = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", line=lineno) from None
            example_id = obj.get("id")
            if not example_id:
                raise FormatError("missing id", line=lineno)
            if example_id in seen_ids:
                raise FormatError(f"duplicate id {example_id!r}", line=lineno)
            seen_ids.add(example_id)
            label = obj.get("label")
            if label not in LABELS:
                raise FormatError(f"unknown label {label!r} for id {example_id!r}", line=lineno)
            split = obj.get("split")
            if split not in SPLITS:
                raise FormatError(f"unknown split {split!r} for id {example_id!r}", line=lineno)
            question = obj.get("question")
            answer = obj.get("answer")
            if (question is None) != (answer is None):
                raise FormatError(
                    f"id {example_id!r} must carry both question and answer", line=lineno
                )
            claim = obj.get("claim")
            if claim is None:
                if question is None:
                    raise FormatError(f"id {example_id!r} has no claim text", line=lineno)
                try:
                    claim = cqa_build_claim(question, answer)
                except ValueError as exc:
                    raise FormatError(str(exc), line=lineno) from None
            examples.append(
                Example(
                    id=example_id,
                    claim_text=claim,
                    label=label,
                    split=split,
                    question=question,
                    answer=answer,
                    category=obj.get("category"),
                )
            )
    return examples


def dataset_summary(examples: list[Example]) -> dict:
    summary = {"total": len(examples), "splits": {}, "labels": {}}
    for split in SPLITS:
        summary["splits"][split] = sum(1 for e in examples if e.split == split)
    for label in LABELS:
        summary["labels"][label] = sum(1 for e in examples if e.label == label)
    return summary


# --- metrics -------------------------------------------------------------------


@dataclass
class MetricsReport:
    """Per-class precision/recall/F1 plus macro averages, in percent.
    A precision is absent when the class was never predicted; a recall is
    absent when the class never occurs in gold. Absent F1 counts as 0 in
    the macro average."""

    precision: dict[str, float | None]
    recall: dict[str, float | None]
    f1: dict[str, float]
    avg_recall: float
    avg_f1: float
    accuracy: float
    confusion: dict[str, int]

    def row(self, name: str) -> list[str]:
        def fmt(v):
            return "--" if v is None else f"{v:.1f}"

        return [
            name,
            fmt(self.precision["false"]),
            fmt(self.recall["false"]),
            fmt(self.f1["false"]),
            fmt(self.precision["true"]),
            fmt(self.recall["true"]),
            fmt(self.f1["true"]),
            fmt(self.avg_recall),
            fmt(self.avg_f1),
            fmt(self.accuracy),
        ]


METRICS_HEADER = [
    "model",
    "p_false",
    "r_false",
    "f1_false",
    "p_true",
    "r_true",
    "f1_true",
    "avg_r",
    "avg_f1",
    "acc",
]


def compute_metrics(gold: list[str], pred: list[str]) -> MetricsReport:
    if len(gold) != len(pred):
        raise ValueError(f"gold and pred lengths differ: {len(gold)} vs {len(pred)}")
    if not gold:
        raise ValueError("cannot score an empty prediction list")
    for value in list(gold) + list(pred):
        if value not in LABELS:
            raise ValueError(f"unknown label {value!r}")

    confusion = {f"{g}_{p}": 0 for g in LABELS for p in LABELS}
    for g, p in zip(gold, pred):
        confusion[f"{g}_{p}"] += 1

    precision: dict[str, float | None] = {}
    recall: dict[str, float | None] = {}
    f1: dict[str, float] = {}
    for cls in LABELS:
        predicted = sum(confusion[f"{g}_{cls}"] for g in LABELS)
        actual = sum(confusion[f"{cls}_{p}"] for p in LABELS)
        correct = confusion[f"{cls}_{cls}"]
        p_val = 100.0 * correct / predicted if predicted else None
        r_val = 100.0 * correct / actual if actual else None
        precision[cls] = p_val
        recall[cls] = r_val
        if p_val is None or r_val is None or (p_val + r_val) == 0.0:
            f1[cls] = 0.0
        else:
            f1[cls] = 2.0 * p_val * r_val / (p_val + r_val)

    avg_recall = sum((recall[c] or 0.0) for c in LABELS) / len(LABELS)
    avg_f1 = sum(f1[c] for c in LABELS) / len(LABELS)
    correct_total = sum(confusion[f"{c}_{c}"] for c in LABELS)
    accuracy = 100.0 * correct_total / len(gold)
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        avg_recall=avg_recall,
        avg_f1=avg_f1,
        accuracy=accuracy,
        confusion=confusion,
    )


def format_metrics_table(rows: list[tuple[str, MetricsReport]]) -> str:
    lines = ["\t".join(METRICS_HEADER)]
    for name, report in rows:
        lines.append("\t".join(report.row(name)))
    return "\n".join(lines)


def metrics_to_csv(rows: list[tuple[str, MetricsReport]]) -> str:
    lines = [",".join(METRICS_HEADER)]
    for name, report in rows:
        lines.append(",".join(report.row(name)))
    return "\n".join(lines) + "\n"


def baseline_rows(gold: list[str]) -> list[tuple[str, MetricsReport]]:
    """The constant all-false and all-true baselines on the same gold."""
    return [
        ("all_false", compute_metrics(gold, ["false"] * len(gold))),
        ("all_true", compute_metrics(gold, ["true"] * len(gold))),
    ]


# --- experiment configuration ---------------------------------------------------


@dataclass
class ExperimentConfig:
    model: str = "svm+nn"
    engines: str = "both"  # "google" | "bing" | "both" | "fixture"
    sources: str = "both"  # "snippets" | "pages" | "both"
    task: str = "rumor"
    seed: int = 13
    nn: TrainConfig = field(default_factory=TrainConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    grid_search: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.engines not in ("google", "bing", "both", "fixture"):
            raise ValueError(f"unknown engine selection {self.engines!r}")
        if self.sources not in ("snippets", "pages", "both"):
            raise ValueError(f"unknown source selection {self.sources!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "cqa":
            self.sources = "snippets"  # answers are checked against snippets only

    @property
    def engine_list(self) -> tuple[str, ...]:
        if self.engines == "both":
            return ("google", "bing")
        return (self.engines,)

    @property
    def source_list(self) -> tuple[str, ...]:
        if self.sources == "both":
            return ("snippet", "page")
        return ("snippet",) if self.sources == "snippets" else ("page",)

    @property
    def wants_pages(self) -> bool:
        return "page" in self.source_list

    def to_json(self) -> str:
        payload = {
            "model": self.model,
            "engines": self.engines,
            "sources": self.sources,
            "task": self.task,
            "seed": self.seed,
            "grid_search": self.grid_search,
            "nn": self.nn.__dict__,
            "svm": self.svm.__dict__,
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, payload: str) -> "ExperimentConfig":
        data = json.loads(payload)
        return cls(
            model=data["model"],
            engines=data["engines"],
            sources=data["sources"],
            task=data["task"],
            seed=data["seed"],
            grid_search=data.get("grid_search", False),
            nn=TrainConfig(**data["nn"]),
            svm=SvmConfig(**data["svm"]),
        )


def default_policy(task: str) -> DomainPolicy:
    return default_cqa_whitelist() if task == "cqa" else default_blacklist()


# --- evidence store -------------------------------------------------------------


class EvidenceStore:
    """Gathers and memoizes one evidence bundle per example: query
    generation, per-engine retrieval with relaxation, domain filtering,
    and (when pages are wanted) page text extraction."""

    def __init__(
        self,
        engines: tuple[str, ...],
        fixtures_dir: str | Path | None = None,
        policy: DomainPolicy | None = None,
        fetch_pages: bool = True,
        idf: IdfTable | None = None,
        providers: dict | None = None,
        page_fetcher=None,
        evidence_dir: str | Path | None = None,
    ):
        self.engines = tuple(engines)
        self.idf = idf if idf is not None else load_default_idf()
        if providers is None:
            if fixtures_dir is None:
                raise ValueError("either fixtures_dir or providers is required")
            providers = {e: FixtureProvider(fixtures_dir, e) for e in self.engines}
        self.providers = {e: CountingProvider(p) for e, p in providers.items()}
        self.policy = policy
        self.fetch_pages = fetch_pages
        if page_fetcher is None:
            page_fetcher = FixturePageFetcher() if fixtures_dir is not None else LivePageFetcher()
        self.page_fetcher = page_fetcher
        self.evidence_dir = Path(evidence_dir) if evidence_dir else None
        self._memo: dict[str, EvidenceBundle] = {}
        self.missing: list[str] = []

    @property
    def pages_fetched(self) -> int:
        return getattr(self.page_fetcher, "fetch_count", 0)

    @property
    def searches_issued(self) -> int:
        return sum(p.search_count for p in self.providers.values())

    def bundle_for(self, example: Example) -> EvidenceBundle:
        if example.id in self._memo:
            return self._memo[example.id]
        bundle = self._load_saved(example.id)
        if bundle is None:
            bundle = self._gather(example)
        if bundle.is_empty and example.id not in self.missing:
            self.missing.append(example.id)
        self._memo[example.id] = bundle
        return bundle

    def _gather(self, example: Example) -> EvidenceBundle:
        try:
            query = generate_query(example.claim_text, self.idf, origin_claim_id=example.id)
        except EmptyQueryError:
            log.warning("no query candidates for example %s", example.id)
            return EvidenceBundle(
                claim_id=example.id,
                query_used=Query(tokens=("n/a",), origin_claim_id=example.id),
                results={e: [] for e in self.engines},
                relaxations={e: 0 for e in self.engines},
            )
        bundles = [
            retrieve_with_relaxation(self.providers[e], query, self.policy)
            for e in self.engines
        ]
        bundle = merge_bundles(bundles)
        if self.fetch_pages:
            attach_page_texts(bundle.all_results(), self.page_fetcher)
        return bundle

    def _load_saved(self, example_id: str) -> EvidenceBundle | None:
        if self.evidence_dir is None:
            return None
        path = self.evidence_dir / f"{example_id}.json"
        if not path.exists():
            return None
        return bundle_from_dict(json.loads(path.read_text("utf-8")))

    def save_bundle(self, example: Example, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        bundle = self.bundle_for(example)
        path = directory / f"{example.id}.json"
        path.write_text(json.dumps(bundle_to_dict(bundle), indent=2), "utf-8")
        return path


# --- featurization ---------------------------------------------------------------


def branch_texts_for(
    example: Example,
    bundle: EvidenceBundle,
    config: ExperimentConfig,
    idf: IdfTable,
    table: EmbeddingTable,
) -> dict[str, str | None]:
    """Which text feeds which encoder branch. For rumor claims this is
    the claim plus best snippet/page-triplet per engine slot; for cQA the
    question and answer take the first two branches and the two best
    snippets the next two."""
    if config.task == "rumor":
        return feats.select_branch_texts(
            example.claim_text, bundle, idf, table, config.engine_list, config.source_list
        )
    hits = bundle.results.get(config.engine_list[0], [])
    try:
        top_two = feats.best_snippets(example.claim_text, hits, idf, table, k=2)
    except NoMatchError:
        top_two = []
    return {
        "claim": example.question,
        "page_a": example.answer,
        "snippet_a": top_two[0].text if top_two else None,
        "page_b": top_two[1].text if len(top_two) > 1 else None,
        "snippet_b": None,
    }


def encode_examples(
    examples: list[Example],
    store: EvidenceStore,
    config: ExperimentConfig,
    encoder: TextEncoder,
    table: EmbeddingTable,
) -> dict[str, EncodedExample]:
    encoded = {}
    for example in examples:
        bundle = store.bundle_for(example)
        sims = feats.aggregate_similarities(
            example.claim_text, bundle, store.idf, table, config.engine_list, config.source_list
        )
        texts = branch_texts_for(example, bundle, config, store.idf, table)
        encoded[example.id] = encoder.encode(example.id, example.label_index, texts, sims.values)
    return encoded


def assemble_for_example(
    example: Example,
    store: EvidenceStore,
    config: ExperimentConfig,
    table: EmbeddingTable,
    mode: str,
    nn_model: NnModel | None = None,
    encoded: EncodedExample | None = None,
) -> feats.FeatureVector:
    bundle = store.bundle_for(example)
    branch_vectors = None
    hidden = None
    if mode != "avg_embeddings":
        if nn_model is None or encoded is None:
            raise ValueError(f"feature mode {mode!r} requires a trained network")
        branch_vectors = neural.branch_encodings(nn_model, encoded)
        if mode == "lstm_plus_hidden":
            hidden = neural.hidden_embedding(nn_model, encoded)
    return feats.assemble_features(
        example.claim_text,
        bundle,
        mode,
        store.idf,
        table,
        engines=config.engine_list,
        sources=config.source_list,
        branch_vectors=branch_vectors,
        hidden=hidden,
    )


# --- experiment -------------------------------------------------------------------


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: MetricsReport
    predictions: dict[str, str]  # example id -> predicted label
    history: list[dict] | None
    nn_model: NnModel | None
    svm_model: SvmModel | None
    layout: feats.FeatureLayout | None
    missing_evidence: list[str]

    def metrics_rows(self) -> list[tuple[str, MetricsReport]]:
        return [(self.config.model, self.report)]


def run_experiment(
    config: ExperimentConfig,
    examples: list[Example],
    store: EvidenceStore,
    table: EmbeddingTable | None = None,
) -> ExperimentResult:
    """Train the configured model on the train (and, for the SVM, dev)
    split and score the test split. Examples with no evidence keep zeroed,
    masked feature blocks and are listed in the result. Deterministic for
    fixed (fixtures, config, seed)."""
    table = table if table is not None else load_default_embeddings()
    train = [e for e in examples if e.split == "train"]
    dev = [e for e in examples if e.split == "dev"]
    test = [e for e in examples if e.split == "test"]
    if not train or not test:
        raise ValueError("dataset must contain train and test examples")

    nn_config = replace(config.nn, seed=config.seed)
    encoder = TextEncoder(table, nn_config)

    history = None
    nn_model = None
    svm_model = None
    layout = None
    predictions: dict[str, str] = {}

    needs_nn = config.model in ("nn", "svm+nn")
    encoded = None
    if needs_nn:
        encoded = encode_examples(examples, store, config, encoder, table)
        nn_model, history = neural.nn_train(
            [encoded[e.id] for e in train],
            [encoded[e.id] for e in dev],
            nn_config,
            table,
        )

    if config.model == "nn":
        probs = neural.predict_proba(nn_model, [encoded[e.id] for e in test])
        for example, row in zip(test, probs):
            predictions[example.id] = "true" if row[1] >= row[0] else "false"
    else:
        mode = "avg_embeddings" if config.model == "svm" else "lstm_plus_hidden"
        vectors = {}
        for example in examples:
            fv = assemble_for_example(
                example,
                store,
                config,
                table,
                mode,
                nn_model=nn_model,
                encoded=encoded[example.id] if encoded else None,
            )
            vectors[example.id] = fv
            layout = fv.layout
        fit_examples = train + dev  # the SVM is fitted on train plus dev
        x_fit = np.stack([vectors[e.id].values for e in fit_examples])
        y_fit = np.array([e.label_sign for e in fit_examples])
        svm_config = config.svm
        if config.grid_search:
            svm_config, _ = svm_mod.grid_search_cv(x_fit, y_fit, seed=config.seed)
        svm_model = svm_mod.svm_train_smo(x_fit, y_fit, svm_config, seed=config.seed)
        x_test = np.stack([vectors[e.id].values for e in test])
        signs = svm_mod.svm_predict(svm_model, x_test)
        for example, sign in zip(test, signs):
            predictions[example.id] = "true" if sign > 0 else "false"

    gold = [e.label for e in test]
    pred = [predictions[e.id] for e in test]
    report = compute_metrics(gold, pred)
    return ExperimentResult(
        config=config,
        report=report,
        predictions=predictions,
        history=history,
        nn_model=nn_model,
        svm_model=svm_model,
        layout=layout,
        missing_evidence=list(store.missing),
    )


# --- artifacts and single-claim prediction ----------------------------------------


def save_artifacts(result: ExperimentResult, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(result.config.to_json(), "utf-8")
    if result.nn_model is not None:
        neural.save_nn(result.nn_model, out_dir / "nn_model.npz")
    if result.svm_model is not None:
        svm_mod.save_svm(result.svm_model, out_dir / "svm_model.npz")
    if result.layout is not None:
        (out_dir / "feature_layout.json").write_text(result.layout.to_json(), "utf-8")
    if result.history is not None:
        (out_dir / "history.json").write_text(json.dumps(result.history, indent=2), "utf-8")


def write_report_csv(result: ExperimentResult, gold: list[str], path: str | Path) -> None:
    rows = [(result.config.model, result.report)] + baseline_rows(gold)
    Path(path).write_text(metrics_to_csv(rows), "utf-8")


@dataclass
class TrainedPipeline:
    config: ExperimentConfig
    nn_model: NnModel | None
    svm_model: SvmModel | None

    @classmethod
    def load(cls, out_dir: str | Path) -> "TrainedPipeline":
        out_dir = Path(out_dir)
        config = ExperimentConfig.from_json((out_dir / "config.json").read_text("utf-8"))
        nn_path = out_dir / "nn_model.npz"
        svm_path = out_dir / "svm_model.npz"
        return cls(
            config=config,
            nn_model=neural.load_nn(nn_path) if nn_path.exists() else None,
            svm_model=svm_mod.load_svm(svm_path) if svm_path.exists() else None,
        )


def predict(
    claim_text: str,
    pipeline: TrainedPipeline,
    store: EvidenceStore,
    table: EmbeddingTable | None = None,
    question: str | None = None,
    answer: str | None = None,
) -> dict:
    """Run the full pipeline for one claim and report the label, the
    model confidence, the query actually used, and the best-matching
    evidence per engine. With no evidence at all, the prediction is still
    emitted from zeroed features and flagged low_evidence."""
    if not claim_text or not claim_text.strip():
        raise ValueError("claim must be non-empty")
    config = pipeline.config
    table = table if table is not None else load_default_embeddings()
    example = Example(
        id="adhoc",
        claim_text=claim_text,
        label="false",  # placeholder, never used for scoring
        split="test",
        question=question,
        answer=answer,
    )
    bundle = store.bundle_for(example)
    nn_config = replace(config.nn, seed=config.seed)
    encoder = TextEncoder(table, nn_config)
    sims = feats.aggregate_similarities(
        claim_text, bundle, store.idf, table, config.engine_list, config.source_list
    )
    texts = branch_texts_for(example, bundle, config, store.idf, table)
    encoded = encoder.encode(example.id, 0, texts, sims.values)

    if config.model == "nn":
        prob_true, _, _ = neural.nn_forward(pipeline.nn_model, encoded)
    else:
        mode = "avg_embeddings" if config.model == "svm" else "lstm_plus_hidden"
        fv = assemble_for_example(
            example, store, config, table, mode, nn_model=pipeline.nn_model, encoded=encoded
        )
        decision = svm_mod.svm_decision(pipeline.svm_model, fv.values)
        # logistic squash of the margin; uncalibrated but monotone
        prob_true = 1.0 / (1.0 + np.exp(-decision))

    label = "true" if prob_true >= 0.5 else "false"
    trace = {
        "query_used": bundle.query_used.tokens,
        "relaxations": dict(bundle.relaxations),
        "best": {},
    }
    for engine in config.engine_list:
        hits = bundle.results.get(engine, [])
        entry = {}
        try:
            match = feats.best_snippet(claim_text, hits, store.idf, table)
            entry["snippet"] = {"text": match.text, "score": match.score, "rank": match.rank}
        except NoMatchError:
            pass
        page_matches = []
        for r in hits:
            if not r.page_text:
                continue
            try:
                page_matches.append(feats.best_triplet(claim_text, r.page_text, store.idf, table, engine))
            except NoMatchError:
                continue
        if page_matches:
            match = max(page_matches, key=lambda m: m.score)
            entry["triplet"] = {"text": match.text, "score": match.score}
        trace["best"][engine] = entry
    return {
        "label": label,
        "confidence": float(prob_true if label == "true" else 1.0 - prob_true),
        "prob_true": float(prob_true),
        "low_evidence": bundle.is_empty,
        "evidence": trace,
    }
