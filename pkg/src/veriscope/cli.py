"""Command line interface.

Subcommands walk the pipeline end to end: gen-query, fetch-evidence,
featurize, train, evaluate, predict. Everything runs offline against a
fixtures directory; live engines are used only when credentials are set
and no --fixtures is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import features as feats
from . import neural, pipeline as pl, svm as svm_mod
from .embed import load_default_embeddings
from .errors import EmptyQueryError
from .neural import TrainConfig
from .querygen import generate_query, load_default_idf
from .retrieve import BingProvider, GoogleProvider
from .svm import SvmConfig


def _add_common(parser):
    parser.add_argument("--engine", choices=["google", "bing", "both", "fixture"], default="both")
    parser.add_argument("--source", choices=["snippets", "pages", "both"], default="both")
    parser.add_argument("--model", choices=["nn", "svm", "svm+nn"], default="svm+nn")
    parser.add_argument("--task", choices=["rumor", "cqa"], default="rumor")
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--fixtures", type=Path, default=None, help="fixture directory for offline search")
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--epochs", type=int, default=None, help="override the network's epoch count")
    parser.add_argument("--grid-search", action="store_true", help="grid-search SVM hyperparameters")


def _config(args) -> pl.ExperimentConfig:
    nn = TrainConfig(seed=args.seed)
    if args.epochs is not None:
        nn = replace(nn, epochs=args.epochs)
    return pl.ExperimentConfig(
        model=args.model,
        engines=args.engine,
        sources=args.source,
        task=args.task,
        seed=args.seed,
        nn=nn,
        svm=SvmConfig(),
        grid_search=args.grid_search,
    )


def _store(args, config: pl.ExperimentConfig, evidence_dir=None) -> pl.EvidenceStore:
    policy = pl.default_policy(config.task)
    if args.fixtures is not None:
        return pl.EvidenceStore(
            engines=config.engine_list,
            fixtures_dir=args.fixtures,
            policy=policy,
            fetch_pages=config.wants_pages,
            evidence_dir=evidence_dir,
        )
    providers = {}
    for engine in config.engine_list:
        if engine == "google":
            providers[engine] = GoogleProvider()
        elif engine == "bing":
            providers[engine] = BingProvider()
        else:
            raise SystemExit("--engine fixture requires --fixtures DIR")
    return pl.EvidenceStore(
        engines=config.engine_list,
        providers=providers,
        policy=policy,
        fetch_pages=config.wants_pages,
        evidence_dir=evidence_dir,
    )


def cmd_gen_query(args) -> int:
    idf = load_default_idf()
    if args.claim:
        claims = [("claim", args.claim)]
    else:
        examples = pl.load_dataset(args.dataset)
        claims = [(e.id, e.claim_text) for e in examples]
    for claim_id, claim in claims:
        try:
            query = generate_query(claim, idf, origin_claim_id=claim_id)
            print(f"{claim_id}\t{query.text}")
        except EmptyQueryError:
            print(f"{claim_id}\t<no candidates>")
    return 0


def cmd_fetch_evidence(args) -> int:
    config = _config(args)
    store = _store(args, config)
    examples = pl.load_dataset(args.dataset)
    evidence_dir = args.out / "evidence"
    for example in examples:
        store.save_bundle(example, evidence_dir)
    print(f"wrote {len(examples)} bundles to {evidence_dir}")
    if store.missing:
        print(f"no evidence found for {len(store.missing)} examples: {store.missing}")
    return 0


def cmd_featurize(args) -> int:
    config = _config(args)
    store = _store(args, config, evidence_dir=args.out / "evidence")
    examples = pl.load_dataset(args.dataset)
    table = load_default_embeddings()
    mode = "avg_embeddings"
    nn_model = None
    encoded = {}
    if args.nn_checkpoint:
        nn_model = neural.load_nn(args.nn_checkpoint)
        mode = "lstm_plus_hidden"
        encoder = neural.TextEncoder(table, replace(config.nn, seed=config.seed))
        encoded = pl.encode_examples(examples, store, config, encoder, table)
    rows = []
    layout = None
    for example in examples:
        fv = pl.assemble_for_example(
            example, store, config, table, mode,
            nn_model=nn_model, encoded=encoded.get(example.id),
        )
        rows.append((example.id, example.label, fv.values))
        layout = fv.layout
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "features.tsv"
    feats.write_feature_file(path, rows, layout)
    print(f"wrote {len(rows)} x {layout.size} features to {path}")
    return 0


def cmd_train(args) -> int:
    config = _config(args)
    store = _store(args, config, evidence_dir=args.out / "evidence")
    examples = pl.load_dataset(args.dataset)
    result = pl.run_experiment(config, examples, store)
    pl.save_artifacts(result, args.out)
    print(f"saved artifacts to {args.out}")
    if result.missing_evidence:
        print(f"examples without evidence: {result.missing_evidence}")
    return 0


def cmd_evaluate(args) -> int:
    config = _config(args)
    store = _store(args, config, evidence_dir=args.out / "evidence")
    examples = pl.load_dataset(args.dataset)
    result = pl.run_experiment(config, examples, store)
    pl.save_artifacts(result, args.out)
    gold = [e.label for e in examples if e.split == "test"]
    rows = [(config.model, result.report)] + pl.baseline_rows(gold)
    print(pl.format_metrics_table(rows))
    csv_path = args.out / "metrics.csv"
    csv_path.write_text(pl.metrics_to_csv(rows), "utf-8")
    print(f"wrote {csv_path}")
    return 0


def cmd_predict(args) -> int:
    trained = pl.TrainedPipeline.load(args.model_dir)
    store = _store(args, trained.config)
    result = pl.predict(
        args.claim, trained, store, question=args.question, answer=args.answer
    )
    result["evidence"]["query_used"] = list(result["evidence"]["query_used"])
    print(json.dumps(result, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="veriscope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-query", help="print the search query for claims")
    p.add_argument("--dataset", type=Path)
    p.add_argument("--claim", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen_query)

    p = sub.add_parser("fetch-evidence", help="gather and persist evidence bundles")
    p.add_argument("--dataset", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fetch_evidence)

    p = sub.add_parser("featurize", help="write feature vectors to a TSV file")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--nn-checkpoint", type=Path, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the configured model and save artifacts")
    p.add_argument("--dataset", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="train and score on the test split")
    p.add_argument("--dataset", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict one claim with saved artifacts")
    p.add_argument("--claim", type=str, required=True)
    p.add_argument("--question", type=str, default=None)
    p.add_argument("--answer", type=str, default=None)
    p.add_argument("--model-dir", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
