#!/usr/bin/env python3
"""Regenerate the bundled synthetic world.

Writes, deterministically for a fixed seed:
  src/veriscope/data/mini_embeddings_d8.txt   small word-vector table (d=8)
  src/veriscope/data/idf_corpus.txt           ~1000 reference documents
  src/veriscope/data/idf_table.tsv            precomputed idf table
  data/synth/dataset.jsonl                    200 rumor + 60 cQA examples
  data/synth/fixtures/{google,bing}/...       offline search fixtures

The fixture evidence is built so the two classes are separable: snippets
and pages for true examples echo the claim together with confirmation
vocabulary, false ones with debunking vocabulary, and those marker words
carry a distinctive embedding dimension. A few training claims only have
fixtures for a relaxed (shortened) query, and two have none at all, so
the relaxation and missing-evidence paths get exercised end to end.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from veriscope.querygen import build_idf, generate_query, relax  # noqa: E402
from veriscope.retrieve import fixture_key  # noqa: E402

SEED = 7

PEOPLE = [
    "Alden Marsh", "Petra Quill", "Ruben Calder", "Maren Voss",
    "Silas Thorne", "Ivy Lennox", "Oskar Brandt", "Lena Hartwig",
    "Tobias Rook", "Greta Falk", "Dorian Leach", "Hazel Winton",
    "Emil Sorrel", "Nadia Ferro", "Casper Blythe", "Odile Marchand",
]
PLACES = [
    "Norvale", "Brimport", "Eastmere", "Hollowford", "Gredale", "Larkspur",
    "Windmoor", "Ashcroft", "Fenbridge", "Quarrytown", "Maplegate", "Stonewick",
]
ORGS = [
    "Harbor Works", "Lumen Council", "Civic Trust", "Orchard Guild",
    "Beacon Society", "Granite Union", "Meridian Group", "Foundry Board",
]
NOUNS = [
    "museum", "bridge", "factory", "clock", "library", "statue", "reservoir",
    "orchard", "tramway", "theater", "archive", "observatory", "granary",
    "lighthouse", "foundry", "aqueduct",
]
VERBS = [
    "built", "opened", "closed", "banned", "approved", "restored", "demolished",
    "funded", "launched", "donated", "confiscated", "relocated", "expanded", "unveiled",
]
ADJS = ["historic", "abandoned", "famous", "massive", "ancient", "modern", "wooden", "iconic"]

CONFIRM = ["confirmed", "verified", "accurate", "official", "documented", "genuine"]
DEBUNK = ["false", "hoax", "debunked", "fabricated", "unfounded", "misleading"]

FILLER = [
    "records", "report", "local", "council", "project", "plan", "residents",
    "history", "newspaper", "notes", "story", "week", "account", "sources",
    "meeting", "budget", "survey", "garden", "market", "harvest", "winter",
    "summer", "festival", "committee", "charter", "ledger", "district",
    "village", "harbor", "workshop", "season", "archive", "region", "trade",
    "census", "journal", "volume", "chapter", "letter", "photograph",
]
SNIPPET_WORDS = [
    "officials", "investigators", "reporters", "city", "claim", "fact",
    "check", "rumor", "archives", "editors", "review", "statement",
    "evidence", "findings", "announcement", "site",
]
CQA_WORDS = [
    "ticket", "fare", "opens", "costs", "number", "service", "morning",
    "riyals", "customer", "office", "hotline", "schedule", "visitors",
    "permit", "renewal", "fee", "counter", "branch",
]

RELIABLE = ["cityledger.example", "archivepress.example", "civicrecord.example", "norvale-times.example"]
UNRELIABLE = ["rumormill.example", "clickbait.example", "gossipfeed.example"]
CQA_WHITELISTED = ["gulfinfo.example", "desertwire.example", "qatarportal.example"]
CQA_OFFLIST = ["forumchatter.example", "randomblog.example"]


def world_vocabulary() -> list[str]:
    words = []
    for name in PEOPLE + ORGS:
        words.extend(name.lower().split())
    words.extend(p.lower() for p in PLACES)
    words.extend(NOUNS + VERBS + ADJS + CONFIRM + DEBUNK + FILLER + SNIPPET_WORDS + CQA_WORDS)
    words.extend(["street", "question", "answer", "qatar"])
    seen, ordered = set(), []
    for w in words:
        if w not in seen:
            seen.add(w)
            ordered.append(w)
    return ordered


def write_embeddings(path: Path, nprng: np.random.Generator) -> None:
    vocab = world_vocabulary()
    lines = []
    for word in vocab:
        vec = nprng.normal(0.0, 0.35, size=8)
        if word in CONFIRM:
            vec[7] = 1.8 + nprng.normal(0.0, 0.05)
            vec[6] = 0.6 + nprng.normal(0.0, 0.05)
        elif word in DEBUNK:
            vec[7] = -1.8 + nprng.normal(0.0, 0.05)
            vec[6] = -0.6 + nprng.normal(0.0, 0.05)
        lines.append(word + " " + " ".join(f"{v:.4f}" for v in vec))
    path.write_text("\n".join(lines) + "\n", "utf-8")
    print(f"wrote {len(vocab)} x 8 embeddings to {path}")


def write_idf(corpus_path: Path, table_path: Path, rng: random.Random):
    """~1000 short documents: filler words are common (low idf), world
    nouns and places moderately rare, person names very rare."""
    common = FILLER + SNIPPET_WORDS + CQA_WORDS
    mid = NOUNS + VERBS + ADJS + [p.lower() for p in PLACES]
    rare = [w for name in PEOPLE + ORGS for w in name.lower().split()]
    docs = []
    for _ in range(1000):
        words = rng.sample(common, k=rng.randint(6, 10))
        if rng.random() < 0.45:
            words += rng.sample(mid, k=rng.randint(1, 3))
        if rng.random() < 0.02:
            words.append(rng.choice(rare))
        rng.shuffle(words)
        docs.append(" ".join(words))
    corpus_path.write_text("\n".join(docs) + "\n", "utf-8")
    idf = build_idf(docs)
    idf.save(table_path)
    print(f"wrote {len(docs)} docs to {corpus_path}; idf table to {table_path}")
    return idf


def rumor_claim(rng: random.Random) -> str:
    kind = rng.random()
    person = rng.choice(PEOPLE)
    place = rng.choice(PLACES)
    noun = rng.choice(NOUNS)
    verb = rng.choice(VERBS)
    adj = rng.choice(ADJS)
    year = rng.randint(1890, 2015)
    if kind < 0.35:
        return f"{person} {verb} the {adj} {noun} in {place} in {year}."
    if kind < 0.65:
        return f"The {adj} {noun} in {place} was {verb} by {person}."
    org = rng.choice(ORGS)
    return f"{org} {verb} a {adj} {noun} near {place} in {year}."


def claim_core(claim: str) -> str:
    return claim.rstrip(".")


def rumor_snippets(core: str, label: str, engine: str, rng: random.Random) -> list[str]:
    markers = CONFIRM if label == "true" else DEBUNK
    m = rng.sample(markers, 3)
    w = rng.sample(SNIPPET_WORDS, 3)
    if label == "true":
        first = f"{core}. City {w[0]} show the report is {m[0]} and {m[1]}."
        second = f"Officials called the {w[1]} {m[2]} after a review of the {w[2]}."
    else:
        first = f"Fact check: the claim that {core} is {m[0]}. Investigators labeled the story a {m[1]} rumor."
        second = f"Editors found the {w[1]} {m[2]} and traced the {w[2]} to a joke."
    return [first, second]


def rumor_page(core: str, label: str, rng: random.Random) -> str:
    markers = CONFIRM if label == "true" else DEBUNK
    m = rng.sample(markers, 3)
    fill = rng.sample(FILLER, 8)
    if label == "true":
        middle = (
            f"{core}. The account is {m[0]} and {m[1]} according to the city ledger. "
            f"Archivists keep the {m[2]} records on site."
        )
    else:
        middle = (
            f"{core}. That story is {m[0]} and was {m[1]} by investigators. "
            f"The {m[2]} rumor spread through local forums."
        )
    return (
        "<html><head><title>Archive report</title>"
        "<style>body { font-family: serif; }</style></head><body>"
        f"<p>Notes from the {fill[0]} {fill[1]} cover the {fill[2]} and the {fill[3]}.</p>"
        f"<p>{middle}</p>"
        "<script>var tracker = 1;</script>"
        f"<p>Readers sent {fill[4]} about the {fill[5]} and the {fill[6]} {fill[7]}.</p>"
        "</body></html>"
    )


def misleading_snippet(core: str, label: str, rng: random.Random) -> str:
    # opposite-polarity text on an unreliable domain; filtering drops it
    markers = DEBUNK if label == "true" else CONFIRM
    m = rng.sample(markers, 2)
    return f"Shocking: {core} is totally {m[0]}, insiders say it was {m[1]} all along."


def cqa_pair(rng: random.Random) -> tuple[str, str]:
    place = rng.choice(PLACES)
    kind = rng.random()
    if kind < 0.34:
        noun = rng.choice(["tramway", "museum", "library", "theater"])
        q = f"What is the {noun} ticket fare in {place}?"
        a = f"The {place} {noun} ticket costs {rng.randint(2, 40)} riyals."
    elif kind < 0.67:
        org = rng.choice(ORGS)
        q = f"What is the customer service number for {org} in {place}?"
        a = f"The {org} customer service hotline is {rng.randint(3000, 9999)} {rng.randint(1000, 9999)}."
    else:
        noun = rng.choice(["museum", "library", "archive", "observatory"])
        q = f"When does the {place} {noun} open for visitors?"
        a = f"It opens for visitors at {rng.randint(7, 10)} each morning."
    return q, a


def cqa_snippets(q: str, a: str, label: str, rng: random.Random) -> list[str]:
    markers = CONFIRM if label == "true" else DEBUNK
    m = rng.sample(markers, 3)
    core = claim_core(a)
    if label == "true":
        first = f"{core}. The office schedule is {m[0]} and {m[1]} on the portal."
        second = f"Visitors report the service counter keeps the {m[2]} fee list current."
    else:
        first = f"Readers asked whether {core.lower()}. That figure is {m[0]} and was {m[1]} by the branch office."
        second = f"The portal lists a different number; the posted one is {m[2]}."
    return [first, second]


def slugify(text: str, rng: random.Random) -> str:
    words = [w.lower() for w in text.split()[:4] if w.isalpha()]
    return "-".join(words) + f"-{rng.randint(100, 999)}"


def write_fixture(fix_dir: Path, engine: str, query_text: str, results: list[dict]) -> str:
    key = fixture_key(query_text)
    engine_dir = fix_dir / engine
    engine_dir.mkdir(parents=True, exist_ok=True)
    payload = {"query": query_text, "results": results}
    (engine_dir / f"{key}.json").write_text(json.dumps(payload, indent=1), "utf-8")
    return key


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=Path, default=ROOT)
    args = parser.parse_args()
    root = args.root

    rng = random.Random(SEED)
    nprng = np.random.default_rng(SEED)
    data_dir = root / "src" / "veriscope" / "data"
    synth_dir = root / "data" / "synth"
    fix_dir = synth_dir / "fixtures"
    synth_dir.mkdir(parents=True, exist_ok=True)

    write_embeddings(data_dir / "mini_embeddings_d8.txt", nprng)
    idf = write_idf(data_dir / "idf_corpus.txt", data_dir / "idf_table.tsv", rng)

    dataset = []
    used_keys = set()
    used_claims = set()

    # --- rumor examples: 132 false + 68 true, split 140/30/30 stratified
    per_label = {"false": 132, "true": 68}
    split_plan = {"false": [("train", 92), ("dev", 20), ("test", 20)],
                  "true": [("train", 48), ("dev", 10), ("test", 10)]}
    rows = []
    for label, count in per_label.items():
        for _ in range(count):
            claim = rumor_claim(rng)
            while claim in used_claims:
                claim = rumor_claim(rng)
            used_claims.add(claim)
            rows.append({"claim": claim, "label": label})
    rng.shuffle(rows)
    by_label = {"false": [r for r in rows if r["label"] == "false"],
                "true": [r for r in rows if r["label"] == "true"]}
    numbered = []
    for label, plan in split_plan.items():
        pool = by_label[label]
        idx = 0
        for split, count in plan:
            for _ in range(count):
                pool[idx]["split"] = split
                numbered.append(pool[idx])
                idx += 1
    rng.shuffle(numbered)

    # special retrieval paths, train split only
    train_rows = [r for r in numbered if r["split"] == "train"]
    for r in train_rows[:6]:
        r["special"] = "relax2"
    for r in train_rows[6:8]:
        r["special"] = "no_evidence"

    query_lengths = []
    for i, row in enumerate(numbered, start=1):
        example_id = f"rum-{i:04d}"
        dataset.append(
            {"id": example_id, "claim": row["claim"], "label": row["label"],
             "split": row["split"], "category": "rumor"}
        )
        query = generate_query(row["claim"], idf, origin_claim_id=example_id)
        query_lengths.append(len(query))
        special = row.get("special")
        if special == "no_evidence":
            continue
        lookup = query
        if special == "relax2":
            lookup = relax(relax(query))
        core = claim_core(row["claim"])
        for engine in ("google", "bing"):
            snips = rumor_snippets(core, row["label"], engine, rng)
            key = fixture_key(lookup.text)
            results = []
            for rank, snippet in enumerate(snips, start=1):
                page_name = f"{key[:16]}_r{rank}.html"
                page_html = rumor_page(core, row["label"], rng)
                (fix_dir / engine).mkdir(parents=True, exist_ok=True)
                (fix_dir / engine / page_name).write_text(page_html, "utf-8")
                results.append(
                    {"rank": rank,
                     "url": f"https://{rng.choice(RELIABLE)}/{slugify(core, rng)}",
                     "snippet": snippet,
                     "page_file": page_name}
                )
            results.append(
                {"rank": 3,
                 "url": f"https://{rng.choice(UNRELIABLE)}/{slugify(core, rng)}",
                 "snippet": misleading_snippet(core, row["label"], rng)}
            )
            write_fixture(fix_dir, engine, lookup.text, results)
            if (engine, key) in used_keys:
                raise SystemExit(f"fixture key collision for {example_id}")
            used_keys.add((engine, key))

    # --- cQA examples: 31 true + 29 false, split 42/9/9
    cqa_rows = []
    used_questions = set()
    for label, count in (("true", 31), ("false", 29)):
        for _ in range(count):
            q, a = cqa_pair(rng)
            while q in used_questions:
                q, a = cqa_pair(rng)
            used_questions.add(q)
            cqa_rows.append({"question": q, "answer": a, "label": label})
    rng.shuffle(cqa_rows)
    cqa_plan = {"true": [("train", 22), ("dev", 4), ("test", 5)],
                "false": [("train", 20), ("dev", 5), ("test", 4)]}
    for label, plan in cqa_plan.items():
        pool = [r for r in cqa_rows if r["label"] == label]
        idx = 0
        for split, count in plan:
            for _ in range(count):
                pool[idx]["split"] = split
                idx += 1

    for i, row in enumerate(cqa_rows, start=1):
        example_id = f"cqa-{i:04d}"
        dataset.append(
            {"id": example_id, "question": row["question"], "answer": row["answer"],
             "label": row["label"], "split": row["split"], "category": "cqa"}
        )
        claim = " ".join(f"{row['question']} {row['answer']}".split())
        query = generate_query(claim, idf, origin_claim_id=example_id)
        query_lengths.append(len(query))
        snips = cqa_snippets(row["question"], row["answer"], row["label"], rng)
        results = []
        for rank, snippet in enumerate(snips, start=1):
            results.append(
                {"rank": rank,
                 "url": f"https://{rng.choice(CQA_WHITELISTED)}/{slugify(claim, rng)}",
                 "snippet": snippet}
            )
        results.append(
            {"rank": 3,
             "url": f"https://{rng.choice(CQA_OFFLIST)}/{slugify(claim, rng)}",
             "snippet": f"Forum chatter about {claim_core(row['answer']).lower()} and other things."}
        )
        write_fixture(fix_dir, "google", query.text, results)

    with open(synth_dir / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for row in dataset:
            fh.write(json.dumps(row) + "\n")

    short = sum(1 for n in query_lengths if n < 5)
    print(f"wrote {len(dataset)} examples; query lengths min={min(query_lengths)} "
          f"max={max(query_lengths)} (<5 tokens: {short})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
