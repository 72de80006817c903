import numpy as np
import pytest

from veriscope.embed import EmbeddingTable
from veriscope.querygen import IdfTable

REPO_ROOT = __import__("pathlib").Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def synth_dataset_path():
    return REPO_ROOT / "data" / "synth" / "dataset.jsonl"


@pytest.fixture(scope="session")
def synth_fixtures_dir():
    return REPO_ROOT / "data" / "synth" / "fixtures"


@pytest.fixture(scope="session")
def toy_table():
    """Deterministic d=4 table over a tiny vocabulary, for unit tests."""
    rng = np.random.default_rng(42)
    vocab = {f"w{i}": rng.normal(size=4) for i in range(20)}
    vocab["good"] = np.array([0.1, 0.0, 0.2, 1.5])
    vocab["bad"] = np.array([0.0, 0.1, -0.1, -1.5])
    return EmbeddingTable(dimension=4, vocab=vocab, source_name="toy")


@pytest.fixture(scope="session")
def flat_idf():
    """idf == 1.0 for every token: one document containing everything.

    ln((1+1)/(1+1)) + 1 = 1 for seen tokens; unseen tokens get
    ln(2) + 1, so tests that need strictly flat weights list their
    vocabulary here.
    """
    words = [f"w{i}" for i in range(20)] + list("abcdexyz") + ["good", "bad", "x", "y", "z"]
    return IdfTable(doc_count=1, df={w: 1 for w in words})
