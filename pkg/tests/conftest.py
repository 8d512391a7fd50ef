import pathlib

import pytest

from lawlens.corpus import load_corpus
from lawlens.retrieval import build_index
from lawlens.taxonomy import parse_taxonomy

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "src/lawlens/fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def taxonomy():
    return parse_taxonomy((FIXTURES / "taxonomy.json").read_text())


@pytest.fixture(scope="session")
def corpus(taxonomy):
    return load_corpus((FIXTURES / "corpus.jsonl").read_text(), taxonomy)


@pytest.fixture(scope="session")
def index(corpus):
    return build_index(corpus)
