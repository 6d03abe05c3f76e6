from __future__ import annotations

from pathlib import Path

import pytest

# Test setup glue only: the synthetic generator writes the corpus JSONL that
# the harness then consumes through its file interface.
from modstance.corpus import emit_jsonl
from modstance.synthetic import make_stance_corpus


@pytest.fixture(scope="session")
def small_corpus_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "en_small.jsonl"
    emit_jsonl(make_stance_corpus("en", 600, seed=8), path)
    return path


@pytest.fixture(scope="session")
def subsample_corpus_path(tmp_path_factory) -> Path:
    """10k English subsample for the fine-tune acceptance run."""
    path = tmp_path_factory.mktemp("corpus") / "en_10k.jsonl"
    emit_jsonl(make_stance_corpus("en", 10000, seed=17), path)
    return path
