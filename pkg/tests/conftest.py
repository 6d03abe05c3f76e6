from __future__ import annotations

from pathlib import Path

import pytest

from modstance import ingest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def wiki_dir() -> Path:
    return FIXTURES / "wiki"


@pytest.fixture
def curation_dir() -> Path:
    return FIXTURES / "curation"


@pytest.fixture
def golden_dir() -> Path:
    return FIXTURES / "golden"


@pytest.fixture
def run_build(tmp_path, wiki_dir, curation_dir):
    """Run the CLI build against the fixture wiki; returns the output dir."""

    def runner(langs="en,de,tr", seed=7, out=None, extra=()):
        from modstance import cli

        out_dir = Path(out) if out else tmp_path / "out"
        argv = [
            "build", "--lang", langs,
            "--fixtures", str(wiki_dir),
            "--cache", str(tmp_path / f"cache-{abs(hash((langs, seed)))}"),
            "--curation", str(curation_dir),
            "--out", str(out_dir),
            "--seed", str(seed),
            "--min-count", "2",
            "--tr-min-test", "2",
            *extra,
        ]
        code = cli.main(argv)
        assert code == 0, f"build failed with exit code {code}"
        return out_dir

    return runner


@pytest.fixture
def make_client(tmp_path, wiki_dir):
    """WikiClient factory wired to the fixture wiki with a temp cache."""

    def factory(language: str, offline: bool = False,
                cache_root: Path | None = None) -> ingest.WikiClient:
        return ingest.WikiClient(
            ingest.wiki_source(language),
            cache=ingest.PageCache(cache_root or tmp_path / "cache"),
            transport=ingest.FixtureTransport(wiki_dir),
            offline=offline,
        )

    return factory
