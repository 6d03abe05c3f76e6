import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modstance.corpus import (CorpusRecord, SplitPlan, anonymize, assign_splits,
                              compute_stats, emit_jsonl, load_jsonl, make_topic,
                              record_id, scrub_policy_mentions)
from modstance.errors import SchemaViolation, TooFewRecords
from modstance.wikitext import detect_signatures, extract_policy_links, policy_prefixes

EN = policy_prefixes("en")


def test_scrub_simple_link():
    assert scrub_policy_mentions("Fails [[WP:NOTE]] by a wide margin.", EN) == \
        "Fails by a wide margin."


def test_scrub_no_policies():
    assert scrub_policy_mentions("no policies here", EN) == "no policies here"


def test_scrub_piped_and_multiple():
    assert scrub_policy_mentions("per [[WP:V|verifiability]] and [[WP:RS]]", EN) == "per and"


def test_scrub_bare_tokens_and_case():
    assert scrub_policy_mentions("see WP:NOTE and wikipedia:Notability too", EN) == \
        "see and too"


def test_scrub_keeps_other_links():
    assert scrub_policy_mentions("merge into [[Vanity press]] per [[WP:NOT]]", EN) == \
        "merge into [[Vanity press]] per"


def test_anonymize_examples():
    text = "keep per above --[[User:Alice|Alice]] 12:01, 5 May 2007 (UTC)"
    sig, ts = detect_signatures(text, "en")
    assert anonymize(text, sig + ts) == "keep per above"
    assert anonymize("text with no spans", []) == "text with no spans"
    mid = "keep --[[User:Bob|Bob]] per the above argument"
    sig, ts = detect_signatures(mid, "en")
    assert anonymize(mid, sig + ts) == "keep per the above argument"


def test_make_topic_templates():
    assert make_topic("Scottish Nursery Nurses Strike", "en") == \
        "Deletion of Scottish Nursery Nurses Strike"
    assert make_topic("Fleur Klingelberger", "de") == "Löschung von Fleur Klingelberger"
    assert make_topic("Ferec", "tr") == "Ferec'in silinmesi"


@pytest.mark.parametrize("title,expected", [
    ("Kurtuluş Yolu", "Kurtuluş Yolu'nun silinmesi"),   # back rounded, vowel-final
    ("Emin Atlı", "Emin Atlı'nın silinmesi"),           # back unrounded, vowel-final
    ("Zekeriya Önge", "Zekeriya Önge'nin silinmesi"),   # front, vowel-final
    ("Sigortam.net", "Sigortam.net'in silinmesi"),      # front, consonant-final
    ("Bodrum", "Bodrum'un silinmesi"),                  # back rounded, consonant-final
    ("Üzüm", "Üzüm'ün silinmesi"),                      # front rounded, consonant-final
])
def test_turkish_genitive_harmony(title, expected):
    assert make_topic(title, "tr") == expected


def test_topic_override_wins():
    overrides = {"TRT 2": "TRT 2'nin silinmesi"}
    assert make_topic("TRT 2", "tr", overrides) == "TRT 2'nin silinmesi"


def _records(n, lang="en"):
    return [
        CorpusRecord(
            id=record_id(lang, f"Article {i}", 0), lang=lang,
            topic=f"Deletion of Article {i}", comment=f"comment {i}",
            stance="delete", policy="Wikipedia:Notability",
            policy_superset_id=0, split="train",
        )
        for i in range(n)
    ]


def test_split_shapes_en():
    out = assign_splits(_records(1000), SplitPlan(seed=3))
    counts = {s: sum(1 for r in out if r.split == s) for s in ("train", "test", "dev")}
    assert counts == {"train": 800, "test": 150, "dev": 50}


def test_split_turkish_minimum_test():
    out = assign_splits(_records(930, "tr"), SplitPlan(seed=3))
    counts = {s: sum(1 for r in out if r.split == s) for s in ("train", "test", "dev")}
    assert counts["test"] >= 200
    assert sum(counts.values()) == 930


def test_split_turkish_too_few():
    with pytest.raises(TooFewRecords):
        assign_splits(_records(50, "tr"), SplitPlan(seed=3))


def test_split_deterministic_and_partition():
    records = _records(400)
    first = assign_splits(records, SplitPlan(seed=11))
    second = assign_splits(list(reversed(records)), SplitPlan(seed=11))
    assert first == second
    other = assign_splits(records, SplitPlan(seed=12))
    assert other != first
    ids = [r.id for r in first]
    assert sorted(ids) == sorted(r.id for r in records)


def test_jsonl_roundtrip(tmp_path):
    records = _records(3)
    records[1] = replace(records[1], comment_raw="raw [[WP:NOTE]] text")
    path = tmp_path / "corpus.jsonl"
    emit_jsonl(records, path)
    assert load_jsonl(path) == records


def test_jsonl_scrubbed_variant_drops_raw(tmp_path):
    records = [replace(_records(1)[0], comment_raw="raw text")]
    path = tmp_path / "corpus.jsonl"
    emit_jsonl(records, path, include_raw=False)
    assert "comment_raw" not in path.read_text(encoding="utf-8")


def test_jsonl_bad_stance_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = {"id": "x", "lang": "en", "topic": "t", "comment": "c",
            "stance": "delete", "policy": "p", "policy_superset_id": 0,
            "split": "train"}
    bad = dict(good, stance="obliterate")
    path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    with pytest.raises(SchemaViolation) as err:
        load_jsonl(path)
    assert "line 2" in str(err.value)


def test_jsonl_unknown_field_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    obj = {"id": "x", "lang": "en", "topic": "t", "comment": "c",
           "stance": "delete", "policy": "p", "policy_superset_id": 0,
           "split": "train", "extra": 1}
    path.write_text(json.dumps(obj) + "\n", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        load_jsonl(path)


def test_jsonl_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_jsonl(path) == []


_record_strategy = st.builds(
    CorpusRecord,
    id=st.text(st.characters(min_codepoint=97, max_codepoint=122), min_size=4, max_size=16),
    lang=st.sampled_from(["en", "de", "tr"]),
    topic=st.text(max_size=40),
    comment=st.text(max_size=80),
    stance=st.sampled_from(["keep", "delete", "merge", "comment"]),
    policy=st.text(min_size=1, max_size=30),
    policy_superset_id=st.integers(min_value=0, max_value=10**6),
    split=st.sampled_from(["train", "test", "dev"]),
    comment_raw=st.none() | st.text(max_size=80),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(_record_strategy, max_size=8))
def test_jsonl_roundtrip_property(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("rt") / "corpus.jsonl"
    emit_jsonl(records, path)
    assert load_jsonl(path) == records


def test_compute_stats_single_record():
    stats = compute_stats(_records(1), {"en": 1})
    entry = stats.per_language["en"]
    assert entry["stance_counts"]["delete"] == 1
    assert entry["mention_rate"] == 1.0
    assert entry["policy_count"] == 1


def test_compute_stats_matches_hand_file(golden_dir):
    records = load_jsonl(golden_dir / "corpus20_en.jsonl")
    parsed = json.loads((golden_dir / "parsed_counts.json").read_text(encoding="utf-8"))
    stats = compute_stats(records, parsed)
    expected = json.loads((golden_dir / "stats_en.json").read_text(encoding="utf-8"))
    assert stats.per_language == expected


def test_pipeline_matches_golden(run_build, golden_dir):
    out = run_build()
    for lang in ("en", "de", "tr"):
        built = (out / f"{lang}.jsonl").read_text(encoding="utf-8")
        golden = (golden_dir / f"{lang}.jsonl").read_text(encoding="utf-8")
        assert built == golden, f"{lang} corpus deviates from golden"


def test_no_leakage_on_built_corpus(run_build):
    out = run_build()
    for lang in ("en", "de", "tr"):
        prefixes = policy_prefixes(lang)
        for record in load_jsonl(out / f"{lang}.jsonl"):
            assert extract_policy_links(record.comment, prefixes) == []


def test_fixture_stance_distribution_exact(run_build):
    out = run_build()
    expected = {
        "en": {"comment": 1, "delete": 4, "keep": 2, "merge": 1},
        "de": {"comment": 1, "delete": 2, "keep": 2, "merge": 1},
        "tr": {"comment": 2, "delete": 3, "keep": 2, "merge": 1},
    }
    for lang, want in expected.items():
        records = load_jsonl(out / f"{lang}.jsonl")
        got = {s: sum(1 for r in records if r.stance == s)
               for s in ("comment", "delete", "keep", "merge")}
        assert got == want


def test_unperturbed_variant_keeps_policy_mentions(run_build):
    out = run_build(extra=("--unperturbed",))
    records = load_jsonl(out / "en.unperturbed.jsonl")
    assert any("[[WP:" in (r.comment_raw or "") for r in records)
    for record in records:
        assert record.comment_raw is not None
        assert "[[User:" not in record.comment_raw  # still anonymized
