import json

import pytest

from modstance import cli
from modstance.corpus import load_jsonl

pytestmark = pytest.mark.filterwarnings("ignore")


def _run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_build_is_byte_identical_across_runs(tmp_path, wiki_dir, curation_dir, capsys):
    outputs = []
    for run in ("one", "two"):
        out = tmp_path / run
        code, _, _ = _run(capsys, [
            "build", "--lang", "tr", "--seed", "7",
            "--fixtures", str(wiki_dir), "--cache", str(tmp_path / f"cache-{run}"),
            "--curation", str(curation_dir), "--out", str(out),
            "--min-count", "2", "--tr-min-test", "2",
        ])
        assert code == 0
        outputs.append((out / "tr.jsonl").read_bytes())
    assert outputs[0] == outputs[1]


def test_eval_perfect_predictions(tmp_path, golden_dir, capsys):
    gold = golden_dir / "en.jsonl"
    preds = tmp_path / "preds.jsonl"
    with preds.open("w", encoding="utf-8") as fh:
        for record in load_jsonl(gold):
            fh.write(json.dumps({"id": record.id, "label": record.stance}) + "\n")
    report_path = tmp_path / "report.json"
    code, out, _ = _run(capsys, [
        "eval", "--gold", str(gold), "--pred", str(preds), "--task", "stance",
        "--out", str(report_path),
    ])
    assert code == 0
    payload = json.loads(out)
    assert payload["accuracy"] == 1.0
    assert payload["macro_f1"] == 1.0

    code, out, _ = _run(capsys, ["eval", "--report", str(report_path)])
    assert code == 0
    assert json.loads(out)["valid"] is True


def test_eval_report_validation_failure(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "task": "stance"}), encoding="utf-8")
    code, _, err = _run(capsys, ["eval", "--report", str(bad)])
    assert code == 3
    assert json.loads(err)["error"] == "SchemaViolation"


def test_stats_matches_golden_file(golden_dir, tmp_path, capsys):
    code, out, _ = _run(capsys, [
        "stats", "--lang", "en", "--data", str(golden_dir / "corpus20_en.jsonl"),
        "--parsed-counts", str(golden_dir / "parsed_counts.json"),
        "--out", str(tmp_path / "stats.json"),
    ])
    assert code == 0
    expected = json.loads((golden_dir / "stats_en.json").read_text(encoding="utf-8"))
    assert json.loads(out) == expected
    assert json.loads((tmp_path / "stats.json").read_text(encoding="utf-8")) == expected


def test_align_subcommand(tmp_path, wiki_dir, curation_dir, capsys):
    out = tmp_path / "corpus"
    code, _, _ = _run(capsys, [
        "build", "--lang", "en,de,tr", "--seed", "7", "--fixtures", str(wiki_dir),
        "--cache", str(tmp_path / "cache"), "--curation", str(curation_dir),
        "--out", str(out), "--min-count", "2", "--tr-min-test", "2",
    ])
    assert code == 0
    code, stdout, _ = _run(capsys, [
        "align", "--registries",
        str(out / "registry_en.json"), str(out / "registry_de.json"),
        str(out / "registry_tr.json"),
        "--fixtures", str(wiki_dir), "--cache", str(tmp_path / "cache"),
        "--out", str(tmp_path / "alignment.json"),
    ])
    assert code == 0
    assert json.loads(stdout)["superset_size"] == 4


def test_train_predict_salient_cycle(tmp_path, capsys):
    from modstance.corpus import emit_jsonl
    from modstance.synthetic import make_stance_corpus

    corpus_path = tmp_path / "corpus.jsonl"
    emit_jsonl(make_stance_corpus("en", 400, seed=5), corpus_path)
    model_path = tmp_path / "model.json"
    code, _, _ = _run(capsys, [
        "train", "--data", str(corpus_path), "--task", "stance",
        "--out", str(model_path), "--epochs", "30", "--lr", "2.0", "--seed", "5",
    ])
    assert code == 0

    preds_path = tmp_path / "preds.jsonl"
    code, _, _ = _run(capsys, [
        "predict", "--model", str(model_path), "--data", str(corpus_path),
        "--out", str(preds_path),
    ])
    assert code == 0
    assert sum(1 for _ in preds_path.open()) == 400

    code, out, _ = _run(capsys, [
        "eval", "--gold", str(corpus_path), "--pred", str(preds_path),
    ])
    assert code == 0
    assert json.loads(out)["accuracy"] > 0.8

    code, out, _ = _run(capsys, [
        "salient", "--model", str(model_path), "--label", "delete", "--k", "5",
    ])
    assert code == 0
    assert len(json.loads(out)["positive"]) == 5


def test_train_joint_task(tmp_path, capsys):
    from modstance.corpus import emit_jsonl
    from modstance.synthetic import make_stance_corpus

    corpus_path = tmp_path / "corpus.jsonl"
    emit_jsonl(make_stance_corpus("en", 200, seed=6), corpus_path)
    code, out, _ = _run(capsys, [
        "train", "--data", str(corpus_path), "--task", "joint",
        "--hidden", "16", "--epochs", "4", "--out", str(tmp_path / "mtl.json"),
    ])
    assert code == 0
    assert json.loads(out)["trained"] == "joint"


def test_lint_reports_residues(tmp_path, capsys):
    from dataclasses import replace

    from modstance.corpus import CorpusRecord, emit_jsonl

    clean = CorpusRecord(id="a1", lang="en", topic="Deletion of X",
                         comment="nothing suspicious", stance="keep",
                         policy="P", policy_superset_id=0, split="train")
    dirty = replace(clean, id="a2",
                    comment="keep --[[User:Zed|Zed]] 12:01, 5 May 2007 (UTC)")
    path = tmp_path / "corpus.jsonl"
    emit_jsonl([clean, dirty], path)
    code, out, _ = _run(capsys, ["lint", "--data", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["residues"]["user_link"]["count"] == 1
    assert payload["residues"]["user_link"]["sample"] == ["a2"]
    assert payload["residues"]["timestamp"]["count"] == 1


def test_report_unknown_tallies_vote_tokens(tmp_path, wiki_dir, curation_dir, capsys):
    out = tmp_path / "out"
    code, stdout, _ = _run(capsys, [
        "build", "--lang", "en", "--seed", "7", "--fixtures", str(wiki_dir),
        "--cache", str(tmp_path / "cache"), "--curation", str(curation_dir),
        "--out", str(out), "--min-count", "2", "--tr-min-test", "2",
        "--report-unknown",
    ])
    assert code == 0
    summary = json.loads(stdout)["build"]["en"]
    assert summary["unknown_tokens"] == {"wait": 1}
    assert summary["discarded"]["unknown_token"] == 1


def test_median_policies_per_retained_comment_is_one(run_build):
    import statistics

    from modstance.policies import canonicalize, load_registry
    from modstance.wikitext import extract_policy_links, policy_prefixes

    out = run_build(extra=("--unperturbed",))
    mention_counts = []
    for lang in ("en", "de", "tr"):
        registry = load_registry(out / f"registry_{lang}.json")
        prefixes = policy_prefixes(lang)
        for record in load_jsonl(out / f"{lang}.unperturbed.jsonl"):
            targets = extract_policy_links(record.comment_raw, prefixes)
            canonical = [c for c in (canonicalize(t, registry) for t in targets) if c]
            assert canonical, record.id
            mention_counts.append(len(canonical))
    assert statistics.median(mention_counts) == 1


def test_offline_without_cache_exits_4(tmp_path, capsys):
    code, _, err = _run(capsys, [
        "ingest", "--lang", "en", "--offline", "--cache", str(tmp_path / "nocache"),
    ])
    assert code == 4
    assert json.loads(err)["error"] == "NetworkUnavailable"


def test_unknown_config_key_exits_2(tmp_path, capsys):
    config = tmp_path / "run.conf"
    config.write_text("bogus_key = 1\n", encoding="utf-8")
    code, _, err = _run(capsys, [
        "stats", "--lang", "en", "--data", "x.jsonl", "--config", str(config),
    ])
    assert code == 2
    assert json.loads(err)["error"] == "ConfigError"


def test_config_values_apply_and_flags_win(tmp_path, golden_dir, capsys):
    config = tmp_path / "run.conf"
    config.write_text(
        f'data = "{golden_dir / "corpus20_en.jsonl"}"\nlang = "en"\n', encoding="utf-8")
    code, out, _ = _run(capsys, [
        "stats", "--lang", "en", "--config", str(config),
    ])
    assert code == 0
    assert json.loads(out)["en"]["records"] == 20


def test_missing_data_file_exits_3(tmp_path, capsys):
    code, _, err = _run(capsys, [
        "stats", "--lang", "en", "--data", str(tmp_path / "nope.jsonl"),
    ])
    assert code == 3


def test_help_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit) as exit_info:
        cli.main(["--help"])
    assert exit_info.value.code == 0
    out = capsys.readouterr().out
    for sub in ("ingest", "build", "stats", "align", "train", "predict",
                "eval", "salient", "lint"):
        assert sub in out
