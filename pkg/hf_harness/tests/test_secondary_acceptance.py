"""Secondary acceptance: frozen layers, 3:1 counting, subsample fine-tune,
and report compatibility with the primary validator."""

import json
import subprocess
import sys
import time

import pytest
import torch

from hf_harness.data import STANCE_LABELS, read_corpus, split_records
from hf_harness.model import ClassifierHarness, build_encoder, layer_state_snapshot, layers_unchanged
from hf_harness.report import build_report, confusion_counts, macro_f1, save_report
from hf_harness.spec import TrainSpec
from hf_harness.train import run_grid, schedule_task


def test_alternation_counting_over_4000_steps(small_corpus_path):
    records = read_corpus(small_corpus_path)
    spec = TrainSpec(encoder_id="tiny-2x16", task="joint", lang="en",
                     setup="multitask", learning_rates=(5e-4,),
                     max_epochs=10**9, patience=10**9, max_length=16,
                     seed=2, max_steps=4000)
    start = time.perf_counter()
    results, best = run_grid(spec, records)
    counts = results[best].update_counts
    assert counts == {"stance": 3000, "policy": 1000}
    print(f"[ACCEPTANCE/secondary] 3:1 alternation over 4000 steps: PASS "
          f"({time.perf_counter() - start:.1f}s)")


def test_frozen_layer_invariance(small_corpus_path):
    records = read_corpus(small_corpus_path)
    spec = TrainSpec(encoder_id="tiny-7x16", task="joint", lang="en",
                     setup="multitask", learning_rates=(5e-4,),
                     max_epochs=1, max_length=16, seed=9, max_steps=40)
    results, best = run_grid(spec, records)
    model = results[best].model
    torch.manual_seed(spec.seed)
    reference = ClassifierHarness(
        build_encoder("tiny-7x16", vocab_size=model.encoder.config.vocab_size), 4, 1)
    assert layers_unchanged(model, spec.freeze_depth,
                            layer_state_snapshot(reference, spec.freeze_depth))
    print("[ACCEPTANCE/secondary] frozen-layer bitwise invariance: PASS")


def test_one_epoch_subsample_beats_majority(subsample_corpus_path, tmp_path):
    start = time.perf_counter()
    records = read_corpus(subsample_corpus_path)
    spec = TrainSpec(encoder_id="tiny-8x64", task="stance", lang="en",
                     setup="single", learning_rates=(5e-4,),
                     max_epochs=1, max_length=48, seed=13)
    results, best = run_grid(spec, records)
    report = results[best].reports["stance"]

    test = split_records(records, "test")
    stance_index = {label: i for i, label in enumerate(STANCE_LABELS)}
    gold = [stance_index[r["stance"]] for r in test]
    train_labels = [stance_index[r["stance"]] for r in split_records(records, "train")]
    majority = max(set(train_labels), key=train_labels.count)
    majority_f1 = macro_f1(confusion_counts(gold, [majority] * len(gold), 4))

    margin = report["macro_f1"] - majority_f1
    assert margin >= 0.15, (report["macro_f1"], majority_f1)

    save_report(report, tmp_path / "subsample_report.json")
    print(f"[ACCEPTANCE/secondary] 1-epoch 10k fine-tune: PASS "
          f"(macro-F1 {report['macro_f1']:.3f} vs majority {majority_f1:.3f}, "
          f"{time.perf_counter() - start:.0f}s)")


def test_emitted_report_passes_primary_validator(small_corpus_path, tmp_path):
    records = read_corpus(small_corpus_path)
    spec = TrainSpec(encoder_id="tiny-2x16", task="stance", lang="en",
                     learning_rates=(5e-4,), max_epochs=1, max_length=16,
                     seed=4, max_steps=30)
    results, best = run_grid(spec, records)
    report = results[best].reports["stance"]
    assert set(report["per_label_f1"].keys()) == set(STANCE_LABELS)
    assert len(report["confusion"]["labels"]) == 4

    path = tmp_path / "report.json"
    save_report(report, path)
    proc = subprocess.run(
        [sys.executable, "-m", "modstance.cli", "eval", "--report", str(path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    validated = json.loads(proc.stdout)
    assert validated["valid"] is True
    assert validated["macro_f1"] == pytest.approx(report["macro_f1"], abs=1e-9)
    print("[ACCEPTANCE/secondary] report schema + macro-F1 revalidation: PASS")
