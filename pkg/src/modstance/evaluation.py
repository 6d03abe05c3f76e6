"""Classification metrics and the shared evaluation-report contract.

Macro-F1 averages per-label F1 over the *full* label registry: labels absent
from both gold and predictions contribute an F1 of 0. Reports are JSON with
a schema version; any producer (including the transformer harness) must emit
the same shape so this module can re-derive and verify its numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyMatrix, LengthMismatch, SchemaViolation, UnknownLabel

SCHEMA_VERSION = 1

TASKS = ("stance", "policy")
SETUPS = ("single", "multitask", "multilingual-single", "multilingual-multitask")


@dataclass
class ConfusionMatrix:
    labels: list           # fixed label order (the registry)
    counts: np.ndarray     # rows = gold, columns = predicted

    def total(self) -> int:
        return int(self.counts.sum())


def confusion(gold, predicted, labels) -> ConfusionMatrix:
    """Count (gold, predicted) pairs into a C x C matrix."""
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise LengthMismatch(f"{len(gold)} gold vs {len(predicted)} predicted")
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, predicted):
        if g not in index:
            raise UnknownLabel(f"gold label {g!r} not in registry")
        if p not in index:
            raise UnknownLabel(f"predicted label {p!r} not in registry")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels=list(labels), counts=counts)


def per_label_f1(cm: ConfusionMatrix) -> dict:
    """F1 per label: 2*TP / (column sum + row sum), 0 on a zero denominator."""
    tp = np.diag(cm.counts).astype(np.float64)
    denom = cm.counts.sum(axis=0) + cm.counts.sum(axis=1)
    f1 = np.divide(2.0 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return {label: float(f1[i]) for i, label in enumerate(cm.labels)}


def macro_f1(cm: ConfusionMatrix) -> float:
    """Mean of per-label F1 over the whole registry."""
    if cm.total() == 0:
        raise EmptyMatrix("confusion matrix has zero instances")
    scores = per_label_f1(cm)
    return float(sum(scores.values()) / len(cm.labels))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total() == 0:
        raise EmptyMatrix("confusion matrix has zero instances")
    return float(np.trace(cm.counts) / cm.total())


@dataclass
class EvalReport:
    task: str
    lang: str
    setup: str
    accuracy: float
    macro_f1: float
    per_label_f1: dict
    confusion: ConfusionMatrix
    model_id: str
    seed: int

    def to_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task": self.task,
            "lang": self.lang,
            "setup": self.setup,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_label_f1": dict(self.per_label_f1),
            "confusion": {
                "labels": list(self.confusion.labels),
                "counts": self.confusion.counts.tolist(),
            },
            "model_id": self.model_id,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_obj(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )


def make_report(task, lang, setup, gold, predicted, labels, model_id, seed) -> EvalReport:
    cm = confusion(gold, predicted, labels)
    return EvalReport(
        task=task, lang=lang, setup=setup,
        accuracy=accuracy(cm), macro_f1=macro_f1(cm),
        per_label_f1=per_label_f1(cm), confusion=cm,
        model_id=model_id, seed=seed,
    )


def validate_report(obj: dict, tolerance: float = 1e-9) -> EvalReport:
    """Check a report object against the schema and re-derive its metrics.

    The embedded confusion matrix is the source of truth: accuracy, macro-F1,
    and per-label F1 are recomputed from it and must agree with the stored
    values within ``tolerance``.
    """
    if not isinstance(obj, dict):
        raise SchemaViolation("report must be a JSON object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SchemaViolation(f"schema_version must be {SCHEMA_VERSION}")
    required = ("task", "lang", "setup", "accuracy", "macro_f1", "per_label_f1",
                "confusion", "model_id", "seed")
    missing = [f for f in required if f not in obj]
    if missing:
        raise SchemaViolation(f"missing fields {missing}")
    if obj["task"] not in TASKS:
        raise SchemaViolation(f"task {obj['task']!r} not in {TASKS}")
    if obj["setup"] not in SETUPS:
        raise SchemaViolation(f"setup {obj['setup']!r} not in {SETUPS}")
    conf = obj["confusion"]
    if not isinstance(conf, dict) or "labels" not in conf or "counts" not in conf:
        raise SchemaViolation("confusion must carry labels and counts")
    labels = conf["labels"]
    counts = np.asarray(conf["counts"], dtype=np.int64)
    if counts.shape != (len(labels), len(labels)):
        raise SchemaViolation("confusion counts must be square in the label count")
    if (counts < 0).any():
        raise SchemaViolation("confusion counts must be nonnegative")
    cm = ConfusionMatrix(labels=list(labels), counts=counts)
    expected_f1 = per_label_f1(cm)
    for label, value in expected_f1.items():
        stored = obj["per_label_f1"].get(label)
        if stored is None or abs(stored - value) > tolerance:
            raise SchemaViolation(
                f"per_label_f1[{label!r}] = {stored!r} disagrees with matrix ({value})"
            )
    expected_macro = macro_f1(cm)
    if abs(obj["macro_f1"] - expected_macro) > tolerance:
        raise SchemaViolation(
            f"macro_f1 {obj['macro_f1']} disagrees with matrix ({expected_macro})"
        )
    expected_acc = accuracy(cm)
    if abs(obj["accuracy"] - expected_acc) > tolerance:
        raise SchemaViolation(
            f"accuracy {obj['accuracy']} disagrees with matrix ({expected_acc})"
        )
    return EvalReport(
        task=obj["task"], lang=obj["lang"], setup=obj["setup"],
        accuracy=obj["accuracy"], macro_f1=obj["macro_f1"],
        per_label_f1=dict(obj["per_label_f1"]), confusion=cm,
        model_id=obj["model_id"], seed=obj["seed"],
    )


def load_report(path, tolerance: float = 1e-9) -> EvalReport:
    return validate_report(json.loads(Path(path).read_text(encoding="utf-8")), tolerance)
