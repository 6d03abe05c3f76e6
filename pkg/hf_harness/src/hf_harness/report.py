"""Evaluation reports in the shared JSON schema (schema_version 1).

Metric conventions mirror the corpus toolkit's validator exactly: macro-F1
averages per-label F1 over the full registry, with absent labels scoring 0,
so the validator's recomputation from the embedded confusion matrix matches
to machine precision.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def confusion_counts(gold_idx, pred_idx, n_labels: int) -> np.ndarray:
    counts = np.zeros((n_labels, n_labels), dtype=np.int64)
    for g, p in zip(gold_idx, pred_idx):
        counts[g, p] += 1
    return counts


def per_label_f1(counts: np.ndarray) -> np.ndarray:
    tp = np.diag(counts).astype(np.float64)
    denom = counts.sum(axis=0) + counts.sum(axis=1)
    return np.divide(2.0 * tp, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(counts: np.ndarray) -> float:
    return float(per_label_f1(counts).mean())


def accuracy(counts: np.ndarray) -> float:
    return float(np.trace(counts) / counts.sum())


def build_report(task, lang, setup, labels, gold_idx, pred_idx,
                 model_id, seed) -> dict:
    counts = confusion_counts(gold_idx, pred_idx, len(labels))
    scores = per_label_f1(counts)
    return {
        "schema_version": SCHEMA_VERSION,
        "task": task,
        "lang": lang,
        "setup": setup,
        "accuracy": accuracy(counts),
        "macro_f1": macro_f1(counts),
        "per_label_f1": {label: float(scores[i]) for i, label in enumerate(labels)},
        "confusion": {"labels": list(labels), "counts": counts.tolist()},
        "model_id": model_id,
        "seed": seed,
    }


def save_report(report: dict, path) -> None:
    Path(path).write_text(
        json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
