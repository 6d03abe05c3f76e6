"""Training specification for transformer runs."""

from __future__ import annotations

from dataclasses import dataclass, field


class CorpusMissing(Exception):
    """Corpus JSONL path does not exist."""


class SchemaViolation(Exception):
    """Record or report does not match the shared schema."""


# Default encoder checkpoints per setting. The "tiny-<layers>x<hidden>"
# form builds a randomly initialized compact encoder with a corpus-derived
# word vocabulary; it is the offline/CI substitute for the checkpoints.
DEFAULT_ENCODERS = {
    "en": "bert-base-cased",
    "de": "bert-base-german-cased",
    "tr": "dbmdz/bert-base-turkish-cased",
    "multilingual-a": "bert-base-multilingual-cased",
    "multilingual-b": "xlm-roberta-base",
}

# Small datasets get long epoch budgets; early stopping does the real work.
DEFAULT_MAX_EPOCHS = {"en": 5, "de": 500, "tr": 500, "multilingual": 5}


@dataclass
class TrainSpec:
    encoder_id: str
    task: str = "stance"                      # stance | policy | joint
    lang: str = "en"
    setup: str = "single"                     # matches the report schema
    learning_rates: tuple = (5e-4, 5e-5, 5e-6)
    batch_size: int = 8
    max_epochs: int | None = None             # None -> per-language default
    patience: int = 5
    freeze_depth: int = 6                     # encoder layers frozen in joint mode
    loss_ratio: tuple = (3, 1)                # stance : policy updates
    seed: int = 0
    max_length: int = 128
    multilingual_labels: bool = False         # policy labels = superset ids
    max_steps: int | None = None              # optional hard cap (testing)

    def resolved_max_epochs(self) -> int:
        if self.max_epochs is not None:
            return self.max_epochs
        key = "multilingual" if self.setup.startswith("multilingual") else self.lang
        return DEFAULT_MAX_EPOCHS.get(key, 5)

    def dev_metric(self) -> str:
        """Model selection follows the task: accuracy for policy alone,
        macro-F1 for stance and joint prediction."""
        return "accuracy" if self.task == "policy" else "macro_f1"
