"""Corpus JSONL loading and tokenization.

The harness consumes the builder's JSONL files as its only input surface.
Topic is segment A and comment segment B; when the pair overflows the
maximum length, the comment tail is truncated and the topic kept intact.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import PreTrainedTokenizerFast

from .spec import CorpusMissing, SchemaViolation, TrainSpec

STANCE_LABELS = ("comment", "delete", "keep", "merge")

_REQUIRED = ("id", "lang", "topic", "comment", "stance", "policy",
             "policy_superset_id", "split")

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def read_corpus(paths) -> list:
    """Load one or more corpus JSONL files."""
    records = []
    for path in ([paths] if isinstance(paths, (str, Path)) else list(paths)):
        path = Path(path)
        if not path.exists():
            raise CorpusMissing(str(path))
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                missing = [f for f in _REQUIRED if f not in obj]
                if missing:
                    raise SchemaViolation(f"{path}:{lineno}: missing {missing}")
                if obj["stance"] not in STANCE_LABELS:
                    raise SchemaViolation(f"{path}:{lineno}: bad stance {obj['stance']!r}")
                records.append(obj)
    return records


def split_records(records, split: str) -> list:
    return [r for r in records if r["split"] == split]


def policy_registry(records, multilingual: bool) -> list:
    if multilingual:
        return [str(i) for i in sorted({r["policy_superset_id"] for r in records})]
    return sorted({r["policy"] for r in records})


def policy_label(record, multilingual: bool) -> str:
    return str(record["policy_superset_id"]) if multilingual else record["policy"]


def build_word_tokenizer(texts, max_vocab: int = 20000) -> PreTrainedTokenizerFast:
    """Word-level WordPiece tokenizer over the corpus (offline substitute for
    a pretrained checkpoint's tokenizer)."""
    counts = Counter()
    for text in texts:
        counts.update(w.lower() for w in _WORD_RE.findall(text))
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    words = [w for w, _ in counts.most_common(max_vocab)]
    vocab = {token: i for i, token in enumerate(specials + words)}
    wordpiece = models.WordPiece(vocab, unk_token="[UNK]")
    tokenizer = Tokenizer(wordpiece)
    tokenizer.normalizer = normalizers.BertNormalizer(lowercase=True)
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
    )


def encode(tokenizer, topic: str, comment: str, max_length: int):
    """Tokenize one (topic, comment) pair, truncating the comment tail."""
    return tokenizer(
        topic, comment,
        truncation="only_second",
        max_length=max_length,
        padding="max_length",
        return_tensors="pt",
    )


class EncodedDataset:
    """Pre-tokenized tensors plus integer labels for one record set."""

    def __init__(self, tokenizer, records, spec: TrainSpec,
                 stance_index: dict, policy_index: dict):
        batch = tokenizer(
            [r["topic"] for r in records],
            [r["comment"] for r in records],
            truncation="only_second",
            max_length=spec.max_length,
            padding="max_length",
            return_tensors="pt",
        )
        self.input_ids = batch["input_ids"]
        self.attention_mask = batch["attention_mask"]
        self.token_type_ids = batch.get("token_type_ids")
        self.stance = torch.tensor(
            [stance_index[r["stance"]] for r in records], dtype=torch.long)
        self.policy = torch.tensor(
            [policy_index[policy_label(r, spec.multilingual_labels)] for r in records],
            dtype=torch.long)
        self.ids = [r["id"] for r in records]

    def __len__(self):
        return self.input_ids.shape[0]

    def batch(self, rows):
        types = self.token_type_ids[rows] if self.token_type_ids is not None else None
        return (self.input_ids[rows], self.attention_mask[rows], types,
                self.stance[rows], self.policy[rows])
