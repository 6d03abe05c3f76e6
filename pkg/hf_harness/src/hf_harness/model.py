"""Encoder with classification heads over the pooled first token."""

from __future__ import annotations

import re

import torch
from torch import nn

_TINY_RE = re.compile(r"^tiny-(\d+)x(\d+)$")


def build_encoder(encoder_id: str, vocab_size: int):
    """A pretrained checkpoint, or a randomly initialized compact encoder
    for ``tiny-<layers>x<hidden>`` ids (the offline path)."""
    match = _TINY_RE.match(encoder_id)
    if match:
        from transformers import BertConfig, BertModel

        layers, hidden = int(match.group(1)), int(match.group(2))
        config = BertConfig(
            vocab_size=vocab_size,
            hidden_size=hidden,
            num_hidden_layers=layers,
            num_attention_heads=max(2, hidden // 32),
            intermediate_size=hidden * 2,
            max_position_embeddings=512,
        )
        return BertModel(config)
    from transformers import AutoModel

    return AutoModel.from_pretrained(encoder_id)


class ClassifierHarness(nn.Module):
    """Shared encoder, one linear head per task on the [CLS] representation."""

    def __init__(self, encoder, stance_classes: int, policy_classes: int | None):
        super().__init__()
        self.encoder = encoder
        hidden = encoder.config.hidden_size
        self.stance_head = nn.Linear(hidden, stance_classes)
        self.policy_head = (
            nn.Linear(hidden, policy_classes) if policy_classes else None
        )

    def pooled(self, input_ids, attention_mask, token_type_ids=None):
        kwargs = {"input_ids": input_ids, "attention_mask": attention_mask}
        if token_type_ids is not None:
            kwargs["token_type_ids"] = token_type_ids
        output = self.encoder(**kwargs)
        return output.last_hidden_state[:, 0]

    def forward(self, input_ids, attention_mask, token_type_ids=None, task="stance"):
        cls = self.pooled(input_ids, attention_mask, token_type_ids)
        if task == "stance":
            return self.stance_head(cls)
        if self.policy_head is None:
            raise ValueError("model built without a policy head")
        return self.policy_head(cls)


def encoder_layers(model: ClassifierHarness):
    return model.encoder.encoder.layer


def freeze_layers(model: ClassifierHarness, depth: int) -> None:
    """Freeze the first ``depth`` encoder layers (embeddings stay trainable)."""
    for layer in list(encoder_layers(model))[:depth]:
        for parameter in layer.parameters():
            parameter.requires_grad_(False)


def layer_state_snapshot(model: ClassifierHarness, depth: int) -> list:
    return [
        {name: tensor.detach().clone() for name, tensor in layer.state_dict().items()}
        for layer in list(encoder_layers(model))[:depth]
    ]


def layers_unchanged(model: ClassifierHarness, depth: int, snapshot: list) -> bool:
    current = layer_state_snapshot(model, depth)
    for before, after in zip(snapshot, current):
        for name in before:
            if not torch.equal(before[name], after[name]):
                return False
    return True
