"""Fine-tuning loop: grid sweep, loss alternation, early stopping."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import torch
from torch import nn

from . import report as report_mod
from .data import (STANCE_LABELS, EncodedDataset, build_word_tokenizer,
                   policy_registry, split_records)
from .model import ClassifierHarness, build_encoder, freeze_layers
from .spec import TrainSpec


def schedule_task(step: int, ratio=(3, 1)) -> str:
    """Task updated at 0-based ``step``: stance,stance,stance,policy repeating."""
    stance_share, policy_share = ratio
    return "stance" if step % (stance_share + policy_share) < stance_share else "policy"


@dataclass
class TrainResult:
    learning_rate: float
    dev_metric: float
    update_counts: dict
    reports: dict                      # task -> report dict (test split)
    dev_reports: dict = field(default_factory=dict)
    model: ClassifierHarness | None = None


def _predict(model, dataset, task, batch_size=64):
    model.eval()
    predictions = []
    with torch.no_grad():
        for start in range(0, len(dataset), batch_size):
            rows = torch.arange(start, min(start + batch_size, len(dataset)))
            input_ids, mask, types, _, _ = dataset.batch(rows)
            logits = model(input_ids, mask, types, task=task)
            predictions.append(logits.argmax(dim=1))
    model.train()
    return torch.cat(predictions)


def _evaluate(model, dataset, task, labels, spec, model_id) -> dict:
    predicted = _predict(model, dataset, task)
    gold = dataset.stance if task == "stance" else dataset.policy
    return report_mod.build_report(
        task, spec.lang, spec.setup, labels,
        gold.tolist(), predicted.tolist(), model_id, spec.seed,
    )


def _make_tokenizer(spec: TrainSpec, records):
    if spec.encoder_id.startswith("tiny-"):
        texts = [r["topic"] for r in records] + [r["comment"] for r in records]
        return build_word_tokenizer(texts)
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(spec.encoder_id)


def _train_one(spec: TrainSpec, lr: float, datasets, labels) -> TrainResult:
    torch.manual_seed(spec.seed)
    train_set, dev_set, test_set = datasets
    stance_labels, policy_labels = labels
    joint = spec.task == "joint"
    model = ClassifierHarness(
        build_encoder(spec.encoder_id, vocab_size=len(train_set.tokenizer_vocab)),
        stance_classes=len(stance_labels),
        policy_classes=len(policy_labels) if spec.task != "stance" else None,
    )
    if joint:
        freeze_layers(model, spec.freeze_depth)
    optimizer = torch.optim.AdamW(
        [p for p in model.parameters() if p.requires_grad], lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    model_id = f"{spec.encoder_id}|lr={lr}|torch={torch.__version__}"

    update_counts = {"stance": 0, "policy": 0}
    best_metric = float("-inf")
    best_state = None
    epochs_since_best = 0
    generator = torch.Generator().manual_seed(spec.seed)
    global_step = 0
    stopped = False

    for _epoch in range(spec.resolved_max_epochs()):
        order = torch.randperm(len(train_set), generator=generator)
        for start in range(0, len(train_set), spec.batch_size):
            if spec.max_steps is not None and global_step >= spec.max_steps:
                stopped = True
                break
            rows = order[start:start + spec.batch_size]
            input_ids, mask, types, stance_y, policy_y = train_set.batch(rows)
            if joint:
                task = schedule_task(global_step, spec.loss_ratio)
            else:
                task = spec.task
            logits = model(input_ids, mask, types, task=task)
            target = stance_y if task == "stance" else policy_y
            loss = loss_fn(logits, target)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            update_counts[task] += 1
            global_step += 1
        if stopped:
            break

        eval_task = "policy" if spec.task == "policy" else "stance"
        eval_labels = policy_labels if eval_task == "policy" else stance_labels
        dev_report = _evaluate(model, dev_set, eval_task, eval_labels, spec, model_id)
        metric = dev_report[spec.dev_metric()]
        if metric > best_metric:
            best_metric = metric
            best_state = copy.deepcopy(model.state_dict())
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= spec.patience:
                break

    if best_state is not None:
        model.load_state_dict(best_state)

    tasks = ("stance", "policy") if joint else (spec.task,)
    reports = {}
    dev_reports = {}
    for task in tasks:
        task_labels = stance_labels if task == "stance" else policy_labels
        reports[task] = _evaluate(model, test_set, task, task_labels, spec, model_id)
        dev_reports[task] = _evaluate(model, dev_set, task, task_labels, spec, model_id)
    dev_metric = best_metric if best_metric > float("-inf") else \
        dev_reports[tasks[0]][spec.dev_metric()]
    return TrainResult(
        learning_rate=lr,
        dev_metric=dev_metric,
        update_counts=update_counts,
        reports=reports,
        dev_reports=dev_reports,
        model=model,
    )


def run_grid(spec: TrainSpec, records) -> tuple:
    """Train one model per learning rate; return (results, index of best)."""
    tokenizer = _make_tokenizer(spec, records)
    stance_labels = list(STANCE_LABELS)
    policy_labels = policy_registry(records, spec.multilingual_labels)
    stance_index = {label: i for i, label in enumerate(stance_labels)}
    policy_index = {label: i for i, label in enumerate(policy_labels)}

    datasets = []
    for split in ("train", "dev", "test"):
        subset = split_records(records, split)
        dataset = EncodedDataset(tokenizer, subset, spec, stance_index, policy_index)
        dataset.tokenizer_vocab = tokenizer.get_vocab()
        datasets.append(dataset)

    results = [
        _train_one(spec, lr, tuple(datasets), (stance_labels, policy_labels))
        for lr in spec.learning_rates
    ]
    best = max(range(len(results)), key=lambda i: results[i].dev_metric)
    return results, best
