"""Desk-scale text classifiers over the corpus.

TF-IDF features (uni+bi-grams), a softmax-regression head trained by
mini-batch gradient descent, a shared-projection multi-task variant with a
3:1 stance/policy update schedule, the random and majority baselines, and
salient-feature inspection straight from the learned weights.

Training is single-threaded and bitwise deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateLabels, DimensionMismatch, EmptyVocabulary,
                     SchemaViolation, UnknownLabel)
from .labels import fold_case

MODEL_FORMAT_VERSION = 1

# Joins topic and comment into one classifier input.
TOPIC_SEPARATOR = "xxtopicsep"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, language: str = "en") -> list:
    """Unicode word tokens, language-aware lowercased, punctuation dropped."""
    return _TOKEN_RE.findall(fold_case(text, language))


def combine_topic_comment(topic: str, comment: str) -> str:
    return f"{topic} {TOPIC_SEPARATOR} {comment}"


@dataclass
class Vocabulary:
    terms: list                 # index -> term, dense 0..V-1
    term_index: dict            # term -> index
    doc_freq: np.ndarray        # index -> document frequency
    idf: np.ndarray             # index -> ln((1+N)/(1+df)) + 1
    n_docs: int
    ngram_range: tuple = (1, 2)
    min_df: int = 2
    language: str = "en"

    @property
    def size(self) -> int:
        return len(self.terms)


def _ngrams(tokens: list, ngram_range: tuple):
    lo, hi = ngram_range
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i:i + n])


def fit_vocabulary(texts, ngram_range=(1, 2), min_df: int = 2,
                   language: str = "en") -> Vocabulary:
    """Collect uni/bi-gram terms with document frequency >= min_df."""
    texts = list(texts)
    if not texts:
        raise EmptyVocabulary("no documents")
    df: dict = {}
    for text in texts:
        seen = set(_ngrams(tokenize(text, language), tuple(ngram_range)))
        for term in seen:
            df[term] = df.get(term, 0) + 1
    terms = sorted(t for t, c in df.items() if c >= min_df)
    if not terms:
        raise EmptyVocabulary(f"no term reached min_df={min_df}")
    doc_freq = np.array([df[t] for t in terms], dtype=np.int64)
    n_docs = len(texts)
    idf = np.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0
    return Vocabulary(
        terms=terms,
        term_index={t: i for i, t in enumerate(terms)},
        doc_freq=doc_freq,
        idf=idf,
        n_docs=n_docs,
        ngram_range=tuple(ngram_range),
        min_df=min_df,
        language=language,
    )


@dataclass
class FeatureVector:
    indices: np.ndarray   # strictly increasing
    weights: np.ndarray
    dim: int

    def norm(self) -> float:
        return float(np.sqrt((self.weights ** 2).sum()))


def featurize(text: str, vocab: Vocabulary) -> FeatureVector:
    """tf*idf with L2 normalization; out-of-vocabulary terms are ignored."""
    counts: dict = {}
    for term in _ngrams(tokenize(text, vocab.language), vocab.ngram_range):
        idx = vocab.term_index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return FeatureVector(indices=np.empty(0, dtype=np.int64),
                             weights=np.empty(0, dtype=np.float64),
                             dim=vocab.size)
    indices = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[i] for i in indices], dtype=np.float64)
    weights = tf * vocab.idf[indices]
    norm = np.sqrt((weights ** 2).sum())
    if norm > 0:
        weights = weights / norm
    return FeatureVector(indices=indices, weights=weights, dim=vocab.size)


@dataclass
class FeatureMatrix:
    """Compressed sparse rows; enough for mini-batch slicing."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple

    @classmethod
    def from_vectors(cls, vectors: list) -> "FeatureMatrix":
        if not vectors:
            raise EmptyVocabulary("no feature vectors")
        dim = vectors[0].dim
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        chunks_i, chunks_d = [], []
        for row, vec in enumerate(vectors):
            if vec.dim != dim:
                raise DimensionMismatch(f"row {row}: dim {vec.dim} != {dim}")
            indptr[row + 1] = indptr[row] + len(vec.indices)
            chunks_i.append(vec.indices)
            chunks_d.append(vec.weights)
        return cls(
            indptr=indptr,
            indices=np.concatenate(chunks_i) if chunks_i else np.empty(0, np.int64),
            data=np.concatenate(chunks_d) if chunks_d else np.empty(0, np.float64),
            shape=(len(vectors), dim),
        )

    def dense_rows(self, rows) -> np.ndarray:
        out = np.zeros((len(rows), self.shape[1]), dtype=np.float64)
        for k, row in enumerate(rows):
            lo, hi = self.indptr[row], self.indptr[row + 1]
            out[k, self.indices[lo:hi]] = self.data[lo:hi]
        return out


def featurize_all(texts, vocab: Vocabulary) -> FeatureMatrix:
    return FeatureMatrix.from_vectors([featurize(t, vocab) for t in texts])


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _softmax_grad_sums(weights, bias, x_dense, y_idx):
    """Unnormalized per-batch sums: (data loss sum, dW sum, db sum)."""
    z = x_dense @ weights.T + bias
    p = _softmax(z)
    n = x_dense.shape[0]
    loss_sum = -float(np.log(np.clip(p[np.arange(n), y_idx], 1e-300, None)).sum())
    dz = p
    dz[np.arange(n), y_idx] -= 1.0
    return loss_sum, dz.T @ x_dense, dz.sum(axis=0)


def softmax_loss_and_grads(weights, bias, x_dense, y_idx, l2):
    """Mean cross-entropy + L2 on weights, with analytic gradients."""
    n = x_dense.shape[0]
    loss_sum, dw_sum, db_sum = _softmax_grad_sums(weights, bias, x_dense, y_idx)
    loss = loss_sum / n + 0.5 * l2 * float((weights ** 2).sum())
    return loss, dw_sum / n + l2 * weights, db_sum / n


@dataclass
class SoftmaxHead:
    weights: np.ndarray   # C x V
    bias: np.ndarray      # C
    labels: list          # fixed label order
    loss_history: list = field(default_factory=list)


@dataclass
class TrainConfig:
    l2: float = 1e-4
    lr: float = 0.1
    epochs: int = 50
    batch: int = 64
    seed: int = 0
    shards: int = 1  # >1: thread-parallel gradient shards, fixed reduction order


def _label_indices(labels, label_order):
    if label_order is None:
        label_order = sorted(set(labels))
    index = {label: i for i, label in enumerate(label_order)}
    unknown = [l for l in labels if l not in index]
    if unknown:
        raise UnknownLabel(f"labels outside the registry: {sorted(set(unknown))[:5]}")
    return np.array([index[l] for l in labels], dtype=np.int64), list(label_order)


def _batch_grads(weights, bias, features, rows, y, l2, shards, pool):
    """Batch gradients, optionally sharded across threads.

    Shard results are reduced in shard-index order, so a fixed shard count
    is deterministic run to run.
    """
    n = len(rows)
    if shards <= 1 or pool is None or n < shards:
        x_dense = features.dense_rows(rows)
        return softmax_loss_and_grads(weights, bias, x_dense, y[rows], l2)
    bounds = [(i * n) // shards for i in range(shards + 1)]
    chunks = [rows[lo:hi] for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
    futures = [
        pool.submit(_softmax_grad_sums, weights, bias,
                    features.dense_rows(chunk), y[chunk])
        for chunk in chunks
    ]
    loss_sum = 0.0
    dw_sum = np.zeros_like(weights)
    db_sum = np.zeros_like(bias)
    for future in futures:  # fixed reduction order
        chunk_loss, chunk_dw, chunk_db = future.result()
        loss_sum += chunk_loss
        dw_sum += chunk_dw
        db_sum += chunk_db
    loss = loss_sum / n + 0.5 * l2 * float((weights ** 2).sum())
    return loss, dw_sum / n + l2 * weights, db_sum / n


def train_softmax(features: FeatureMatrix, labels, config: TrainConfig | None = None,
                  label_order=None) -> SoftmaxHead:
    """Mini-batch gradient descent on cross-entropy + L2.

    Single-threaded and bitwise deterministic by default; config.shards > 1
    opts into thread-parallel gradient accumulation with a fixed reduction
    order (still deterministic for that shard count). The learning rate
    halves whenever an epoch's average loss fails to improve, keeping the
    loss trajectory non-increasing at epoch granularity.
    """
    config = config or TrainConfig()
    y, label_order = _label_indices(labels, label_order)
    if len(set(y.tolist())) < 2:
        raise DegenerateLabels("training data has a single class")
    n, dim = features.shape
    n_classes = len(label_order)
    weights = np.zeros((n_classes, dim), dtype=np.float64)
    bias = np.zeros(n_classes, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    lr = config.lr
    history = []
    pool = None
    if config.shards > 1:
        from concurrent.futures import ThreadPoolExecutor
        pool = ThreadPoolExecutor(max_workers=config.shards)
    try:
        for _ in range(config.epochs):
            order = rng.permutation(n)
            batch_losses = []
            for start in range(0, n, config.batch):
                rows = order[start:start + config.batch]
                loss, d_weights, d_bias = _batch_grads(
                    weights, bias, features, rows, y, config.l2, config.shards, pool)
                weights -= lr * d_weights
                bias -= lr * d_bias
                batch_losses.append(loss)
            epoch_loss = float(np.mean(batch_losses))
            if history and epoch_loss > history[-1] + 1e-9:
                lr *= 0.5
            history.append(epoch_loss)
    finally:
        if pool is not None:
            pool.shutdown()
    return SoftmaxHead(weights=weights, bias=bias, labels=label_order,
                       loss_history=history)


@dataclass
class MTLConfig:
    hidden: int = 256
    l2: float = 1e-4
    lr: float = 0.1
    epochs: int = 20
    batch: int = 64
    seed: int = 0
    ratio: tuple = (3, 1)
    freeze_projection_after: int | None = None
    max_steps: int | None = None


@dataclass
class MultiTaskLinearModel:
    projection: np.ndarray      # h x V, shared by both heads
    stance_weights: np.ndarray  # 4 x h
    stance_bias: np.ndarray
    policy_weights: np.ndarray  # P x h
    policy_bias: np.ndarray
    stance_labels: list
    policy_labels: list
    ratio: tuple = (3, 1)
    update_counts: dict = field(default_factory=lambda: {"stance": 0, "policy": 0})
    loss_history: list = field(default_factory=list)

    def head(self, task: str):
        if task == "stance":
            return self.stance_weights, self.stance_bias, self.stance_labels
        if task == "policy":
            return self.policy_weights, self.policy_bias, self.policy_labels
        raise UnknownLabel(f"unknown task {task!r}")


def schedule_task(step: int, ratio=(3, 1)) -> str:
    """Task updated at 0-based ``step`` under the repeating S..SP schedule."""
    stance_share, policy_share = ratio
    if stance_share < 1 or policy_share < 1:
        raise SchemaViolation("ratio components must be positive integers")
    return "stance" if step % (stance_share + policy_share) < stance_share else "policy"


def mtl_loss_and_grads(projection, head_weights, head_bias, x_dense, y_idx, l2):
    """One task's loss and gradients through the shared tanh projection."""
    hidden = np.tanh(x_dense @ projection.T)
    z = hidden @ head_weights.T + head_bias
    p = _softmax(z)
    n = x_dense.shape[0]
    data_loss = -np.log(np.clip(p[np.arange(n), y_idx], 1e-300, None)).mean()
    loss = data_loss + 0.5 * l2 * (float((projection ** 2).sum())
                                   + float((head_weights ** 2).sum()))
    dz = p.copy()
    dz[np.arange(n), y_idx] -= 1.0
    dz /= n
    d_head = dz.T @ hidden + l2 * head_weights
    d_bias = dz.sum(axis=0)
    d_hidden = dz @ head_weights
    d_pre = d_hidden * (1.0 - hidden ** 2)
    d_projection = d_pre.T @ x_dense + l2 * projection
    return loss, d_projection, d_head, d_bias


def train_multitask(features: FeatureMatrix, stance_labels, policy_labels,
                    config: MTLConfig | None = None,
                    stance_order=None, policy_order=None) -> MultiTaskLinearModel:
    """Hard parameter sharing: one projection, two heads, 3:1 loss alternation.

    Each optimization step updates exactly one head (plus the shared
    projection, unless frozen) following the repeating stance,stance,stance,
    policy schedule.
    """
    config = config or MTLConfig()
    y_stance, stance_order = _label_indices(stance_labels, stance_order)
    y_policy, policy_order = _label_indices(policy_labels, policy_order)
    if len(set(y_stance.tolist())) < 2 or len(set(y_policy.tolist())) < 2:
        raise DegenerateLabels("each task needs at least two classes")
    if len(y_stance) != len(y_policy) or len(y_stance) != features.shape[0]:
        raise DimensionMismatch("stance/policy labels must cover every instance")

    n, dim = features.shape
    rng = np.random.default_rng(config.seed)
    projection = rng.uniform(-0.05, 0.05, size=(config.hidden, dim))
    model = MultiTaskLinearModel(
        projection=projection,
        stance_weights=np.zeros((len(stance_order), config.hidden)),
        stance_bias=np.zeros(len(stance_order)),
        policy_weights=np.zeros((len(policy_order), config.hidden)),
        policy_bias=np.zeros(len(policy_order)),
        stance_labels=stance_order,
        policy_labels=policy_order,
        ratio=tuple(config.ratio),
    )
    lr = config.lr
    step = 0
    for epoch in range(config.epochs):
        frozen = (config.freeze_projection_after is not None
                  and epoch >= config.freeze_projection_after)
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch):
            if config.max_steps is not None and step >= config.max_steps:
                model.loss_history.append(float(np.mean(epoch_losses)) if epoch_losses else 0.0)
                return model
            rows = order[start:start + config.batch]
            x_dense = features.dense_rows(rows)
            task = schedule_task(step, model.ratio)
            if task == "stance":
                y_batch, weights, bias = y_stance[rows], model.stance_weights, model.stance_bias
            else:
                y_batch, weights, bias = y_policy[rows], model.policy_weights, model.policy_bias
            loss, d_projection, d_head, d_bias = mtl_loss_and_grads(
                model.projection, weights, bias, x_dense, y_batch, config.l2)
            if not frozen:
                model.projection -= lr * d_projection
            weights -= lr * d_head
            bias -= lr * d_bias
            model.update_counts[task] += 1
            epoch_losses.append(loss)
            step += 1
        model.loss_history.append(float(np.mean(epoch_losses)))
    return model


def _check_dim(expected: int, vector: FeatureVector) -> None:
    if vector.dim != expected:
        raise DimensionMismatch(f"feature dim {vector.dim} != model dim {expected}")


def _logits_sparse(weights, bias, vector: FeatureVector) -> np.ndarray:
    if len(vector.indices):
        return weights[:, vector.indices] @ vector.weights + bias
    return bias.copy()


def probabilities(model, vector: FeatureVector, task: str = "stance") -> np.ndarray:
    if isinstance(model, SoftmaxHead):
        _check_dim(model.weights.shape[1], vector)
        z = _logits_sparse(model.weights, model.bias, vector)
    else:
        _check_dim(model.projection.shape[1], vector)
        weights, bias, _ = model.head(task)
        hidden = np.tanh(_logits_sparse(model.projection,
                                        np.zeros(model.projection.shape[0]), vector))
        z = weights @ hidden + bias
    return _softmax(z[None, :])[0]


def predict(model, vector: FeatureVector, task: str = "stance") -> str:
    """Argmax label; ties break toward the lowest label index."""
    p = probabilities(model, vector, task)
    labels = model.labels if isinstance(model, SoftmaxHead) else model.head(task)[2]
    return labels[int(np.argmax(p))]


def baseline_random(label_set, n: int, seed: int = 0) -> list:
    """i.i.d. uniform draws over the label set, deterministic per seed."""
    if n < 1:
        raise DegenerateLabels("n must be >= 1")
    labels = sorted(label_set) if not isinstance(label_set, (list, tuple)) else list(label_set)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(labels), size=n)
    return [labels[i] for i in picks]


@dataclass
class MajorityBaseline:
    label: str

    def predict(self, n: int) -> list:
        return [self.label] * n


def baseline_majority(train_labels, label_order=None) -> MajorityBaseline:
    """Constant predictor of the most frequent label; ties take the lowest index."""
    train_labels = list(train_labels)
    if not train_labels:
        raise DegenerateLabels("no training labels")
    if label_order is None:
        label_order = sorted(set(train_labels))
    counts = {label: 0 for label in label_order}
    for label in train_labels:
        if label not in counts:
            raise UnknownLabel(f"label {label!r} not in registry")
        counts[label] += 1
    best = max(label_order, key=lambda l: (counts[l], -label_order.index(l)))
    return MajorityBaseline(label=best)


def salient_features(head: SoftmaxHead, vocab: Vocabulary, label: str, k: int = 10):
    """Top-k positively and negatively weighted n-grams for one label.

    Ties are broken by term string, so a zero-weight head yields a stable
    alphabetical ordering.
    """
    if label not in head.labels:
        raise UnknownLabel(f"label {label!r} not in {head.labels}")
    row = head.weights[head.labels.index(label)]
    ranked = sorted(zip(vocab.terms, row.tolist()), key=lambda tw: (-tw[1], tw[0]))
    top_positive = ranked[:k]
    bottom = sorted(zip(vocab.terms, row.tolist()), key=lambda tw: (tw[1], tw[0]))
    top_negative = bottom[:k]
    return top_positive, top_negative


def save_model(model, path) -> None:
    """Versioned JSON container: vocabulary, weights, label registry."""
    if isinstance(model, tuple):
        model, vocab = model
    else:
        raise SchemaViolation("save_model expects (model, vocabulary)")
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "vocabulary": {
            "terms": vocab.terms,
            "doc_freq": vocab.doc_freq.tolist(),
            "n_docs": vocab.n_docs,
            "ngram_range": list(vocab.ngram_range),
            "min_df": vocab.min_df,
            "language": vocab.language,
        },
    }
    if isinstance(model, SoftmaxHead):
        obj["kind"] = "softmax"
        obj["labels"] = model.labels
        obj["weights"] = model.weights.tolist()
        obj["bias"] = model.bias.tolist()
    elif isinstance(model, MultiTaskLinearModel):
        obj["kind"] = "multitask"
        obj["stance_labels"] = model.stance_labels
        obj["policy_labels"] = model.policy_labels
        obj["projection"] = model.projection.tolist()
        obj["stance_weights"] = model.stance_weights.tolist()
        obj["stance_bias"] = model.stance_bias.tolist()
        obj["policy_weights"] = model.policy_weights.tolist()
        obj["policy_bias"] = model.policy_bias.tolist()
        obj["ratio"] = list(model.ratio)
    else:
        raise SchemaViolation(f"cannot serialize {type(model).__name__}")
    Path(path).write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")


def load_model(path):
    """Inverse of save_model: returns (model, vocabulary)."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise SchemaViolation("unsupported model format version")
    v = obj["vocabulary"]
    doc_freq = np.array(v["doc_freq"], dtype=np.int64)
    idf = np.log((1.0 + v["n_docs"]) / (1.0 + doc_freq)) + 1.0
    vocab = Vocabulary(
        terms=list(v["terms"]),
        term_index={t: i for i, t in enumerate(v["terms"])},
        doc_freq=doc_freq,
        idf=idf,
        n_docs=v["n_docs"],
        ngram_range=tuple(v["ngram_range"]),
        min_df=v["min_df"],
        language=v["language"],
    )
    if obj["kind"] == "softmax":
        model = SoftmaxHead(
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=np.array(obj["bias"], dtype=np.float64),
            labels=list(obj["labels"]),
        )
    elif obj["kind"] == "multitask":
        model = MultiTaskLinearModel(
            projection=np.array(obj["projection"], dtype=np.float64),
            stance_weights=np.array(obj["stance_weights"], dtype=np.float64),
            stance_bias=np.array(obj["stance_bias"], dtype=np.float64),
            policy_weights=np.array(obj["policy_weights"], dtype=np.float64),
            policy_bias=np.array(obj["policy_bias"], dtype=np.float64),
            stance_labels=list(obj["stance_labels"]),
            policy_labels=list(obj["policy_labels"]),
            ratio=tuple(obj["ratio"]),
        )
    else:
        raise SchemaViolation(f"unknown model kind {obj.get('kind')!r}")
    return model, vocab
