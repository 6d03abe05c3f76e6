"""Final corpus assembly: scrubbed, anonymized, labeled records with
deterministic splits, JSONL serialization, and dataset statistics."""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import diagnostics
from .align import PolicyAlignment, project_label
from .errors import SchemaViolation, TooFewRecords
from .labels import STANCE_LABELS, Discard, StanceLexicon, normalize_stance
from .policies import PolicyRegistry, canonicalize, select_primary_policy
from .wikitext import PolicyPrefixSet

SPLITS = ("train", "test", "dev")

_REQUIRED_FIELDS = ("id", "lang", "topic", "comment", "stance", "policy",
                    "policy_superset_id", "split")
_OPTIONAL_FIELDS = ("comment_raw",)

_TOPIC_TEMPLATES = {"en": "Deletion of {title}", "de": "Löschung von {title}"}

# Turkish vowel classes for genitive suffix harmony.
_TR_VOWELS = "aeıioöuüâîû"
_TR_SUFFIX = {"a": "ın", "ı": "ın", "â": "ın",
              "e": "in", "i": "in", "î": "in",
              "o": "un", "u": "un", "û": "un",
              "ö": "ün", "ü": "ün"}


@dataclass
class CorpusRecord:
    id: str
    lang: str
    topic: str
    comment: str
    stance: str
    policy: str
    policy_superset_id: int
    split: str
    comment_raw: str | None = None


@dataclass(frozen=True)
class SplitPlan:
    ratios: tuple = (0.80, 0.15, 0.05)  # train, test, dev
    seed: int = 0
    tr_min_test: int = 200


@dataclass
class DatasetStats:
    per_language: dict = field(default_factory=dict)

    def export(self) -> dict:
        return self.per_language

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.per_language, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _collapse_ws(text: str) -> str:
    return " ".join(text.split())


def _scrub_patterns(prefixes: PolicyPrefixSet):
    namespaces = "|".join(re.escape(p[2:-1]) for p in prefixes.prefixes)
    link_re = re.compile(r"\[\[\s*(?:%s)\s*:.*?\]\]" % namespaces, re.IGNORECASE)
    bare_re = re.compile(
        r"\b(?:%s)\s*:[\w/'‐-]+(?:\.[\w/'‐-]+)*" % namespaces,
        re.IGNORECASE | re.UNICODE,
    )
    return link_re, bare_re


def scrub_policy_mentions(text: str, prefixes: PolicyPrefixSet) -> str:
    """Remove policy links (piped or not) and bare shortcut tokens.

    Runs of whitespace collapse to a single space afterwards; stray
    punctuation left behind is accepted.
    """
    link_re, bare_re = _scrub_patterns(prefixes)
    text = link_re.sub(" ", text)
    text = bare_re.sub(" ", text)
    return _collapse_ws(text)


def remove_spans(text: str, spans) -> str:
    """Delete byte spans from the UTF-8 encoding of ``text`` and re-decode."""
    data = text.encode("utf-8")
    keep = []
    cursor = 0
    for start, end in sorted(spans):
        start = max(start, cursor)
        if start >= end:
            continue
        keep.append(data[cursor:start])
        cursor = end
    keep.append(data[cursor:])
    return b"".join(keep).decode("utf-8")


def anonymize(text: str, spans) -> str:
    """Remove signature/timestamp spans and collapse whitespace."""
    return _collapse_ws(remove_spans(text, spans))


def turkish_genitive(title: str) -> str:
    """Genitive suffix by final-vowel harmony, with apostrophe for proper nouns."""
    last_vowel = None
    for ch in reversed(title):
        if ch.lower() in _TR_VOWELS:
            last_vowel = ch.lower()
            break
    suffix = _TR_SUFFIX.get(last_vowel, "in")
    if title and title[-1].lower() in _TR_VOWELS:
        suffix = "n" + suffix
    return f"{title}'{suffix}"


def make_topic(article_title: str, language: str, overrides: dict | None = None) -> str:
    """Per-language topic phrase; an override map wins for irregular titles."""
    if overrides and article_title in overrides:
        return overrides[article_title]
    if language in _TOPIC_TEMPLATES:
        return _TOPIC_TEMPLATES[language].format(title=article_title)
    if language == "tr":
        return f"{turkish_genitive(article_title)} silinmesi"
    raise SchemaViolation(f"unsupported language {language!r}")


def record_id(language: str, article_title: str, comment_index: int) -> str:
    digest = hashlib.sha1(f"{language}|{article_title}|{comment_index}".encode("utf-8"))
    return digest.hexdigest()[:16]


@dataclass
class BuildCounters:
    parsed_comments: int = 0
    discarded: dict = field(default_factory=dict)
    no_policy: int = 0
    records: int = 0
    unknown_tokens: dict = field(default_factory=dict)

    def tally(self, reason: str) -> None:
        self.discarded[reason] = self.discarded.get(reason, 0) + 1

    def tally_unknown(self, token: str) -> None:
        self.unknown_tokens[token] = self.unknown_tokens.get(token, 0) + 1


def build_records(
    discussions: list,
    language: str,
    registry: PolicyRegistry,
    alignment: PolicyAlignment,
    lexicon: StanceLexicon,
    prefixes: PolicyPrefixSet,
    topic_overrides: dict | None = None,
    keep_raw: bool = True,
    report_unknown: bool = False,
):
    """Turn parsed discussions into corpus records.

    A comment survives when its vote normalizes to a stance label and at
    least one of its policy links canonicalizes into the registry. The vote
    markup, signatures, and timestamps are removed from both comment
    variants; policy mentions are removed from ``comment`` only. With
    ``report_unknown`` the unmatched vote tokens are tallied for lexicon
    curation.
    """
    counters = BuildCounters()
    records = []
    article_seen: dict = {}
    for discussion in discussions:
        occurrence_base = article_seen.get(discussion.article_title, 0)
        article_seen[discussion.article_title] = occurrence_base + len(discussion.comments)
        topic = make_topic(discussion.article_title, language, topic_overrides)
        for index, comment in enumerate(discussion.comments):
            counters.parsed_comments += 1
            stance = normalize_stance(comment.vote_raw, language, lexicon)
            if isinstance(stance, Discard):
                counters.tally(stance.reason)
                if report_unknown and stance.reason == "unknown_token":
                    counters.tally_unknown(str(comment.vote_raw))
                continue
            canonical_targets = [
                c for c in (canonicalize(t, registry) for t in comment.policy_targets)
                if c is not None
            ]
            policy = select_primary_policy(canonical_targets)
            if policy is None:
                counters.no_policy += 1
                continue
            drop = list(comment.signature_spans) + list(comment.timestamp_spans)
            if comment.vote_span is not None:
                drop.append(comment.vote_span)
            raw_text = _collapse_ws(remove_spans(comment.text, drop))
            scrubbed = scrub_policy_mentions(raw_text, prefixes)
            records.append(CorpusRecord(
                id=record_id(language, discussion.article_title, occurrence_base + index),
                lang=language,
                topic=topic,
                comment=scrubbed,
                stance=stance,
                policy=policy,
                policy_superset_id=project_label(language, policy, alignment),
                split="train",
                comment_raw=raw_text if keep_raw else None,
            ))
            counters.records += 1
    return records, counters


def assign_splits(records: list, plan: SplitPlan) -> list:
    """Deterministic per-language splits: seeded shuffle by id, then ratio cut.

    Turkish gets ``max(ratio cut, tr_min_test)`` test records; raises
    TooFewRecords when the Turkish corpus cannot fill the minimum.
    """
    by_lang: dict = {}
    for record in records:
        by_lang.setdefault(record.lang, []).append(record)

    out = []
    for lang in sorted(by_lang):
        group = sorted(by_lang[lang], key=lambda r: r.id)
        ids = [r.id for r in group]
        if len(set(ids)) != len(ids):
            raise SchemaViolation(f"duplicate record ids in {lang} corpus")
        random.Random(plan.seed).shuffle(group)
        n = len(group)
        _, test_ratio, dev_ratio = plan.ratios
        n_test = int(test_ratio * n + 0.5)
        n_dev = int(dev_ratio * n + 0.5)
        if lang == "tr":
            if n < plan.tr_min_test:
                raise TooFewRecords(
                    f"tr corpus has {n} records, fewer than tr_min_test={plan.tr_min_test}"
                )
            n_test = max(n_test, plan.tr_min_test)
        for i, record in enumerate(group):
            if i < n_test:
                split = "test"
            elif i < n_test + n_dev:
                split = "dev"
            else:
                split = "train"
            out.append(replace(record, split=split))
    out.sort(key=lambda r: (r.lang, r.id))
    return out


def _record_to_obj(record: CorpusRecord) -> dict:
    obj = {
        "id": record.id,
        "lang": record.lang,
        "topic": record.topic,
        "comment": record.comment,
    }
    if record.comment_raw is not None:
        obj["comment_raw"] = record.comment_raw
    obj.update({
        "stance": record.stance,
        "policy": record.policy,
        "policy_superset_id": record.policy_superset_id,
        "split": record.split,
    })
    return obj


def _validate_obj(obj: dict, line: int) -> CorpusRecord:
    unknown = set(obj) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS)
    if unknown:
        raise SchemaViolation(f"unknown fields {sorted(unknown)}", line=line)
    missing = [f for f in _REQUIRED_FIELDS if f not in obj]
    if missing:
        raise SchemaViolation(f"missing fields {missing}", line=line)
    for key in ("id", "lang", "topic", "comment", "stance", "policy", "split"):
        if not isinstance(obj[key], str):
            raise SchemaViolation(f"field {key!r} must be a string", line=line)
    if obj["stance"] not in STANCE_LABELS:
        raise SchemaViolation(f"stance {obj['stance']!r} not in {STANCE_LABELS}", line=line)
    if obj["split"] not in SPLITS:
        raise SchemaViolation(f"split {obj['split']!r} not in {SPLITS}", line=line)
    if not isinstance(obj["policy_superset_id"], int) or isinstance(obj["policy_superset_id"], bool):
        raise SchemaViolation("policy_superset_id must be an integer", line=line)
    raw = obj.get("comment_raw")
    if raw is not None and not isinstance(raw, str):
        raise SchemaViolation("comment_raw must be a string", line=line)
    return CorpusRecord(
        id=obj["id"], lang=obj["lang"], topic=obj["topic"], comment=obj["comment"],
        stance=obj["stance"], policy=obj["policy"],
        policy_superset_id=obj["policy_superset_id"], split=obj["split"],
        comment_raw=raw,
    )


def emit_jsonl(records: list, path, include_raw: bool = True) -> None:
    """One UTF-8 JSON object per line, fields in schema order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            if not include_raw and record.comment_raw is not None:
                record = replace(record, comment_raw=None)
            fh.write(json.dumps(_record_to_obj(record), ensure_ascii=False) + "\n")


def load_jsonl(path) -> list:
    """Load and validate corpus records; SchemaViolation names the bad line."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON: {exc}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise SchemaViolation("record must be a JSON object", line=lineno)
            records.append(_validate_obj(obj, lineno))
    return records


def compute_stats(records: list, parsed_comment_counts: dict) -> DatasetStats:
    """Per-language label/policy distributions, mention rate, mean length."""
    stats = DatasetStats()
    by_lang: dict = {}
    for record in records:
        by_lang.setdefault(record.lang, []).append(record)
    for lang, group in sorted(by_lang.items()):
        stance_counts = {label: 0 for label in STANCE_LABELS}
        policy_counts: dict = {}
        total_chars = 0
        for record in group:
            stance_counts[record.stance] += 1
            policy_counts[record.policy] = policy_counts.get(record.policy, 0) + 1
            total_chars += len(record.comment)
        parsed = parsed_comment_counts.get(lang, 0)
        top = sorted(policy_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        stats.per_language[lang] = {
            "records": len(group),
            "stance_counts": stance_counts,
            "policy_counts": dict(sorted(policy_counts.items())),
            "policy_count": len(policy_counts),
            "mention_rate": (len(group) / parsed) if parsed else 0.0,
            "mean_comment_chars": total_chars / len(group) if group else 0.0,
            "top_policies": [{"policy": t, "count": c} for t, c in top[:15]],
        }
    return stats


def save_policy_chart(stats: DatasetStats, language: str, path) -> None:
    """Bar chart of the top-15 policies for one language (needs matplotlib)."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - optional extra
        raise SchemaViolation("matplotlib is required for --chart") from exc
    entry = stats.per_language.get(language)
    if not entry:
        raise SchemaViolation(f"no stats for language {language!r}")
    top = entry["top_policies"]
    titles = [t["policy"] for t in top][::-1]
    counts = [t["count"] for t in top][::-1]
    fig, ax = plt.subplots(figsize=(8, max(2, 0.4 * len(titles))))
    ax.barh(titles, counts)
    ax.set_xlabel("mentions")
    ax.set_title(f"Top policies ({language})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
