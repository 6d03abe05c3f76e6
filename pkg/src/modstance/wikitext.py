"""Deletion-discussion wikitext parsing.

Turns an archive page into discussions and per-editor comments, and provides
the span/extraction primitives used later by corpus assembly: vote token,
policy-link targets, signature and timestamp spans. All spans are byte
offsets into the UTF-8 encoding of the comment text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import diagnostics

# Prefixes opening a policy link, per language. Namespace matching is
# case-insensitive; the tr prefixes come from the Turkish wiki namespace.
POLICY_PREFIXES = {
    "en": ("[[WP:", "[[Wikipedia:"),
    "de": ("[[WP:", "[[Wikipedia:"),
    "tr": ("[[VP:", "[[Vikipedi:"),
}

_HEADING_RE = re.compile(r"^(={2,6})\s*(.+?)\s*\1\s*$")
_LIST_MARKER_RE = re.compile(r"^[*:#]+\s*")
_BOLD_RE = re.compile(r"'''(.*?)'''")
_WIKILINK_RE = re.compile(r"\[\[([^\]|]*)(?:\|([^\]]*))?\]\]")

_USER_NAMESPACES = (
    "User", "User talk",
    "Benutzer", "Benutzer Diskussion", "Benutzerin", "Benutzerin Diskussion",
    "Kullanıcı", "Kullanıcı mesaj",
)
_SIGNATURE_RE = re.compile(
    r"(?:--|—|–)?\s{0,2}\[\[(?:%s)\s*:[^\[\]\n]*\]\]"
    % "|".join(re.escape(ns) for ns in _USER_NAMESPACES),
    re.IGNORECASE,
)

_MONTHS = {
    "en": ("January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December"),
    "de": ("Januar", "Februar", "März", "April", "Mai", "Juni", "Juli",
           "August", "September", "Oktober", "November", "Dezember",
           "Jan\\.", "Feb\\.", "Mär\\.", "Apr\\.", "Jun\\.", "Jul\\.",
           "Aug\\.", "Sep\\.", "Okt\\.", "Nov\\.", "Dez\\."),
    "tr": ("Ocak", "Şubat", "Mart", "Nisan", "Mayıs", "Haziran", "Temmuz",
           "Ağustos", "Eylül", "Ekim", "Kasım", "Aralık"),
}
_ZONES = r"UTC|CET|CEST|MEZ|MESZ|TSİ"

_TIMESTAMP_RES = {
    lang: re.compile(
        r"\d{1,2}:\d{2},? \d{1,2}\.? (?:%s) \d{4} \((?:%s)\)" % ("|".join(months), _ZONES)
    )
    for lang, months in _MONTHS.items()
}


@dataclass(frozen=True)
class PolicyPrefixSet:
    language: str
    prefixes: tuple


def policy_prefixes(language: str) -> PolicyPrefixSet:
    return PolicyPrefixSet(language=language, prefixes=POLICY_PREFIXES[language])


@dataclass
class RawComment:
    text: str
    vote_raw: str | None
    vote_span: tuple | None  # byte range of the bold vote markup, if any
    policy_targets: list
    signature_spans: list
    timestamp_spans: list


@dataclass
class RawDiscussion:
    article_title: str
    language: str
    comments: list = field(default_factory=list)


def _byte_span(text: str, char_start: int, char_end: int) -> tuple:
    start = len(text[:char_start].encode("utf-8"))
    return (start, start + len(text[char_start:char_end].encode("utf-8")))


def _strip_link_markup(token: str) -> str:
    return _WIKILINK_RE.sub(lambda m: m.group(2) if m.group(2) is not None else m.group(1), token)


def find_vote(comment_text: str):
    """First bold token sequence: (normalized string, byte span) or None."""
    match = _BOLD_RE.search(comment_text)
    if match is None:
        return None
    token = _strip_link_markup(match.group(1))
    token = token.strip(" \t'\"`*_:;.,!?()<>|~-—–")
    token = " ".join(token.split()).lower()
    if not token:
        return None
    return token, _byte_span(comment_text, match.start(), match.end())


def extract_vote(comment_text: str) -> str | None:
    """First bold-marked token sequence, lowercased and de-linked; None if no bold."""
    found = find_vote(comment_text)
    return found[0] if found else None


def _namespace_matches(content: str, prefixes: PolicyPrefixSet) -> bool:
    lowered = content.lstrip().lower()
    return any(lowered.startswith(p[2:].lower()) for p in prefixes.prefixes)


def extract_policy_links(comment_text: str, prefixes: PolicyPrefixSet) -> list:
    """Ordered targets of links opening with a policy prefix.

    The target is the text between the prefix-inclusive ``[[`` and the first
    ``|`` or ``]]``. Duplicates are retained; scan order is left to right.
    A policy link opened but never closed is skipped with a diagnostic.
    """
    targets = []
    if not prefixes.prefixes:
        return targets
    pos = 0
    n = len(comment_text)
    while True:
        open_idx = comment_text.find("[[", pos)
        if open_idx < 0:
            break
        body_start = open_idx + 2
        close_idx = comment_text.find("]]", body_start)
        next_open = comment_text.find("[[", body_start)
        newline = comment_text.find("\n", body_start)
        terminators = [t for t in (next_open, newline) if t >= 0]
        broken = close_idx < 0 or any(t < close_idx for t in terminators)
        if broken:
            end = min(terminators) if terminators else n
            content = comment_text[body_start:end]
            if _namespace_matches(content, prefixes):
                diagnostics.warn("unclosed_link", snippet=comment_text[open_idx:end][:80])
            pos = next_open if (next_open >= 0 and (newline < 0 or next_open < newline)) else body_start
            if newline >= 0 and (next_open < 0 or newline < next_open):
                pos = newline + 1
            continue
        content = comment_text[body_start:close_idx]
        if _namespace_matches(content, prefixes):
            target = content.split("|", 1)[0].strip()
            targets.append(target)
        pos = close_idx + 2
    return targets


def _merge_spans(spans: list) -> list:
    merged = []
    for span in sorted(spans):
        if merged and span[0] <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], span[1]))
        else:
            merged.append(span)
    return merged


def detect_signatures(comment_text: str, language: str):
    """Byte spans of user-page links (with a leading ``--``) and timestamps."""
    signature_spans = [
        _byte_span(comment_text, m.start(), m.end())
        for m in _SIGNATURE_RE.finditer(comment_text)
    ]
    ts_re = _TIMESTAMP_RES.get(language, _TIMESTAMP_RES["en"])
    timestamp_spans = [
        _byte_span(comment_text, m.start(), m.end())
        for m in ts_re.finditer(comment_text)
    ]
    if language != "en":
        # Cross-posted English-format stamps still get scrubbed.
        extra = [
            _byte_span(comment_text, m.start(), m.end())
            for m in _TIMESTAMP_RES["en"].finditer(comment_text)
        ]
        timestamp_spans = timestamp_spans + [s for s in extra if s not in timestamp_spans]
    return _merge_spans(signature_spans), _merge_spans(timestamp_spans)


def _heading_title(raw: str) -> str:
    title = _WIKILINK_RE.sub(lambda m: m.group(1), raw).strip()
    return title


def _build_comment(lines: list, language: str, prefixes: PolicyPrefixSet) -> RawComment:
    first = _LIST_MARKER_RE.sub("", lines[0], count=1)
    text = "\n".join([first] + lines[1:]).rstrip()
    found = find_vote(text)
    vote_raw, vote_span = (found if found else (None, None))
    signature_spans, timestamp_spans = detect_signatures(text, language)
    return RawComment(
        text=text,
        vote_raw=vote_raw,
        vote_span=vote_span,
        policy_targets=extract_policy_links(text, prefixes),
        signature_spans=signature_spans,
        timestamp_spans=timestamp_spans,
    )


def parse_archive(page) -> list:
    """Split an archive page into discussions with their comments.

    Discussion boundaries are the shallowest heading level present on the
    page; the heading text (sans link markup) names the nominated article.
    Within a section, each list-item line (``*``, ``:``, ``#``) starts a
    comment; following plain lines continue it; a blank line or heading ends
    it. Text between the heading and the first list item is the nomination
    statement and is parsed as a comment too. Content before the first
    heading is boilerplate and skipped.
    """
    text = page.wikitext
    language = page.language
    prefixes = policy_prefixes(language)
    lines = text.split("\n")

    headings = []  # (line index, level, title)
    for i, line in enumerate(lines):
        m = _HEADING_RE.match(line)
        if m:
            headings.append((i, len(m.group(1)), _heading_title(m.group(2))))
    if not headings:
        if text.strip():
            diagnostics.warn("empty_page", title=page.title, language=language)
        return []
    top_level = min(level for _, level, _ in headings)
    section_marks = [(i, title) for i, level, title in headings if level == top_level]

    discussions = []
    for idx, (start, title) in enumerate(section_marks):
        end = section_marks[idx + 1][0] if idx + 1 < len(section_marks) else len(lines)
        discussion = RawDiscussion(article_title=title, language=language)
        pending: list = []

        def flush():
            if pending and any(l.strip() for l in pending):
                discussion.comments.append(_build_comment(pending, language, prefixes))
            pending.clear()

        for line in lines[start + 1:end]:
            if _HEADING_RE.match(line):  # deeper sub-heading: comment break
                flush()
                continue
            if not line.strip():
                flush()
                continue
            if _LIST_MARKER_RE.match(line):
                flush()
            pending.append(line)
        flush()
        discussions.append(discussion)
    return discussions
