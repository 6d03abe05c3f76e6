"""Canonical policy registries: redirects, sub-policy merging, frequency filter."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import diagnostics
from .errors import ConfigError, CycleDetected

_WIKILINK_TARGET_RE = re.compile(r"\[\[([^\]|#]+)")
_CURATION_VERDICT_RE = re.compile(r"^verdict\((.+)\)=(policy|not_policy)$")
_CURATION_MERGE_RE = re.compile(r"^merge\((.+)\)=(.+)$")


@dataclass
class PolicyPage:
    title: str
    language: str
    full_text: str
    is_policy: bool


@dataclass
class PolicyRegistry:
    language: str
    canonical: set
    redirect_map: dict  # raw target -> curated page title
    merge_map: dict     # sub-policy title -> parent title
    counts: dict        # canonical title -> mention count (post-merge)
    min_count: int

    def export(self) -> dict:
        return {
            "language": self.language,
            "canonical": sorted(self.canonical),
            "redirect_map": dict(sorted(self.redirect_map.items())),
            "merge_map": dict(sorted(self.merge_map.items())),
            "counts": {t: self.counts[t] for t in sorted(self.counts)},
            "min_count": self.min_count,
        }

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.export(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )


def load_registry(path) -> "PolicyRegistry":
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return PolicyRegistry(
        language=obj["language"],
        canonical=set(obj["canonical"]),
        redirect_map=dict(obj["redirect_map"]),
        merge_map=dict(obj["merge_map"]),
        counts=dict(obj["counts"]),
        min_count=obj["min_count"],
    )


@dataclass
class Curation:
    """Manual judgments shipped as data: per-title verdicts and merge edges."""

    verdicts: dict = field(default_factory=dict)  # title -> True (policy) / False
    merges: dict = field(default_factory=dict)    # child title -> parent title


def load_curation(path) -> Curation:
    """Parse a curation file: ``verdict(title)=policy|not_policy``,
    ``merge(child)=parent``, ``#`` comments."""
    curation = Curation()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _CURATION_VERDICT_RE.match(line)
        if m:
            curation.verdicts[m.group(1).strip()] = m.group(2) == "policy"
            continue
        m = _CURATION_MERGE_RE.match(line)
        if m:
            curation.merges[m.group(1).strip()] = m.group(2).strip()
            continue
        raise ConfigError(f"{path}:{lineno}: unrecognized curation line: {line!r}")
    return curation


def _strip_fragment(title: str) -> str:
    return title.split("#", 1)[0].strip()


def canonicalize(raw_target: str, registry: PolicyRegistry) -> str | None:
    """raw target -> redirect map -> merge map -> canonical title, else None."""
    title = _strip_fragment(raw_target)
    if title in registry.redirect_map:
        title = registry.redirect_map[title]
    else:
        folded = title.lower()
        for raw, resolved in registry.redirect_map.items():
            if raw.lower() == folded:
                title = resolved
                break
    title = registry.merge_map.get(title, title)
    return title if title in registry.canonical else None


def _page_links(page: PolicyPage) -> set:
    return {m.group(1).strip() for m in _WIKILINK_TARGET_RE.finditer(page.full_text)}


def build_merge_map(pages: list, curation_merges: dict) -> dict:
    """Sub-policy -> parent edges, confirmed by both page links and curation.

    An edge survives only when the child's page text links to the parent and
    the curation file lists the merge. Chains are flattened to their final
    parent; a cycle raises CycleDetected.
    """
    links_by_title = {page.title: _page_links(page) for page in pages}
    edges = {}
    for child, parent in curation_merges.items():
        linked = parent in links_by_title.get(child, set())
        if not linked:
            diagnostics.warn("merge_without_link", child=child, parent=parent)
            continue
        edges[child] = parent

    flattened = {}
    for child in edges:
        seen = {child}
        target = edges[child]
        while target in edges:
            if target in seen:
                raise CycleDetected(f"merge cycle through {target!r}")
            seen.add(target)
            target = edges[target]
        flattened[child] = target
    return flattened


def filter_infrequent(counts: dict, min_count: int) -> set:
    """Titles whose mention count meets the threshold (boundary inclusive)."""
    if min_count < 1:
        raise ConfigError("min_count must be >= 1")
    return {title for title, count in counts.items() if count >= min_count}


def select_primary_policy(targets: list) -> str | None:
    """First canonical policy mentioned; None when the list is empty."""
    return targets[0] if targets else None


def build_registry(
    language: str,
    resolutions: dict,
    pages: list,
    curation: Curation,
    target_lists: list,
    min_count: int,
) -> PolicyRegistry:
    """Assemble the registry for one language.

    ``resolutions`` maps raw link targets to resolved page titles (None for
    red links); ``pages`` are the fetched policy pages; ``target_lists`` is
    one list of raw targets per parsed comment. Mention counting happens
    after sub-policy merging and before first-policy selection.
    """
    redirect_map = {}
    for raw, resolved in resolutions.items():
        raw = _strip_fragment(raw)
        if resolved is None:
            continue
        verdict = curation.verdicts.get(resolved)
        if verdict is None:
            diagnostics.warn("uncurated_title", language=language, title=resolved)
            continue
        if not verdict:
            continue
        redirect_map[raw] = resolved

    curated_pages = [
        PolicyPage(p.title, p.language, p.full_text, curation.verdicts.get(p.title, False))
        for p in pages
    ]
    merge_map = build_merge_map(
        [p for p in curated_pages if p.is_policy], curation.merges
    )

    counts: dict = {}
    dropped = 0
    for targets in target_lists:
        for raw in targets:
            title = _strip_fragment(raw)
            resolved = redirect_map.get(title)
            if resolved is None:
                folded = title.lower()
                resolved = next(
                    (v for k, v in redirect_map.items() if k.lower() == folded), None
                )
            if resolved is None:
                dropped += 1
                continue
            merged = merge_map.get(resolved, resolved)
            counts[merged] = counts.get(merged, 0) + 1
    if dropped:
        diagnostics.warn("targets_dropped", language=language, count=dropped)

    canonical = filter_infrequent(counts, min_count)
    merge_map = {c: p for c, p in merge_map.items() if p in canonical}
    return PolicyRegistry(
        language=language,
        canonical=canonical,
        redirect_map=redirect_map,
        merge_map=merge_map,
        counts={t: c for t, c in counts.items() if t in canonical},
        min_count=min_count,
    )
