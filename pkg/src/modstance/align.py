"""Cross-lingual policy label space: merge per-language registries along
interwiki links into one superset, with per-language projections."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import diagnostics
from .errors import ConflictingLinks, UnknownPolicy


@dataclass(frozen=True)
class AlignmentEntry:
    id: int
    display_title: str
    members: dict  # language -> local canonical title


@dataclass
class PolicyAlignment:
    entries: list
    projection: dict  # (language, local title) -> entry id

    def export(self) -> list:
        return [
            {"id": e.id, "display_title": e.display_title, "members": dict(sorted(e.members.items()))}
            for e in self.entries
        ]

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.export(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )


@dataclass
class AlignOverrides:
    """Curation overrides: edges to ignore and edges to force."""

    cut: set = field(default_factory=set)
    add: set = field(default_factory=set)


def load_alignment(path) -> PolicyAlignment:
    entries = [
        AlignmentEntry(id=e["id"], display_title=e["display_title"], members=e["members"])
        for e in json.loads(Path(path).read_text(encoding="utf-8"))
    ]
    projection = {
        (lang, title): e.id for e in entries for lang, title in e.members.items()
    }
    return PolicyAlignment(entries=entries, projection=projection)


def interwiki_edges(language: str, langlink_maps: dict) -> set:
    """Flatten ``fetch_interwiki`` output into undirected node pairs."""
    edges = set()
    for title, links in langlink_maps.items():
        for other_lang, other_title in links.items():
            edges.add(_edge((language, title), (other_lang, other_title)))
    return edges


def _edge(a, b):
    return (a, b) if a <= b else (b, a)


class _UnionFind:
    def __init__(self, nodes):
        self.parent = {n: n for n in nodes}

    def find(self, n):
        root = n
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[n] != root:
            self.parent[n], n = root, self.parent[n]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def align(registries: list, edges, overrides: AlignOverrides | None = None) -> PolicyAlignment:
    """Build the superset label space from registries plus interwiki edges.

    Connected components of the link graph (restricted to canonical titles)
    become entries; singletons stay language-local. Entries with an English
    member display the English title; others display the lexicographically
    first member title prefixed with its language code. Ids follow sorted
    display titles, so re-running on the same inputs is reproducible.
    """
    overrides = overrides or AlignOverrides()
    nodes = {(r.language, title) for r in registries for title in r.canonical}

    normalized = {_edge(a, b) for a, b in edges}
    cut = {_edge(a, b) for a, b in overrides.cut}
    added = {_edge(a, b) for a, b in overrides.add}
    usable = set()
    for a, b in (normalized - cut) | added:
        if a in nodes and b in nodes:
            usable.add((a, b))
        else:
            diagnostics.warn("interwiki_edge_outside_registries", edge=[list(a), list(b)])

    uf = _UnionFind(nodes)
    for a, b in sorted(usable):
        uf.union(a, b)

    components: dict = {}
    for node in nodes:
        components.setdefault(uf.find(node), []).append(node)

    raw_entries = []
    for members in components.values():
        by_lang: dict = {}
        for lang, title in members:
            if lang in by_lang and by_lang[lang] != title:
                raise ConflictingLinks(
                    f"{lang} titles {by_lang[lang]!r} and {title!r} linked into one "
                    "entry; resolve with an alignment override"
                )
            by_lang[lang] = title
        if "en" in by_lang:
            display = by_lang["en"]
        else:
            lang, title = min(by_lang.items(), key=lambda kv: (kv[1], kv[0]))
            display = f"{lang}:{title}"
        raw_entries.append((display, by_lang))

    raw_entries.sort(key=lambda pair: pair[0])
    entries = [
        AlignmentEntry(id=i, display_title=display, members=members)
        for i, (display, members) in enumerate(raw_entries)
    ]
    projection = {
        (lang, title): entry.id
        for entry in entries
        for lang, title in entry.members.items()
    }
    return PolicyAlignment(entries=entries, projection=projection)


def project_label(language: str, local_title: str, alignment: PolicyAlignment) -> int:
    """Superset id of a local canonical policy title."""
    key = (language, local_title)
    if key not in alignment.projection:
        raise UnknownPolicy(f"{local_title!r} is not canonical for {language!r}")
    return alignment.projection[key]
