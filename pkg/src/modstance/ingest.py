"""MediaWiki ingestion: archive pages, title resolution, interwiki links.

All network traffic goes through a transport; the HTTP transport serializes
requests per endpoint with a 200 ms gap, while the fixture transport answers
from a recorded wiki directory so every CI path runs offline. Fetched pages
land in an on-disk cache (`cache/<lang>/<percent-encoded title>.json`) with
atomic writes; repeat calls are answered from the cache without traffic.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import threading
import time
import urllib.parse
import zlib
from dataclasses import dataclass
from pathlib import Path

from . import diagnostics
from .errors import (ConfigError, MalformedResponse, MissingPage,
                     NetworkUnavailable, RateLimited)

CACHE_ENV_VAR = "MODSTANCE_CACHE"

LANGUAGES = ("en", "de", "tr")

API_ENDPOINTS = {
    "en": "https://en.wikipedia.org/w/api.php",
    "de": "https://de.wikipedia.org/w/api.php",
    "tr": "https://tr.wikipedia.org/w/api.php",
}

# Per-language archive traversal: the root index page links to dated archive
# subpages; links matching the prefix with a four-digit year are followed.
ARCHIVE_ROOTS = {
    "en": "Wikipedia:Articles for deletion/Archived debates",
    "de": "Wikipedia:Löschkandidaten",
    "tr": "Vikipedi:Silinmeye aday sayfalar/Kayıt",
}
ARCHIVE_LINK_PREFIXES = {
    "en": "Wikipedia:Articles for deletion/Log/",
    "de": "Wikipedia:Löschkandidaten/",
    "tr": "Vikipedi:Silinmeye aday sayfalar/",
}
ARCHIVE_YEAR_SPANS = {"en": (2005, 2022), "de": (2005, 2022), "tr": (2006, 2022)}

MIN_REQUEST_GAP = 0.2
MAX_RETRIES = 4

_YEAR_RE = re.compile(r"\b(\d{4})\b")
_WIKILINK_RE = re.compile(r"\[\[([^\]|]+)(?:\|[^\]]*)?\]\]")


@dataclass(frozen=True)
class WikiSource:
    language: str
    api_endpoint: str
    archive_root: str


def wiki_source(language: str) -> WikiSource:
    if language not in LANGUAGES:
        raise ConfigError(f"unsupported language {language!r}")
    return WikiSource(
        language=language,
        api_endpoint=API_ENDPOINTS[language],
        archive_root=ARCHIVE_ROOTS[language],
    )


@dataclass
class CachedPage:
    title: str
    language: str
    wikitext: str
    fetched_at: str
    revision_id: int


@dataclass(frozen=True)
class TitleResolution:
    raw_target: str
    resolved_title: str | None


def _strip_fragment(title: str) -> str:
    return title.split("#", 1)[0].strip()


class PageCache:
    """Human-inspectable page cache, one JSON file per (language, title)."""

    def __init__(self, root=None):
        if root is None:
            root = os.environ.get(CACHE_ENV_VAR, "cache")
        self.root = Path(root)

    def _page_path(self, language: str, title: str) -> Path:
        return self.root / language / (urllib.parse.quote(title, safe="") + ".json")

    def _map_path(self, language: str, name: str) -> Path:
        return self.root / language / f"_{name}.json"

    @staticmethod
    def _atomic_write(path: Path, payload: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get(self, language: str, title: str) -> CachedPage | None:
        path = self._page_path(language, title)
        if not path.exists():
            return None
        obj = json.loads(path.read_text(encoding="utf-8"))
        return CachedPage(
            title=obj["title"], language=obj["language"], wikitext=obj["wikitext"],
            fetched_at=obj["fetched_at"], revision_id=obj["revision_id"],
        )

    def put(self, page: CachedPage) -> None:
        payload = json.dumps(
            {
                "title": page.title,
                "language": page.language,
                "wikitext": page.wikitext,
                "fetched_at": page.fetched_at,
                "revision_id": page.revision_id,
            },
            ensure_ascii=False,
            indent=2,
        )
        self._atomic_write(self._page_path(page.language, page.title), payload)

    def load_map(self, language: str, name: str) -> dict:
        path = self._map_path(language, name)
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def store_map(self, language: str, name: str, mapping: dict) -> None:
        self._atomic_write(
            self._map_path(language, name),
            json.dumps(mapping, ensure_ascii=False, indent=2, sort_keys=True),
        )


class HttpTransport:
    """requests-backed transport; one in-flight request per endpoint, 200 ms gap."""

    local = False

    def __init__(self, user_agent: str = "modstance/0.1 (research toolkit)"):
        self.user_agent = user_agent
        self._locks: dict = {}
        self._last_request: dict = {}
        self._guard = threading.Lock()

    def _endpoint_lock(self, endpoint: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(endpoint, threading.Lock())

    def get(self, endpoint: str, params: dict) -> dict:
        import requests

        query = dict(params)
        query.setdefault("format", "json")
        query.setdefault("formatversion", "2")
        lock = self._endpoint_lock(endpoint)
        with lock:
            for attempt in range(MAX_RETRIES):
                gap = time.monotonic() - self._last_request.get(endpoint, 0.0)
                if gap < MIN_REQUEST_GAP:
                    time.sleep(MIN_REQUEST_GAP - gap)
                self._last_request[endpoint] = time.monotonic()
                try:
                    response = requests.get(
                        endpoint, params=query,
                        headers={"User-Agent": self.user_agent}, timeout=30,
                    )
                except requests.RequestException as exc:
                    raise NetworkUnavailable(f"{endpoint}: {exc}") from exc
                if response.status_code == 429:
                    retry_after = float(response.headers.get("Retry-After", 2 ** attempt))
                    time.sleep(retry_after)
                    continue
                if response.status_code != 200:
                    raise MalformedResponse(f"{endpoint}: HTTP {response.status_code}")
                try:
                    return response.json()
                except ValueError as exc:
                    raise MalformedResponse(f"{endpoint}: not JSON") from exc
            raise RateLimited(f"{endpoint}: still throttled after {MAX_RETRIES} tries")


class FixtureTransport:
    """Answers MediaWiki queries from a recorded fixture-wiki directory.

    Layout: ``<root>/<lang>/pages.json`` (title -> {wikitext, revision_id}),
    ``redirects.json`` (from -> to), ``langlinks.json`` (title -> {lang: title}).
    """

    local = True

    def __init__(self, root):
        self.root = Path(root)
        self._wikis: dict = {}
        self.request_count = 0

    def _language_for(self, endpoint: str) -> str:
        for lang, url in API_ENDPOINTS.items():
            if endpoint == url:
                return lang
        raise ConfigError(f"fixture transport: unknown endpoint {endpoint!r}")

    def _wiki(self, language: str) -> dict:
        if language not in self._wikis:
            base = self.root / language
            if not base.exists():
                raise NetworkUnavailable(f"no fixtures for language {language!r}")
            def read(name):
                path = base / name
                return json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
            self._wikis[language] = {
                "pages": read("pages.json"),
                "redirects": read("redirects.json"),
                "langlinks": read("langlinks.json"),
            }
        return self._wikis[language]

    def _resolve(self, wiki: dict, title: str):
        redirects = []
        seen = set()
        while title in wiki["redirects"]:
            if title in seen:
                break
            seen.add(title)
            target = wiki["redirects"][title]
            redirects.append({"from": title, "to": target})
            title = target
        return title, redirects

    def get(self, endpoint: str, params: dict) -> dict:
        self.request_count += 1
        language = self._language_for(endpoint)
        wiki = self._wiki(language)
        if params.get("action") != "query":
            raise MalformedResponse(f"fixture transport only serves action=query")
        titles = [t for t in params.get("titles", "").split("|") if t]
        follow_redirects = str(params.get("redirects", "")) in ("1", "true", "True")
        prop = params.get("prop", "")
        pages_out = []
        redirects_out = []
        for raw_title in titles:
            title = _strip_fragment(raw_title)
            if follow_redirects:
                title, chain = self._resolve(wiki, title)
                redirects_out.extend(chain)
            entry = wiki["pages"].get(title)
            if entry is None:
                pages_out.append({"title": title, "missing": True})
                continue
            page_obj: dict = {"title": title, "ns": 4,
                              "pageid": zlib.crc32(title.encode("utf-8")) % 10**6}
            if "revisions" in prop:
                page_obj["revisions"] = [{
                    "revid": entry.get("revision_id", 1),
                    "timestamp": entry.get("timestamp", "2022-12-01T00:00:00Z"),
                    "slots": {"main": {"content": entry.get("wikitext", "")}},
                }]
            if "langlinks" in prop:
                links = wiki["langlinks"].get(title, {})
                page_obj["langlinks"] = [
                    {"lang": lang, "title": foreign} for lang, foreign in sorted(links.items())
                ]
            pages_out.append(page_obj)
        result = {"query": {"pages": pages_out}}
        if redirects_out:
            result["query"]["redirects"] = redirects_out
        return result


class WikiClient:
    """High-level operations for one language wiki, cache-first."""

    def __init__(self, source: WikiSource, cache: PageCache | None = None,
                 transport=None, offline: bool = False):
        self.source = source
        self.cache = cache or PageCache()
        self.transport = transport or HttpTransport()
        self.offline = offline
        self.request_count = 0

    def _query(self, params: dict) -> dict:
        if self.offline and not getattr(self.transport, "local", False):
            raise NetworkUnavailable(
                f"offline mode: refusing to fetch from {self.source.api_endpoint}"
            )
        self.request_count += 1
        return self.transport.get(self.source.api_endpoint, params)

    def _pages_from(self, response: dict) -> list:
        try:
            return response["query"]["pages"]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"no query.pages in response") from exc

    def fetch_page(self, title: str) -> CachedPage:
        """Page wikitext, cache-first; MissingPage for red links."""
        cached = self.cache.get(self.source.language, title)
        if cached is not None:
            return cached
        response = self._query({
            "action": "query",
            "prop": "revisions",
            "rvprop": "content|ids|timestamp",
            "rvslots": "main",
            "redirects": "1",
            "titles": title,
        })
        pages = self._pages_from(response)
        if not pages or pages[0].get("missing"):
            raise MissingPage(f"{self.source.language}: {title!r} does not exist")
        page_obj = pages[0]
        try:
            revision = page_obj["revisions"][0]
            wikitext = revision["slots"]["main"]["content"]
            revid = int(revision.get("revid", 0))
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"revision payload malformed for {title!r}") from exc
        page = CachedPage(
            title=title,
            language=self.source.language,
            wikitext=wikitext,
            fetched_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            revision_id=revid,
        )
        self.cache.put(page)
        return page

    def archive_page_titles(self, date_range) -> list:
        """Archive subpage titles under the root index, filtered by year."""
        lang = self.source.language
        lo, hi = int(date_range[0]), int(date_range[1])
        if lo > hi:
            raise ConfigError(f"date range {date_range} is inverted")
        span_lo, span_hi = ARCHIVE_YEAR_SPANS[lang]
        lo, hi = max(lo, span_lo), min(hi, span_hi)
        if lo > hi:
            return []
        root = self.fetch_page(self.source.archive_root)
        prefix = ARCHIVE_LINK_PREFIXES[lang]
        titles = []
        for match in _WIKILINK_RE.finditer(root.wikitext):
            target = _strip_fragment(match.group(1))
            if not target.startswith(prefix):
                continue
            year_match = _YEAR_RE.search(target[len(prefix):])
            if year_match and lo <= int(year_match.group(1)) <= hi:
                if target not in titles:
                    titles.append(target)
        return titles

    def fetch_archive_pages(self, date_range) -> list:
        """All archive pages in the year range, served from cache on repeats."""
        return [self.fetch_page(title) for title in self.archive_page_titles(date_range)]

    def resolve_titles(self, targets: list) -> list:
        """Order-preserving redirect resolution; unresolvable targets are absent."""
        resolution_cache = self.cache.load_map(self.source.language, "resolutions")
        out = []
        dirty = False
        for raw in targets:
            if not raw or not raw.strip():
                raise ConfigError("resolve_titles: empty target string")
            key = _strip_fragment(raw)
            if key in resolution_cache:
                out.append(TitleResolution(raw_target=raw, resolved_title=resolution_cache[key]))
                continue
            response = self._query({
                "action": "query",
                "redirects": "1",
                "titles": key,
            })
            pages = self._pages_from(response)
            resolved = None
            if pages and not pages[0].get("missing"):
                resolved = pages[0].get("title")
            resolution_cache[key] = resolved
            dirty = True
            out.append(TitleResolution(raw_target=raw, resolved_title=resolved))
        if dirty:
            self.cache.store_map(self.source.language, "resolutions", resolution_cache)
        return out

    def fetch_interwiki(self, policy_titles: list) -> dict:
        """Language links among en/de/tr for each title."""
        langlink_cache = self.cache.load_map(self.source.language, "langlinks")
        out = {}
        dirty = False
        for title in policy_titles:
            if title in langlink_cache:
                out[title] = dict(langlink_cache[title])
                continue
            response = self._query({
                "action": "query",
                "prop": "langlinks",
                "lllimit": "max",
                "titles": title,
            })
            pages = self._pages_from(response)
            if not pages or pages[0].get("missing"):
                raise MissingPage(f"{self.source.language}: {title!r} does not exist")
            links = {}
            for link in pages[0].get("langlinks", []) or []:
                if link.get("lang") in LANGUAGES and link["lang"] != self.source.language:
                    links[link["lang"]] = link.get("title", "")
            langlink_cache[title] = links
            dirty = True
            out[title] = dict(links)
        if dirty:
            self.cache.store_map(self.source.language, "langlinks", langlink_cache)
        return out

    def write_manifest(self, path) -> None:
        """Record the revision ids of every cached page for snapshot pinning."""
        manifest: dict = {}
        lang_dir = self.cache.root / self.source.language
        if lang_dir.exists():
            for entry in sorted(lang_dir.glob("*.json")):
                if entry.name.startswith("_"):
                    continue
                obj = json.loads(entry.read_text(encoding="utf-8"))
                manifest[obj["title"]] = obj["revision_id"]
        Path(path).write_text(
            json.dumps({self.source.language: manifest}, ensure_ascii=False,
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def check_manifest(self, path) -> bool:
        """Compare cached revision ids against a pinned manifest; warn on drift."""
        pinned = json.loads(Path(path).read_text(encoding="utf-8"))
        expected = pinned.get(self.source.language, {})
        clean = True
        for title, revid in expected.items():
            page = self.cache.get(self.source.language, title)
            if page is None or page.revision_id != revid:
                diagnostics.warn("snapshot_drift", language=self.source.language,
                                 title=title, pinned=revid,
                                 cached=None if page is None else page.revision_id)
                clean = False
        return clean
