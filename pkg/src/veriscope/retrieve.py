"""Evidence retrieval: search providers (live or file-backed fixtures),
domain filtering, the query relaxation loop, page fetching with HTML
stripping, and an on-disk cache for anything fetched over the network."""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable
from urllib.parse import urlparse

from .errors import FormatError, PageUnavailable, RetryableSearchError
from .querygen import Query, relax

log = logging.getLogger(__name__)

ENGINES = ("google", "bing", "fixture")
MAX_HITS = 10
USER_AGENT = "Mozilla/5.0 (compatible; veriscope/0.1)"


@dataclass
class SearchResult:
    rank: int
    url: str
    snippet: str
    engine: str
    page_text: str | None = None
    page_file: str | None = None  # fixture-local page body, when present

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.url:
            raise ValueError("url must be non-empty")
        if not self.snippet and self.page_text is None and self.page_file is None:
            raise ValueError("snippet may be empty only when a page is present")


@dataclass(frozen=True)
class DomainPolicy:
    """Registrable-domain filter, either dropping (blacklist) or keeping
    (whitelist) the listed domains and their subdomains."""

    mode: str  # "blacklist" | "whitelist"
    domains: frozenset[str]

    def __post_init__(self):
        if self.mode not in ("blacklist", "whitelist"):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        for d in self.domains:
            if d != d.lower() or "/" in d or "://" in d:
                raise ValueError(f"domains must be bare lowercase hosts: {d!r}")

    @classmethod
    def blacklist(cls, domains: Iterable[str]) -> "DomainPolicy":
        return cls(mode="blacklist", domains=frozenset(d.lower() for d in domains))

    @classmethod
    def whitelist(cls, domains: Iterable[str]) -> "DomainPolicy":
        return cls(mode="whitelist", domains=frozenset(d.lower() for d in domains))

    @classmethod
    def from_file(cls, path: str | Path, mode: str) -> "DomainPolicy":
        domains = []
        for line in Path(path).read_text("utf-8").splitlines():
            entry = line.split("#", 1)[0].strip()
            if entry:
                domains.append(entry)
        return cls(mode=mode, domains=frozenset(d.lower() for d in domains))

    def matches(self, url: str) -> bool:
        host = registrable_host(url)
        return any(host == d or host.endswith("." + d) for d in self.domains)

    def allows(self, url: str) -> bool:
        hit = self.matches(url)
        return not hit if self.mode == "blacklist" else hit


def registrable_host(url: str) -> str:
    host = urlparse(url).netloc.lower().split(":")[0]
    if host.startswith("www."):
        host = host[4:]
    return host


@dataclass
class EvidenceBundle:
    """Everything retrieved for one claim: per-engine ranked results, the
    query that finally produced them, and how often it was relaxed."""

    claim_id: str
    query_used: Query
    results: dict[str, list[SearchResult]] = field(default_factory=dict)
    relaxations: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for engine, hits in self.results.items():
            if len(hits) > MAX_HITS:
                raise ValueError(f"{engine}: more than {MAX_HITS} results")
            ranks = [r.rank for r in hits]
            if any(b <= a for a, b in zip(ranks, ranks[1:])):
                raise ValueError(f"{engine}: ranks must be strictly increasing")

    @property
    def relaxations_applied(self) -> int:
        return max(self.relaxations.values(), default=0)

    @property
    def is_empty(self) -> bool:
        return not any(self.results.values())

    def all_results(self) -> list[SearchResult]:
        return [r for hits in self.results.values() for r in hits]


def merge_bundles(bundles: list[EvidenceBundle]) -> EvidenceBundle:
    if not bundles:
        raise ValueError("nothing to merge")
    merged = EvidenceBundle(claim_id=bundles[0].claim_id, query_used=bundles[0].query_used)
    for b in bundles:
        merged.results.update(b.results)
        merged.relaxations.update(b.relaxations)
    return merged


def bundle_to_dict(bundle: EvidenceBundle) -> dict:
    return {
        "claim_id": bundle.claim_id,
        "query_used": list(bundle.query_used.tokens),
        "relaxations": dict(bundle.relaxations),
        "results": {
            engine: [
                {
                    "rank": r.rank,
                    "url": r.url,
                    "snippet": r.snippet,
                    "page_text": r.page_text,
                }
                for r in hits
            ]
            for engine, hits in bundle.results.items()
        },
    }


def bundle_from_dict(data: dict) -> EvidenceBundle:
    results = {
        engine: [
            SearchResult(
                rank=r["rank"],
                url=r["url"],
                snippet=r["snippet"],
                engine=engine,
                page_text=r.get("page_text"),
            )
            for r in hits
        ]
        for engine, hits in data["results"].items()
    }
    return EvidenceBundle(
        claim_id=data["claim_id"],
        query_used=Query(tokens=tuple(data["query_used"]), origin_claim_id=data["claim_id"]),
        results=results,
        relaxations=dict(data["relaxations"]),
    )


class CountingProvider:
    """Wraps another provider and counts how many searches it served."""

    def __init__(self, inner):
        self.inner = inner
        self.search_count = 0

    @property
    def engine(self) -> str:
        return self.inner.engine

    def search(self, query: Query, max_hits: int = MAX_HITS) -> list[SearchResult]:
        self.search_count += 1
        return self.inner.search(query, max_hits=max_hits)


def normalize_query_text(text: str) -> str:
    return " ".join(text.split()).casefold()


def fixture_key(query_text: str) -> str:
    return hashlib.sha256(normalize_query_text(query_text).encode("utf-8")).hexdigest()


class FixtureProvider:
    """Deterministic search provider resolving queries against JSON files
    laid out as ``<root>/<engine>/<sha256(normalized query)>.json``."""

    def __init__(self, root: str | Path, engine: str = "fixture"):
        self.root = Path(root)
        self.engine = engine

    def search(self, query: Query, max_hits: int = MAX_HITS) -> list[SearchResult]:
        path = self.root / self.engine / f"{fixture_key(query.text)}.json"
        if not path.exists():
            return []
        try:
            payload = json.loads(path.read_text("utf-8"))
            raw = payload["results"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"bad fixture file {path}: {exc}") from exc
        results = []
        for entry in sorted(raw, key=lambda e: e["rank"]):
            page_file = entry.get("page_file")
            if page_file is not None:
                page_file = str((path.parent / page_file).resolve())
            results.append(
                SearchResult(
                    rank=entry["rank"],
                    url=entry["url"],
                    snippet=entry.get("snippet", ""),
                    engine=self.engine,
                    page_file=page_file,
                )
            )
        return results[:max_hits]


def search(provider, query: Query, max_hits: int = MAX_HITS) -> list[SearchResult]:
    """Run one query against a provider, capped at max_hits results."""
    return list(provider.search(query, max_hits=max_hits))[:max_hits]


def filter_domains(results: list[SearchResult], policy: DomainPolicy | None) -> list[SearchResult]:
    """Apply the domain policy; rank order is preserved and ranks are not
    renumbered, so gaps reveal that filtering happened."""
    if policy is None:
        return list(results)
    return [r for r in results if policy.allows(r.url)]


def _search_with_retry(provider, query, max_hits, attempts=3, backoff=0.5, sleep=time.sleep):
    for attempt in range(attempts):
        try:
            return search(provider, query, max_hits=max_hits)
        except RetryableSearchError:
            if attempt == attempts - 1:
                raise
            sleep(backoff * (2**attempt))


def retrieve_with_relaxation(
    provider,
    query: Query,
    policy: DomainPolicy | None = None,
    max_hits: int = MAX_HITS,
    attempts: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> EvidenceBundle:
    """Search, filter, and, while nothing survives, drop trailing query
    tokens one at a time. Issues at most len(query) searches."""
    q = query
    relaxed = 0
    while True:
        hits = _search_with_retry(provider, q, max_hits, attempts, backoff, sleep)
        kept = filter_domains(hits, policy)
        if kept or len(q) == 1:
            break
        q = relax(q)
        relaxed += 1
    return EvidenceBundle(
        claim_id=query.origin_claim_id,
        query_used=q,
        results={provider.engine: kept},
        relaxations={provider.engine: relaxed},
    )


# --- page fetching -----------------------------------------------------------

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "tr", "td", "th", "table",
    "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "section",
    "article", "header", "footer", "nav", "aside", "pre", "hr", "title",
}
_SKIP_TAGS = {"script", "style", "noscript", "template"}


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS and self._skip_depth > 0:
            self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip_depth == 0:
            self.parts.append(data)


def strip_html(html: str) -> str:
    """Visible text only: script/style removed, tags dropped, block
    elements become newlines, entities decoded, whitespace collapsed."""
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    lines = []
    for raw_line in "".join(parser.parts).splitlines():
        line = " ".join(raw_line.split())
        if line:
            lines.append(line)
    return "\n".join(lines)


def fetch_page(url: str, fetcher: Callable[[str], str]) -> str:
    """Fetch a URL through the given transport and strip it to visible
    text. Any transport failure surfaces as PageUnavailable."""
    try:
        html = fetcher(url)
    except PageUnavailable:
        raise
    except Exception as exc:
        raise PageUnavailable(f"{url}: {exc}") from exc
    if not isinstance(html, str):
        raise PageUnavailable(f"{url}: non-text content")
    return strip_html(html)


class FixturePageFetcher:
    """Reads fixture page bodies from disk; counts fetches so tests can
    assert that snippet-only runs never touch pages."""

    def __init__(self):
        self.fetch_count = 0

    def __call__(self, result: SearchResult) -> str:
        if not result.page_file:
            raise PageUnavailable(f"{result.url}: no fixture page body")
        path = Path(result.page_file)
        if not path.exists():
            raise PageUnavailable(f"{result.url}: missing fixture page {path}")
        self.fetch_count += 1
        return path.read_text("utf-8")


class LivePageFetcher:
    """HTTP page transport with the shared cache in front of it."""

    def __init__(self, cache: "DiskCache | None" = None, timeout: float = 10.0):
        self.cache = cache
        self.timeout = timeout
        self.fetch_count = 0

    def __call__(self, result: SearchResult) -> str:
        key = ("page", result.url)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached.decode("utf-8")
        import requests

        self.fetch_count += 1
        try:
            resp = requests.get(
                result.url, timeout=self.timeout, headers={"User-Agent": USER_AGENT}
            )
        except requests.RequestException as exc:
            raise PageUnavailable(f"{result.url}: {exc}") from exc
        if resp.status_code != 200:
            raise PageUnavailable(f"{result.url}: HTTP {resp.status_code}")
        ctype = resp.headers.get("Content-Type", "")
        if ctype and not ("html" in ctype or "text" in ctype):
            raise PageUnavailable(f"{result.url}: content type {ctype!r}")
        if self.cache is not None:
            self.cache.put(key, resp.text.encode("utf-8"))
        return resp.text


def attach_page_texts(results: list[SearchResult], fetcher, max_workers: int = 4) -> None:
    """Populate result.page_text in place, fetching concurrently. Results
    whose page cannot be fetched keep page_text=None (snippet-only)."""

    def fill(result):
        try:
            result.page_text = strip_html(fetcher(result))
        except PageUnavailable as exc:
            log.debug("page unavailable: %s", exc)

    if max_workers <= 1 or len(results) <= 1:
        for r in results:
            fill(r)
        return
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        list(pool.map(fill, results))


# --- cache -------------------------------------------------------------------


class DiskCache:
    """Key-addressed cache with self-verifying entries; a corrupt entry is
    treated as a miss and evicted. Writes are temp-file-then-rename."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get("VERISCOPE_CACHE_DIR") or (
                Path.home() / ".cache" / "veriscope"
            )
        self.root = Path(root)

    def _path(self, key: tuple[str, str]) -> Path:
        namespace, ident = key
        digest = hashlib.sha256(ident.encode("utf-8")).hexdigest()
        return self.root / namespace / f"{digest}.json"

    def get(self, key: tuple[str, str]) -> bytes | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text("utf-8"))
            payload = base64.b64decode(entry["payload"])
            if hashlib.sha256(payload).hexdigest() != entry["sha256"]:
                raise ValueError("payload digest mismatch")
            return payload
        except Exception:
            path.unlink(missing_ok=True)
            return None

    def put(self, key: tuple[str, str], payload: bytes) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "key": list(key),
            "sha256": hashlib.sha256(payload).hexdigest(),
            "payload": base64.b64encode(payload).decode("ascii"),
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry), "utf-8")
        tmp.replace(path)


def cache_get(key: tuple[str, str], cache: DiskCache | None = None) -> bytes | None:
    return (cache or DiskCache()).get(key)


def cache_put(key: tuple[str, str], payload: bytes, cache: DiskCache | None = None) -> None:
    (cache or DiskCache()).put(key, payload)


# --- live search providers ---------------------------------------------------


class GoogleProvider:
    """Google Custom Search JSON API. Needs VERISCOPE_GOOGLE_KEY in the
    form ``<api_key>:<cx>``. Results are cached on disk."""

    engine = "google"
    endpoint = "https://www.googleapis.com/customsearch/v1"

    def __init__(self, cache: DiskCache | None = None, timeout: float = 10.0):
        self.cache = cache or DiskCache()
        self.timeout = timeout

    def search(self, query: Query, max_hits: int = MAX_HITS) -> list[SearchResult]:
        raw = self._raw_results(query.text)
        results = []
        for i, item in enumerate(raw[:max_hits], start=1):
            results.append(
                SearchResult(
                    rank=i,
                    url=item.get("link", ""),
                    snippet=item.get("snippet", ""),
                    engine=self.engine,
                )
            )
        return results

    def _raw_results(self, query_text: str) -> list[dict]:
        key = (self.engine, query_text)
        cached = self.cache.get(key)
        if cached is not None:
            return json.loads(cached)
        credentials = os.environ.get("VERISCOPE_GOOGLE_KEY", "")
        if ":" not in credentials:
            raise RetryableSearchError("VERISCOPE_GOOGLE_KEY not set to <api_key>:<cx>")
        api_key, cx = credentials.split(":", 1)
        import requests

        try:
            resp = requests.get(
                self.endpoint,
                params={"key": api_key, "cx": cx, "q": query_text, "num": MAX_HITS},
                timeout=self.timeout,
                headers={"User-Agent": USER_AGENT},
            )
            resp.raise_for_status()
            items = resp.json().get("items", [])
        except requests.RequestException as exc:
            raise RetryableSearchError(f"google search failed: {exc}") from exc
        self.cache.put(key, json.dumps(items).encode("utf-8"))
        return items


class BingProvider:
    """Bing Web Search v7. Needs VERISCOPE_BING_KEY. Cached on disk."""

    engine = "bing"
    endpoint = "https://api.bing.microsoft.com/v7.0/search"

    def __init__(self, cache: DiskCache | None = None, timeout: float = 10.0):
        self.cache = cache or DiskCache()
        self.timeout = timeout

    def search(self, query: Query, max_hits: int = MAX_HITS) -> list[SearchResult]:
        raw = self._raw_results(query.text)
        results = []
        for i, item in enumerate(raw[:max_hits], start=1):
            results.append(
                SearchResult(
                    rank=i,
                    url=item.get("url", ""),
                    snippet=item.get("snippet", ""),
                    engine=self.engine,
                )
            )
        return results

    def _raw_results(self, query_text: str) -> list[dict]:
        key = (self.engine, query_text)
        cached = self.cache.get(key)
        if cached is not None:
            return json.loads(cached)
        api_key = os.environ.get("VERISCOPE_BING_KEY", "")
        if not api_key:
            raise RetryableSearchError("VERISCOPE_BING_KEY not set")
        import requests

        try:
            resp = requests.get(
                self.endpoint,
                params={"q": query_text, "count": MAX_HITS},
                timeout=self.timeout,
                headers={"Ocp-Apim-Subscription-Key": api_key, "User-Agent": USER_AGENT},
            )
            resp.raise_for_status()
            items = resp.json().get("webPages", {}).get("value", [])
        except requests.RequestException as exc:
            raise RetryableSearchError(f"bing search failed: {exc}") from exc
        self.cache.put(key, json.dumps(items).encode("utf-8"))
        return items


def default_blacklist() -> DomainPolicy:
    from importlib import resources

    path = resources.files("veriscope.data").joinpath("unreliable_domains.txt")
    with resources.as_file(path) as p:
        return DomainPolicy.from_file(p, mode="blacklist")


def default_cqa_whitelist() -> DomainPolicy:
    from importlib import resources

    path = resources.files("veriscope.data").joinpath("cqa_whitelist.txt")
    with resources.as_file(path) as p:
        return DomainPolicy.from_file(p, mode="whitelist")
