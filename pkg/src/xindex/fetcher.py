"""Citation retrieval client with a disk cache and request pacing.

One GET per DOI against a configurable endpoint template; the response body
is RIS text. Bodies are cached verbatim, one file per DOI, so a rerun only
requests what is missing and parser fixes never require refetching.

Cache layout (``cache_dir``)::

    10.1145%2F2702123.2702150.ris         verbatim response body
    10.1145%2F2702123.2702150.meta.json   {"doi", "fetched_at", "http_status", "bytes", "status"}

A DOI counts as cached once its sidecar exists; the sidecar is written after
the body, both via write-then-rename.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import os
import tempfile
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union
from urllib.parse import quote

import requests

from .ris import CorpusManifest, RawRisRecord, doi_to_filename, normalize_doi, parse_ris_stream

logger = logging.getLogger(__name__)

TOKEN_ENV = "XINDEX_API_TOKEN"


class FetchError(RuntimeError):
    pass


class FetchAuthError(FetchError):
    """The endpoint rejected our credentials; retrying cannot help."""


@dataclass
class FetchConfig:
    endpoint: str
    api_token: str = ""
    max_requests_per_minute: float = 60.0
    cache_dir: Union[str, Path] = "cache"
    retry_limit: int = 3
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    timeout: float = 30.0
    backoff: float = 1.0
    workers: int = 1
    # Length of the pacing window; only tests shrink it.
    window_seconds: float = 60.0
    # Extra gap on the window guard so transit jitter cannot squeeze an
    # extra request into the server's view of a window.
    pacing_margin: float = 0.25

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)
        if "{doi}" not in self.endpoint:
            raise ValueError("endpoint must contain a {doi} placeholder")
        if self.max_requests_per_minute <= 0:
            raise ValueError("max_requests_per_minute must be positive")
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.pacing_margin < 0:
            raise ValueError("pacing_margin must be non-negative")

    @classmethod
    def from_file(cls, path: Union[str, Path], env=None, **overrides) -> "FetchConfig":
        """JSON config file; the token comes from $XINDEX_API_TOKEN unless given."""
        env = os.environ if env is None else env
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.update({k: v for k, v in overrides.items() if v is not None})
        data.setdefault("api_token", env.get(TOKEN_ENV, ""))
        return cls(**data)

    def url_for(self, doi: str) -> str:
        return self.endpoint.replace("{doi}", quote(doi, safe=""))

    def headers(self) -> dict[str, str]:
        if not self.api_token:
            return {}
        value = f"{self.auth_scheme} {self.api_token}" if self.auth_scheme else self.api_token
        return {self.auth_header: value}


class RateLimiter:
    """Paces request starts: at most ``max_requests`` per ``per`` seconds.

    Starts are spread evenly (``per / max_requests`` apart) and additionally
    checked against a sliding window of the last ``max_requests`` starts,
    padded by ``margin`` seconds. Thread safe; each caller reserves a slot,
    then sleeps outside the lock.
    """

    def __init__(self, max_requests: float, per: float = 60.0,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep,
                 margin: float = 0.0):
        self.max_requests = max_requests
        self.per = per
        self.margin = margin
        self.interval = per / max_requests
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = None
        self._starts: deque[float] = deque(maxlen=max(1, int(max_requests)))
        self.history: list[float] = []

    def acquire(self) -> float:
        with self._lock:
            now = self._clock()
            t = now if self._next is None else max(now, self._next)
            if len(self._starts) == self._starts.maxlen:
                t = max(t, self._starts[0] + self.per + self.margin)
            self._starts.append(t)
            self._next = t + self.interval
            self.history.append(t)
        wait = t - now
        if wait > 0:
            self._sleep(wait)
        return t


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DiskCache:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        if not os.access(self.root, os.W_OK):
            raise PermissionError(f"cache directory not writable: {self.root}")

    def body_path(self, doi: str) -> Path:
        return self.root / doi_to_filename(doi, ".ris")

    def meta_path(self, doi: str) -> Path:
        return self.root / doi_to_filename(doi, ".meta.json")

    def __contains__(self, doi: str) -> bool:
        return self.meta_path(doi).exists() and self.body_path(doi).exists()

    def get(self, doi: str) -> Optional[bytes]:
        if doi not in self:
            return None
        return self.body_path(doi).read_bytes()

    def put(self, doi: str, body: bytes, http_status: int = 200) -> None:
        _atomic_write(self.body_path(doi), body)
        meta = {
            "doi": doi,
            "fetched_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "http_status": http_status,
            "bytes": len(body),
            "status": "ok",
        }
        _atomic_write(self.meta_path(doi), (json.dumps(meta, sort_keys=True) + "\n").encode())


@dataclass
class FetchReport:
    requested: int = 0
    served_from_cache: int = 0
    fetched: int = 0
    failed: list[tuple[str, str]] = field(default_factory=list)

    def check(self) -> None:
        total = self.served_from_cache + self.fetched + len(self.failed)
        if self.requested != total:
            raise AssertionError(f"report does not reconcile: {self.requested} != {total}")

    def as_dict(self) -> dict:
        return {
            "requested": self.requested,
            "served_from_cache": self.served_from_cache,
            "fetched": self.fetched,
            "failed": [list(f) for f in self.failed],
        }


class CitationFetcher:
    """Shares one HTTP session, cache and rate limiter across many DOIs."""

    def __init__(self, config: FetchConfig, session: Optional[requests.Session] = None,
                 limiter: Optional[RateLimiter] = None):
        self.config = config
        self.cache = DiskCache(config.cache_dir)
        self.session = session or requests.Session()
        self.limiter = limiter or RateLimiter(
            config.max_requests_per_minute, config.window_seconds, margin=config.pacing_margin
        )

    def _request(self, doi: str) -> requests.Response:
        cfg = self.config
        url = cfg.url_for(doi)
        last = "no attempt made"
        for attempt in range(1, cfg.retry_limit + 1):
            self.limiter.acquire()
            try:
                resp = self.session.get(url, headers=cfg.headers(), timeout=cfg.timeout)
            except requests.RequestException as exc:
                last = f"transport error: {exc.__class__.__name__}"
            else:
                if resp.status_code in (401, 403):
                    raise FetchAuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 200:
                    return resp
                last = f"HTTP {resp.status_code}"
                if resp.status_code < 500 and resp.status_code != 429:
                    break
            logger.info("fetch %s attempt %d/%d failed: %s", doi, attempt, cfg.retry_limit, last)
            if attempt < cfg.retry_limit and cfg.backoff > 0:
                time.sleep(cfg.backoff * attempt)
        raise FetchError(last)

    def fetch_body(self, doi: str) -> tuple[bytes, bool]:
        """Response body for ``doi`` and whether it came from the cache."""
        doi = normalize_doi(doi)
        cached = self.cache.get(doi)
        if cached is not None:
            return cached, True
        resp = self._request(doi)
        self.cache.put(doi, resp.content, resp.status_code)
        return resp.content, False

    def fetch(self, doi: str) -> list[RawRisRecord]:
        body, _ = self.fetch_body(doi)
        return parse_ris_stream(body)


def fetch_citations(doi: str, config: FetchConfig, fetcher: Optional[CitationFetcher] = None) -> list[RawRisRecord]:
    """Citing-work records for one DOI, from the cache when possible."""
    return (fetcher or CitationFetcher(config)).fetch(doi)


def fetch_corpus(manifest: CorpusManifest, config: FetchConfig,
                 fetcher: Optional[CitationFetcher] = None) -> FetchReport:
    """Fill the cache for every manifest DOI; failures are reported, not raised.

    Authentication errors still abort the batch.
    """
    fetcher = fetcher or CitationFetcher(config)
    dois = list(dict.fromkeys(p.doi for p in manifest.papers()))
    report = FetchReport(requested=len(dois))

    def one(doi):
        try:
            _, from_cache = fetcher.fetch_body(doi)
        except FetchAuthError:
            raise
        except FetchError as exc:
            return doi, "failed", str(exc)
        return doi, "cache" if from_cache else "fetched", ""

    if config.workers == 1:
        outcomes = [one(d) for d in dois]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(one, dois))
    for doi, kind, reason in outcomes:
        if kind == "cache":
            report.served_from_cache += 1
        elif kind == "fetched":
            report.fetched += 1
        else:
            report.failed.append((doi, reason))
    report.check()
    return report
