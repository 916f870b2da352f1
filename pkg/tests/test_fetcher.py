import json
import threading

import pytest

from helpers import MockEndpoint
from xindex.fetcher import (
    CitationFetcher,
    DiskCache,
    FetchAuthError,
    FetchConfig,
    FetchError,
    FetchReport,
    RateLimiter,
    fetch_citations,
    fetch_corpus,
)
from xindex.ris import load_corpus_manifest

BODY = b"TY  - JOUR\nT2  - Nature Communications\nPY  - 2021\nDO  - 10.9/citing\nER  - \n"


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.lock = threading.Lock()

    def __call__(self):
        with self.lock:
            return self.now

    def sleep(self, dt):
        with self.lock:
            self.now += dt


def max_in_window(times, per):
    times = sorted(times)
    best, j = 0, 0
    for i, t in enumerate(times):
        while times[j] + per <= t:
            j += 1
        best = max(best, i - j + 1)
    return best


def manifest(*dois):
    return load_corpus_manifest("".join(f"CHI,2015,{d}\n" for d in dois))


def config(ep, tmp_path, **kw):
    kw.setdefault("max_requests_per_minute", 6000)
    return FetchConfig(endpoint=ep.url, api_token="secret", cache_dir=tmp_path / "cache", backoff=0, **kw)


# -- pacing ------------------------------------------------------------------

def test_hundred_requests_at_sixty_per_minute_take_99_seconds():
    clock = FakeClock()
    lim = RateLimiter(60, 60.0, clock=clock, sleep=clock.sleep)
    for _ in range(100):
        lim.acquire()
    assert clock.now >= 99.0
    assert max_in_window(lim.history, 60.0) <= 60


def test_sliding_window_holds_under_concurrency():
    clock = FakeClock()
    lim = RateLimiter(7, 10.0, clock=clock, sleep=lambda dt: None)
    threads = [threading.Thread(target=lambda: [lim.acquire() for _ in range(10)]) for _ in range(5)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(lim.history) == 50
    assert max_in_window(lim.history, 10.0) <= 7


def test_idle_limiter_does_not_wait():
    clock = FakeClock()
    lim = RateLimiter(2, 1.0, clock=clock, sleep=clock.sleep)
    lim.acquire()
    clock.now = 100.0
    assert lim.acquire() == 100.0


# -- config ------------------------------------------------------------------

def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        FetchConfig(endpoint="http://x/")
    with pytest.raises(ValueError):
        FetchConfig(endpoint="http://x/{doi}", max_requests_per_minute=0)
    with pytest.raises(ValueError):
        FetchConfig(endpoint="http://x/{doi}", retry_limit=0)


def test_config_file_and_env_token(tmp_path):
    path = tmp_path / "fetch.json"
    path.write_text(json.dumps({"endpoint": "http://h/c?doi={doi}", "cache_dir": str(tmp_path / "c")}))
    cfg = FetchConfig.from_file(path, env={"XINDEX_API_TOKEN": "tok"}, workers=2)
    assert cfg.api_token == "tok" and cfg.workers == 2
    assert cfg.headers() == {"Authorization": "Bearer tok"}
    assert cfg.url_for("10.1/a b") == "http://h/c?doi=10.1%2Fa%20b"


def test_unwritable_cache_dir(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    with pytest.raises(OSError):
        DiskCache(target / "sub")


# -- fetching ----------------------------------------------------------------

def test_fetch_then_cache_hit(tmp_path):
    with MockEndpoint({"10.1/a": (200, BODY)}) as ep:
        cfg = config(ep, tmp_path)
        (rec,) = fetch_citations("10.1/A", cfg)
        assert rec.first("T2") == "Nature Communications"
        assert ep.requested() == ["10.1/a"]
        meta = json.loads((tmp_path / "cache" / "10.1%2Fa.meta.json").read_text())
        assert meta["http_status"] == 200 and meta["bytes"] == len(BODY)
        assert (tmp_path / "cache" / "10.1%2Fa.ris").read_bytes() == BODY
        assert fetch_citations("10.1/a", cfg) == [rec]
        assert ep.requested() == ["10.1/a"]


def test_empty_result_is_cached(tmp_path):
    with MockEndpoint() as ep:
        cfg = config(ep, tmp_path)
        assert fetch_citations("10.1/none", cfg) == []
        assert fetch_citations("10.1/none", cfg) == []
        assert ep.requested() == ["10.1/none"]


def test_auth_rejection_is_immediate(tmp_path):
    with MockEndpoint(token="other") as ep:
        cfg = config(ep, tmp_path, retry_limit=5)
        with pytest.raises(FetchAuthError):
            fetch_citations("10.1/a", cfg)
        assert len(ep.requested()) == 1
        with pytest.raises(FetchAuthError):
            fetch_corpus(manifest("10.1/a", "10.1/b"), cfg)


def test_server_errors_retry_then_fail(tmp_path):
    with MockEndpoint(fail={"10.1/bad"}) as ep:
        cfg = config(ep, tmp_path, retry_limit=3)
        with pytest.raises(FetchError, match="503"):
            CitationFetcher(cfg).fetch_body("10.1/bad")
        assert ep.requested() == ["10.1/bad"] * 3


def test_client_error_not_retried(tmp_path):
    with MockEndpoint({"10.1/gone": (404, b"")}) as ep:
        cfg = config(ep, tmp_path, retry_limit=3)
        with pytest.raises(FetchError, match="404"):
            CitationFetcher(cfg).fetch_body("10.1/gone")
        assert len(ep.requested()) == 1


def test_transport_failure(tmp_path):
    cfg = FetchConfig(endpoint="http://127.0.0.1:9/{doi}", cache_dir=tmp_path, retry_limit=2,
                      backoff=0, timeout=0.5)
    report = fetch_corpus(manifest("10.1/a"), cfg)
    assert report.failed[0][0] == "10.1/a"
    assert "transport error" in report.failed[0][1]


def test_one_failing_doi_is_isolated(tmp_path):
    with MockEndpoint({"10.1/a": (200, BODY)}, fail={"10.1/b"}) as ep:
        cfg = config(ep, tmp_path, retry_limit=2)
        report = fetch_corpus(manifest("10.1/a", "10.1/b", "10.1/c"), cfg)
        assert report.as_dict() == {
            "requested": 3, "served_from_cache": 0, "fetched": 2, "failed": [["10.1/b", "HTTP 503"]],
        }
        cache = DiskCache(cfg.cache_dir)
        assert "10.1/a" in cache and "10.1/c" in cache and "10.1/b" not in cache


def test_rerun_fetches_only_missing(tmp_path):
    dois = [f"10.1/p{i}" for i in range(6)]
    with MockEndpoint() as ep:
        cfg = config(ep, tmp_path)
        fetch_corpus(manifest(*dois[:4]), cfg)
        report = fetch_corpus(manifest(*dois), cfg)
        assert (report.served_from_cache, report.fetched) == (4, 2)
        assert ep.requested() == dois[:4] + dois[4:]
        again = fetch_corpus(manifest(*dois), cfg)
        assert again.fetched == 0 and again.served_from_cache == 6


def test_body_without_sidecar_is_refetched(tmp_path):
    with MockEndpoint({"10.1/a": (200, BODY)}) as ep:
        cfg = config(ep, tmp_path)
        (tmp_path / "cache").mkdir()
        (tmp_path / "cache" / "10.1%2Fa.ris").write_bytes(b"partial")
        assert len(fetch_citations("10.1/a", cfg)) == 1
        assert ep.requested() == ["10.1/a"]


def test_empty_manifest_report(tmp_path):
    with MockEndpoint() as ep:
        report = fetch_corpus(manifest(), config(ep, tmp_path))
    assert report == FetchReport()


def test_report_invariant():
    with pytest.raises(AssertionError):
        FetchReport(requested=2, fetched=1).check()


def test_parallel_workers_respect_window(tmp_path):
    dois = [f"10.1/w{i}" for i in range(12)]
    with MockEndpoint(delay=0.05) as ep:
        # 4 requests per 0.4 s window
        cfg = config(ep, tmp_path, max_requests_per_minute=4, window_seconds=0.4, workers=4)
        fetcher = CitationFetcher(cfg)
        report = fetch_corpus(manifest(*dois), cfg, fetcher)
        assert report.fetched == 12
        assert sorted(ep.requested()) == sorted(dois)
        assert max_in_window(fetcher.limiter.history, 0.4) <= 4
