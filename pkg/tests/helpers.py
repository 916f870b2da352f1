"""Brute-force oracles and random corpora for cross-checking the engine.

The oracles never call into xindex.engine: each citation carries its true
label from generation, and every analysis is recomputed by filtering the
full flat list of citations.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from xindex.ris import CitationRecord, PaperRef

IN_SOURCES = (
    "Proceedings of the CHI Conference on Human Factors in Computing Systems",
    "ACM Symposium on User Interface Software and Technology",
    "International Journal of Human-Computer Studies",
    "Behaviour and Information Technology",
)
OUT_SOURCES = (
    "Nature Communications",
    "Journal of Vision",
    "IEEE Transactions on Robotics",
    "Cognitive Science",
)


@dataclass(frozen=True)
class Flat:
    paper: PaperRef
    citing_doi: str | None
    year: int | None
    in_field: bool


def random_corpus(rng: random.Random, venues=("CHI", "UIST"), year_lo=2008, year_hi=2023,
                  max_papers=12, max_cites=10, undated_p=0.1, dup_p=0.1):
    """Random papers and citations; returns (papers, records, flat truth)."""
    papers = []
    for v in venues:
        for i in range(rng.randint(1, max_papers)):
            papers.append(PaperRef(venue=v, pub_year=rng.randint(year_lo, year_hi), doi=f"10.1/{v}.{i}"))
    records, flat = [], []
    serial = 0
    for p in papers:
        dois = []
        for _ in range(rng.randint(0, max_cites)):
            in_field = rng.random() < 0.5
            source = rng.choice(IN_SOURCES if in_field else OUT_SOURCES)
            year = None if rng.random() < undated_p else rng.randint(year_lo, year_hi)
            if dois and rng.random() < dup_p:
                doi = rng.choice(dois)
            elif rng.random() < 0.1:
                doi = None
            else:
                serial += 1
                doi = f"10.2/c{serial}"
                dois.append(doi)
            records.append(CitationRecord(cited=p, source_strings=(source,), citation_year=year, citing_doi=doi))
            flat.append(Flat(p, doi, year, in_field))
    return papers, records, flat


def dedup(flat):
    seen = set()
    out = []
    for f in flat:
        if f.citing_doi is not None:
            key = (f.paper, f.citing_doi)
            if key in seen:
                continue
            seen.add(key)
        out.append(f)
    return out


def count(items):
    items = list(items)
    return len(items), sum(1 for f in items if f.in_field)


def oracle_cohort(papers, flat, venue, cutoff_year):
    flat = dedup(flat)
    out = {}
    for y in sorted({p.pub_year for p in papers if p.venue == venue}):
        out[y] = count(
            f for f in flat
            if f.paper.venue == venue and f.paper.pub_year == y
            and (f.year is None or f.year <= cutoff_year)
        )
    return out


def oracle_window(papers, flat, venue, last_complete):
    flat = dedup(flat)
    out = {}
    for y in sorted({p.pub_year for p in papers if p.venue == venue}):
        if y + 5 > last_complete:
            continue
        out[y] = count(
            f for f in flat
            if f.paper.venue == venue and f.paper.pub_year == y
            and f.year is not None and y + 1 <= f.year <= y + 5
        )
    return out


def oracle_trajectory(papers, flat, venue, pub_year, cutoff_year):
    flat = dedup(flat)
    return {
        c: count(
            f for f in flat
            if f.paper.venue == venue and f.paper.pub_year == pub_year and f.year == c
        )
        for c in range(pub_year, cutoff_year + 1)
    }


def oracle_rolling(papers, flat, venue, last_complete):
    flat = dedup(flat)
    years = [p.pub_year for p in papers if p.venue == venue]
    return {
        y: count(
            f for f in flat
            if f.paper.venue == venue and f.year == y and y - 5 <= f.paper.pub_year <= y - 1
        )
        for y in range(min(years) + 5, last_complete + 1)
    }


def as_counts(series_points):
    return {k: (r.n_total, r.n_infield) for k, r in series_points.items()}


class MockEndpoint:
    """Local HTTP endpoint serving RIS bodies per DOI and logging every hit.

    ``responses`` maps DOI -> (status, body); unknown DOIs get 200 and an
    empty body. ``fail`` DOIs always answer 503.
    """

    def __init__(self, responses=None, token="secret", delay=0.0, fail=()):
        self.responses = dict(responses or {})
        self.token = token
        self.delay = delay
        self.fail = set(fail)
        self.hits: list[tuple[float, str]] = []
        self._lock = threading.Lock()
        endpoint = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                t = time.monotonic()
                doi = parse_qs(urlparse(self.path).query).get("doi", [""])[0]
                with endpoint._lock:
                    endpoint.hits.append((t, doi))
                if endpoint.delay:
                    time.sleep(endpoint.delay)
                if self.headers.get("Authorization") != f"Bearer {endpoint.token}":
                    status, body = 401, b"unauthorized"
                elif doi in endpoint.fail:
                    status, body = 503, b"unavailable"
                else:
                    status, body = endpoint.responses.get(doi, (200, b""))
                self.send_response(status)
                self.send_header("Content-Type", "application/x-research-info-systems")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/citations?doi={{doi}}"

    def requested(self) -> list[str]:
        with self._lock:
            return [d for _, d in self.hits]

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


# -- RIS fuzzing -------------------------------------------------------------

_NOISE = ["", "garbage", "  indented", "ti  - lower", "\t", "ER - single space", " ER  - lead",
          "er  - lower", "ERR - x", "   ", "éè accents"]
_TAGS = ["TI", "T2", "PY", "AU", "DO", "A1", "Y1", "N2", "JO", "BT", "UR", "KW"]
_VALUES = ["", "x", "2019///", "a  - b", "ER  - inside value", "10.1145/1.2", "ümläut", "  padded  "]


def fuzz_ris(rnd: random.Random) -> str:
    """Random well-nested RIS-ish text.

    TY only ever opens a record and only the final block may stay open, so
    every ER line closes exactly one record; everything else is noise,
    continuation lines, odd spacing and mixed line endings.
    """
    lines = []
    blocks = rnd.randint(0, 6)
    for i in range(blocks):
        if rnd.random() < 0.3:
            lines.append(rnd.choice(_NOISE))
        if rnd.random() < 0.7:
            lines.append("TY  - " + rnd.choice(["JOUR", "CONF", "CHAP", ""]))
        for _ in range(rnd.randint(0, 6)):
            tag = rnd.choice(_TAGS)
            lines.append(f"{tag}  -{rnd.choice(['', ' '])}{rnd.choice(_VALUES)}")
            if rnd.random() < 0.25:
                lines.append(rnd.choice(["   more", "continued", "", "ER -nope"]))
        if i < blocks - 1 or rnd.random() < 0.7:
            lines.append(rnd.choice(["ER  - ", "ER  -", "ER  - x", "ER  -x"]))
    nl = rnd.choice(["\n", "\r\n"])
    text = nl.join(lines) + (nl if rnd.random() < 0.5 else "")
    if rnd.random() < 0.1:
        text = "﻿" + text
    return text


def er_count(text: str) -> int:
    """Lines that are exactly an ER tag line."""
    return sum(
        1 for line in text.lstrip("﻿").replace("\r\n", "\n").split("\n")
        if line.startswith("ER  -")
    )
