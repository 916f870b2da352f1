"""X-index computation and the four temporal analyses.

All analyses pool citations across the papers of a cohort before taking the
ratio; per-paper averaging is only reported alongside as ``paper_means``.
"""

from __future__ import annotations

import datetime as _dt
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .catalog import FieldLabel, VenueCatalog, classify_sources
from .ris import CitationRecord, PaperRef

WINDOW_YEARS = 5


class UnknownVenueError(ValueError):
    def __init__(self, venue: str, available: Sequence[str]):
        super().__init__(
            f"unknown venue {venue!r}; available venues: {', '.join(available) or '(none)'}"
        )
        self.venue = venue
        self.available = list(available)


class CorpusSpanError(ValueError):
    pass


@dataclass(frozen=True)
class XIndexResult:
    n_total: int
    n_infield: int

    def __post_init__(self):
        if not 0 <= self.n_infield <= self.n_total:
            raise ValueError(f"need 0 <= n_infield <= n_total, got {self.n_infield}/{self.n_total}")

    @property
    def n_outfield(self) -> int:
        return self.n_total - self.n_infield

    @property
    def fraction(self) -> Optional[Fraction]:
        if self.n_total == 0:
            return None
        return Fraction(self.n_outfield, self.n_total)

    @property
    def value(self) -> Optional[float]:
        # int/int true division is correctly rounded.
        if self.n_total == 0:
            return None
        return self.n_outfield / self.n_total

    def __add__(self, other: "XIndexResult") -> "XIndexResult":
        return XIndexResult(self.n_total + other.n_total, self.n_infield + other.n_infield)


EMPTY = XIndexResult(0, 0)


def x_index(labels: Iterable[Union[FieldLabel, int, bool]]) -> XIndexResult:
    """Pooled X-index of a set of citation labels: 1 - n_infield / n_total."""
    n_total = 0
    n_in = 0
    for lab in labels:
        n_total += 1
        if lab:
            n_in += 1
    return XIndexResult(n_total, n_in)


@dataclass(frozen=True, order=True)
class Cutoff:
    """Collection date (year and month) bounding the citation data."""

    year: int
    month: int = 12

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"bad cutoff month {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Cutoff":
        m = re.fullmatch(r"\s*(\d{4})(?:-(\d{1,2}))?\s*", text)
        if m is None:
            raise ValueError(f"cutoff must look like YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2) or 12))

    @property
    def last_complete_year(self) -> int:
        return self.year if self.month == 12 else self.year - 1

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def as_cutoff(value: Union[Cutoff, str, int, _dt.date]) -> Cutoff:
    """Coerce a cutoff; a bare int year means data through the end of that year."""
    if isinstance(value, Cutoff):
        return value
    if isinstance(value, str):
        return Cutoff.parse(value)
    if isinstance(value, _dt.date):
        return Cutoff(value.year, value.month)
    if isinstance(value, (int, np.integer)):
        return Cutoff(int(value), 12)
    raise TypeError(f"cannot interpret {value!r} as a cutoff")


class CitationCorpus:
    """Citations grouped by cited paper, deduplicated on citing DOI.

    A later record citing the same paper with a citing DOI already seen for
    that paper is dropped; records without a citing DOI are always kept.
    Papers with no citations are allowed and still define their cohort.
    """

    def __init__(
        self,
        citations: Union[Mapping[PaperRef, Iterable[CitationRecord]], Iterable[CitationRecord]],
        papers: Iterable[PaperRef] = (),
    ):
        self.by_paper: dict[PaperRef, list[CitationRecord]] = {}
        self.parsed: Counter = Counter()
        self.duplicates: Counter = Counter()
        for p in papers:
            self.by_paper.setdefault(p, [])
        if isinstance(citations, Mapping):
            for p in citations:
                self.by_paper.setdefault(p, [])
            items = ((p, r) for p, recs in citations.items() for r in recs)
        else:
            items = ((r.cited, r) for r in citations)
        seen: dict[PaperRef, set[str]] = {}
        for paper, rec in items:
            bucket = self.by_paper.setdefault(paper, [])
            self.parsed[paper.venue] += 1
            if rec.citing_doi is not None:
                dois = seen.setdefault(paper, set())
                if rec.citing_doi in dois:
                    self.duplicates[paper.venue] += 1
                    continue
                dois.add(rec.citing_doi)
            bucket.append(rec)
        self._labels: dict[tuple[str, ...], FieldLabel] = {}
        self._labels_for: Optional[VenueCatalog] = None

    @property
    def venues(self) -> list[str]:
        return sorted({p.venue for p in self.by_paper})

    def pub_years(self, venue: str) -> list[int]:
        return sorted({p.pub_year for p in self.by_paper if p.venue == venue})

    def papers_of(self, venue: str, pub_year: Optional[int] = None) -> list[PaperRef]:
        return [
            p
            for p in self.by_paper
            if p.venue == venue and (pub_year is None or p.pub_year == pub_year)
        ]

    def records(self) -> Iterable[CitationRecord]:
        for recs in self.by_paper.values():
            yield from recs

    def check_venue(self, venue: str) -> None:
        if venue not in {p.venue for p in self.by_paper}:
            raise UnknownVenueError(venue, self.venues)

    def label(self, record: CitationRecord, catalog: VenueCatalog) -> FieldLabel:
        if self._labels_for is not catalog:
            self._labels = {}
            self._labels_for = catalog
        key = record.source_strings
        lab = self._labels.get(key)
        if lab is None:
            lab = self._labels[key] = classify_sources(key, catalog)
        return lab


def as_corpus(citations) -> CitationCorpus:
    if isinstance(citations, CitationCorpus):
        return citations
    return CitationCorpus(citations)


@dataclass
class _Pool:
    """Accumulates labels per paper so pooled and per-paper views agree."""

    per_paper: dict[PaperRef, list[int]] = field(default_factory=dict)

    def add(self, paper: PaperRef, label: FieldLabel) -> None:
        counts = self.per_paper.setdefault(paper, [0, 0])
        counts[0] += 1
        counts[1] += int(label)

    def result(self) -> XIndexResult:
        n = sum(c[0] for c in self.per_paper.values())
        k = sum(c[1] for c in self.per_paper.values())
        return XIndexResult(n, k)

    def paper_mean(self) -> Optional[float]:
        vals = [Fraction(n - k, n) for n, k in self.per_paper.values() if n]
        if not vals:
            return None
        return float(sum(vals) / len(vals))


class _Tally:
    def __init__(self):
        self.counts: dict[str, XIndexResult] = {}

    def add(self, reason: str, label: FieldLabel) -> None:
        self.counts[reason] = self.counts.get(reason, EMPTY) + XIndexResult(1, int(label))

    def as_dict(self) -> dict[str, XIndexResult]:
        return dict(sorted(self.counts.items()))


@dataclass
class CohortSeries:
    """X-index per publication year for one venue."""

    venue: str
    mode: str
    points: dict[int, XIndexResult]
    paper_means: dict[int, Optional[float]] = field(default_factory=dict)
    excluded: dict[str, XIndexResult] = field(default_factory=dict)

    key_columns = ("pub_year",)

    def rows(self):
        for y in sorted(self.points):
            yield (y,), self.points[y], self.paper_means.get(y)


@dataclass
class TrajectorySeries:
    """X-index per citation year for one venue's papers of one publication year."""

    venue: str
    pub_year: int
    points: dict[int, XIndexResult]
    mode: str = "per_year"
    paper_means: dict[int, Optional[float]] = field(default_factory=dict)
    excluded: dict[str, XIndexResult] = field(default_factory=dict)

    key_columns = ("pub_year", "citation_year")

    @property
    def anomalies(self) -> int:
        """Citations dated before the cited paper's publication year."""
        return self.excluded.get("before_publication", EMPTY).n_total

    def rows(self):
        for c in sorted(self.points):
            yield (self.pub_year, c), self.points[c], self.paper_means.get(c)


@dataclass
class RollingSeries:
    """Per citation year, citations of papers published in the previous five years."""

    venue: str
    points: dict[int, XIndexResult]
    paper_means: dict[int, Optional[float]] = field(default_factory=dict)
    excluded: dict[str, XIndexResult] = field(default_factory=dict)

    key_columns = ("citation_year",)

    def rows(self):
        for y in sorted(self.points):
            yield (y,), self.points[y], self.paper_means.get(y)


def _years(corpus: CitationCorpus, venue: str, pub_years: Optional[Iterable[int]]) -> list[int]:
    corpus.check_venue(venue)
    if pub_years is None:
        return corpus.pub_years(venue)
    years = sorted(set(int(y) for y in pub_years))
    if not years:
        raise ValueError("pub_years must not be empty")
    return years


def cohort_analysis(citations, catalog: VenueCatalog, venue: str, pub_years=None, cutoff="2023-01") -> CohortSeries:
    """Cumulative X-index of each publication-year cohort up to the cutoff.

    Undated citations are included; citations dated after the cutoff year are
    not. Years without papers are left out of the series.
    """
    corpus = as_corpus(citations)
    cut = as_cutoff(cutoff)
    series = CohortSeries(venue=venue, mode="cumulative", points={})
    tally = _Tally()
    for y in _years(corpus, venue, pub_years):
        papers = corpus.papers_of(venue, y)
        if not papers:
            continue
        pool = _Pool()
        for p in papers:
            pool.per_paper.setdefault(p, [0, 0])
            for rec in corpus.by_paper[p]:
                lab = corpus.label(rec, catalog)
                if rec.citation_year is not None and rec.citation_year > cut.year:
                    tally.add("after_cutoff", lab)
                else:
                    pool.add(p, lab)
        series.points[y] = pool.result()
        series.paper_means[y] = pool.paper_mean()
    series.excluded = tally.as_dict()
    return series


def window_eligible(pub_year: int, cutoff) -> bool:
    return pub_year + WINDOW_YEARS <= as_cutoff(cutoff).last_complete_year


def five_year_window_analysis(citations, catalog: VenueCatalog, venue: str, pub_years=None, cutoff="2023-01") -> CohortSeries:
    """X-index of each cohort counting only citations from years pub+1 .. pub+5.

    Only cohorts whose window closes by the last complete year before the
    cutoff are reported.
    """
    corpus = as_corpus(citations)
    cut = as_cutoff(cutoff)
    series = CohortSeries(venue=venue, mode="five_year_window", points={})
    tally = _Tally()
    for y in _years(corpus, venue, pub_years):
        papers = corpus.papers_of(venue, y)
        if not papers or not window_eligible(y, cut):
            continue
        lo, hi = y + 1, y + WINDOW_YEARS
        pool = _Pool()
        for p in papers:
            pool.per_paper.setdefault(p, [0, 0])
            for rec in corpus.by_paper[p]:
                lab = corpus.label(rec, catalog)
                if rec.citation_year is None:
                    tally.add("undated", lab)
                elif lo <= rec.citation_year <= hi:
                    pool.add(p, lab)
                else:
                    tally.add("outside_window", lab)
        series.points[y] = pool.result()
        series.paper_means[y] = pool.paper_mean()
    series.excluded = tally.as_dict()
    return series


TRAJECTORY_MODES = ("per_year", "cumulative")


def trajectory_analysis(
    citations, catalog: VenueCatalog, venue: str, pub_year: int, cutoff="2023-01", mode: str = "per_year"
) -> TrajectorySeries:
    """X-index of one cohort for every citation year from pub_year to the cutoff year.

    ``mode="cumulative"`` pools everything from pub_year up to each citation
    year instead of that year alone.
    """
    if mode not in TRAJECTORY_MODES:
        raise ValueError(f"mode must be one of {TRAJECTORY_MODES}, got {mode!r}")
    corpus = as_corpus(citations)
    cut = as_cutoff(cutoff)
    corpus.check_venue(venue)
    papers = corpus.papers_of(venue, pub_year)
    if not papers:
        raise ValueError(f"no {venue} papers published in {pub_year}")
    tally = _Tally()
    pools = {c: _Pool() for c in range(pub_year, cut.year + 1)}
    for p in papers:
        for pool in pools.values():
            pool.per_paper.setdefault(p, [0, 0])
        for rec in corpus.by_paper[p]:
            lab = corpus.label(rec, catalog)
            c = rec.citation_year
            if c is None:
                tally.add("undated", lab)
            elif c < pub_year:
                tally.add("before_publication", lab)
            elif c > cut.year:
                tally.add("after_cutoff", lab)
            else:
                pools[c].add(p, lab)
    series = TrajectorySeries(venue=venue, pub_year=pub_year, points={}, mode=mode)
    running = _Pool()
    for c in sorted(pools):
        pool = pools[c]
        if mode == "cumulative":
            for p, (n, k) in pool.per_paper.items():
                acc = running.per_paper.setdefault(p, [0, 0])
                acc[0] += n
                acc[1] += k
            pool = running
        series.points[c] = pool.result()
        series.paper_means[c] = pool.paper_mean()
    series.excluded = tally.as_dict()
    return series


def rolling_analysis(citations, catalog: VenueCatalog, venue: str, cutoff="2023-01") -> RollingSeries:
    """Per citation year y, citations made in y to papers published in y-5 .. y-1.

    The series starts five years after the earliest publication year and ends
    at the last complete year before the cutoff.
    """
    corpus = as_corpus(citations)
    cut = as_cutoff(cutoff)
    years = _years(corpus, venue, None)
    span = years[-1] - years[0] + 1
    if span < WINDOW_YEARS:
        raise CorpusSpanError(
            f"{venue} covers {span} publication year(s) ({years[0]}-{years[-1]}); "
            f"rolling analysis needs at least {WINDOW_YEARS}"
        )
    start = years[0] + WINDOW_YEARS
    end = cut.last_complete_year
    pools = {y: _Pool() for y in range(start, end + 1)}
    tally = _Tally()
    for p in corpus.papers_of(venue):
        for rec in corpus.by_paper[p]:
            lab = corpus.label(rec, catalog)
            y = rec.citation_year
            if y is None:
                tally.add("undated", lab)
            elif y in pools and y - WINDOW_YEARS <= p.pub_year <= y - 1:
                pools[y].add(p, lab)
            else:
                tally.add("outside_window", lab)
    series = RollingSeries(venue=venue, points={})
    for y in sorted(pools):
        series.points[y] = pools[y].result()
        series.paper_means[y] = pools[y].paper_mean()
    series.excluded = tally.as_dict()
    return series


def bootstrap_interval(
    labels: Sequence[Union[FieldLabel, int, bool]],
    resamples: int = 1000,
    confidence: float = 0.95,
    seed: Optional[int] = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the X-index of ``labels``.

    Resample indices are drawn as one ``(resamples, n)`` block from
    ``numpy.random.default_rng(seed)``; percentiles use linear interpolation.
    """
    arr = np.asarray([int(bool(x)) for x in labels], dtype=np.int64)
    if arr.size == 0:
        raise ValueError("bootstrap needs at least one label")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(resamples, arr.size))
    n_in = arr[idx].sum(axis=1)
    stats = (arr.size - n_in) / arr.size
    alpha = 1.0 - confidence
    low, high = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(low), float(high)


def labels_for(corpus: CitationCorpus, catalog: VenueCatalog, records: Iterable[CitationRecord]) -> list[FieldLabel]:
    return [corpus.label(r, catalog) for r in records]
