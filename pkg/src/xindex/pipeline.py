"""Batch pipeline: ingest RIS files, run the analyses, write tables and charts.

RIS inputs live in one directory with one file per cited paper, named by the
path-safe DOI (``10.1145%2F2702123.2702150.ris``), the same layout the fetch
cache uses. Every output file is rendered in memory first and written only
once the whole run has succeeded.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import engine
from .catalog import VenueCatalog, default_catalog, load_catalog
from .engine import CitationCorpus, Cutoff, XIndexResult
from .report import render_chart, series_from_csv, series_to_csv, write_atomic
from .ris import (
    CitationRecord,
    MalformedRecordError,
    PaperRef,
    RisError,
    RisWarning,
    doi_to_filename,
    filename_to_doi,
    load_corpus_manifest,
    parse_ris_stream,
    to_citation_record,
)
from .validation import ANALYSES, check_analyses, check_cutoff

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"

TITLES = {
    "cohort": ("{venue}: X-index of papers by publication year", "publication year"),
    "window": ("{venue}: X-index, citations within five years of publication", "publication year"),
    "trajectory": ("{venue}: X-index by citation year, one line per publication year", "citation year"),
    "rolling": ("{venue}: X-index of citations to the previous five years' papers", "citation year"),
}


class DataError(Exception):
    """Input data is missing or unusable (exit status 2)."""


@dataclass
class RunConfig:
    manifest_path: Union[str, Path]
    ris_dir: Union[str, Path]
    output_dir: Union[str, Path]
    catalog_path: Optional[Union[str, Path]] = None
    cutoff_date: str = "2023-01"
    venues: list[str] = field(default_factory=list)
    analyses: list[str] = field(default_factory=lambda: list(ANALYSES))
    trajectory_mode: str = "per_year"
    seed: int = 0
    resamples: int = 1000

    def __post_init__(self):
        self.analyses = check_analyses(self.analyses)
        if self.trajectory_mode not in engine.TRAJECTORY_MODES:
            raise ValueError(f"trajectory_mode must be one of {engine.TRAJECTORY_MODES}")
        check_cutoff(self.cutoff_date)


def venue_slug(venue: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", venue).strip("_") or "venue"


def load_catalog_file(path: Optional[Union[str, Path]]) -> VenueCatalog:
    if path is None:
        return default_catalog()
    path = Path(path)
    if not path.is_file():
        raise DataError(f"catalog not found: {path}")
    return load_catalog(path.read_text(encoding="utf-8"), name=path.stem)


@dataclass
class IngestResult:
    papers: list[PaperRef]
    citations: list[CitationRecord]
    stats: dict

    def corpus(self) -> CitationCorpus:
        return CitationCorpus(self.citations, papers=self.papers)

    def to_json(self) -> str:
        data = {
            "papers": [asdict(p) for p in self.papers],
            "citations": [c.to_dict() for c in self.citations],
            "stats": self.stats,
        }
        return json.dumps(data, indent=1, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "IngestResult":
        data = json.loads(text)
        return cls(
            papers=[PaperRef(**p) for p in data["papers"]],
            citations=[CitationRecord.from_dict(c) for c in data["citations"]],
            stats=data.get("stats", {}),
        )


def ingest(manifest_path: Union[str, Path], ris_dir: Union[str, Path]) -> IngestResult:
    manifest_path, ris_dir = Path(manifest_path), Path(ris_dir)
    if not manifest_path.is_file():
        raise DataError(f"manifest not found: {manifest_path}")
    if not ris_dir.is_dir():
        raise DataError(f"RIS directory not found: {ris_dir}")
    manifest = load_corpus_manifest(manifest_path.read_bytes())
    papers = manifest.papers()
    if not papers:
        raise DataError(f"manifest has no valid rows: {manifest_path}")
    citations: list[CitationRecord] = []
    missing, unparseable = [], []
    warnings: list[RisWarning] = []
    per_venue: Counter = Counter()
    wanted = set()
    for paper in papers:
        name = doi_to_filename(paper.doi)
        wanted.add(name)
        path = ris_dir / name
        if not path.is_file():
            missing.append(paper.doi)
            continue
        try:
            raws = parse_ris_stream(path.read_bytes(), warnings=warnings)
        except (MalformedRecordError, RisError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            unparseable.append([paper.doi, str(exc)])
            continue
        for raw in raws:
            citations.append(to_citation_record(raw, paper))
        per_venue[paper.venue] += len(raws)
    orphans = sorted(
        filename_to_doi(p.name) for p in ris_dir.glob("*.ris") if p.name not in wanted
    )
    stats = {
        "manifest_rows": len(manifest),
        "manifest_errors": [[e.line_no, e.row, e.reason] for e in manifest.errors],
        "manifest_duplicates": manifest.duplicates,
        "files_missing": len(missing),
        "files_unparseable": unparseable,
        "orphan_files": orphans,
        "parse_warnings": len(warnings),
        "records_parsed": dict(sorted(per_venue.items())),
    }
    return IngestResult(papers=papers, citations=citations, stats=stats)


@dataclass
class AnalysisOutput:
    tables: dict[str, str]
    summary: dict
    # file name -> (analysis, venue)
    index: dict[str, tuple[str, str]]

    def charts(self) -> dict[str, str]:
        return {
            name[: -len(".csv")] + ".svg": chart_for_table(text, *self.index[name])
            for name, text in sorted(self.tables.items())
        }


def chart_for_table(csv_text: str, analysis: str, venue: str) -> str:
    title, x_label = TITLES[analysis]
    series = series_from_csv(csv_text, venue=venue)
    return render_chart(series, title.format(venue=venue), x_label=x_label)


def _counts(r: XIndexResult) -> dict:
    return {"n_total": r.n_total, "n_infield": r.n_infield, "value": r.value}


def analyze(data: IngestResult, catalog: VenueCatalog, config: RunConfig) -> AnalysisOutput:
    cutoff: Cutoff = check_cutoff(config.cutoff_date)
    corpus = data.corpus()
    if not corpus.by_paper or not data.citations:
        raise DataError("no parsable citations found")
    venues = list(dict.fromkeys(config.venues)) or corpus.venues
    for v in venues:
        corpus.check_venue(v)
    late = [p for p in corpus.by_paper if p.pub_year > cutoff.year]
    if late:
        raise DataError(f"{len(late)} paper(s) published after the cutoff {cutoff}, e.g. {late[0].doi}")

    tables: dict[str, str] = {}
    index: dict[str, tuple[str, str]] = {}
    per_venue = {}
    for venue in venues:
        slug = venue_slug(venue)
        recs = [r for p in corpus.papers_of(venue) for r in corpus.by_paper[p]]
        parsed = corpus.parsed[venue]
        dedup = corpus.duplicates[venue]
        after = sum(1 for r in recs if r.citation_year is not None and r.citation_year > cutoff.year)
        undated = sum(1 for r in recs if r.citation_year is None)
        before = sum(
            1 for r in recs if r.citation_year is not None and r.citation_year < r.cited.pub_year
        )
        used = len(recs) - after
        info = {
            "papers": len(corpus.papers_of(venue)),
            "records_parsed": parsed,
            "deduplicated": dedup,
            "excluded_after_cutoff": after,
            "used": used,
            "undated_in_cumulative_only": undated,
            "dated_before_publication": before,
            "reconciles": parsed == used + after + dedup,
            "analyses": {},
        }
        for analysis in config.analyses:
            try:
                if analysis == "cohort":
                    s = engine.cohort_analysis(corpus, catalog, venue, None, cutoff)
                    labels_by_year = {
                        y: [
                            corpus.label(r, catalog)
                            for p in corpus.papers_of(venue, y)
                            for r in corpus.by_paper[p]
                            if r.citation_year is None or r.citation_year <= cutoff.year
                        ]
                        for y in s.points
                    }
                    info["bootstrap"] = {
                        "resamples": config.resamples,
                        "confidence": 0.95,
                        "intervals": {
                            str(y): list(engine.bootstrap_interval(labs, config.resamples, 0.95, config.seed))
                            for y, labs in sorted(labels_by_year.items())
                            if labs
                        },
                    }
                elif analysis == "window":
                    s = engine.five_year_window_analysis(corpus, catalog, venue, None, cutoff)
                elif analysis == "trajectory":
                    s = [
                        engine.trajectory_analysis(corpus, catalog, venue, y, cutoff, config.trajectory_mode)
                        for y in corpus.pub_years(venue)
                    ]
                else:
                    s = engine.rolling_analysis(corpus, catalog, venue, cutoff)
            except engine.CorpusSpanError as exc:
                raise DataError(str(exc)) from exc
            items = s if isinstance(s, list) else [s]
            excluded = Counter()
            for item in items:
                for reason, res in item.excluded.items():
                    excluded[reason] += res.n_total
            info["analyses"][analysis] = {
                "points": sum(len(i.points) for i in items),
                "excluded": dict(sorted(excluded.items())),
            }
            name = f"{slug}_{analysis}.csv"
            tables[name] = series_to_csv(items)
            index[name] = (analysis, venue)
        per_venue[venue] = info

    summary = {
        "catalog": {"name": catalog.name, "rules": len(catalog)},
        "cutoff": str(cutoff),
        "analyses": config.analyses,
        "trajectory_mode": config.trajectory_mode,
        "seed": config.seed,
        "ingest": data.stats,
        "venues": per_venue,
        "files": {name: {"analysis": a, "venue": v} for name, (a, v) in sorted(index.items())},
    }
    return AnalysisOutput(tables=tables, summary=summary, index=index)


def dump_summary(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_outputs(files: dict[str, str], output_dir: Union[str, Path]) -> list[Path]:
    out = Path(output_dir)
    return [write_atomic(out / name, text) for name, text in sorted(files.items())]


def run(config: RunConfig) -> list[Path]:
    """Full pipeline; returns the written paths. Raises DataError on bad input."""
    catalog = load_catalog_file(config.catalog_path)
    data = ingest(config.manifest_path, config.ris_dir)
    result = analyze(data, catalog, config)
    files = dict(result.tables)
    files.update(result.charts())
    files[SUMMARY_NAME] = dump_summary(result.summary)
    return write_outputs(files, config.output_dir)
