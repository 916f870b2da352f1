"""RIS parsing, DOI normalization and corpus manifests.

RIS is line oriented: ``TG  - value`` lines, records closed by an ``ER`` tag.
Continuation lines (anything that is not a tag line) are folded into the
previous entry's value with a single space.

The corpus manifest is a CSV file with a ``venue,year,doi`` header and one
cited paper per row::

    venue,year,doi
    CHI,2015,10.1145/2702123.2702150
    UIST,2015,https://doi.org/10.1145/2807442.2807443
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union
from urllib.parse import quote, unquote

logger = logging.getLogger(__name__)

TAG_LINE = re.compile(r"([A-Z0-9]{2})  - ?(.*)")
_YEAR_GROUP = re.compile(r"(?<![0-9])([0-9]{4})(?![0-9])")
_DOI_PREFIXES = (
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi.org/",
    "doi:",
)

#: Container-title tags, in the order their values are collected.
SOURCE_TAGS = ("T2", "JO", "JF", "JA", "BT", "J2")
YEAR_TAGS = ("PY", "Y1")
TITLE_TAGS = ("TI", "T1")

MIN_YEAR = 1900
MAX_YEAR = 2100


class RisError(ValueError):
    """Base class for RIS input problems."""


class MalformedRecordError(RisError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class RisEncodingError(RisError):
    pass


class InvalidDOIError(ValueError):
    pass


@dataclass(frozen=True)
class RisWarning:
    line_no: int
    message: str


@dataclass(frozen=True)
class RawRisRecord:
    """One ``ER``-terminated record as an ordered list of (tag, value)."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("a RIS record needs at least one entry")
        for tag, _ in self.entries:
            if not re.fullmatch(r"[A-Z0-9]{2}", tag):
                raise ValueError(f"invalid RIS tag {tag!r}")

    def values(self, tag: str) -> list[str]:
        return [v for t, v in self.entries if t == tag]

    def first(self, *tags: str) -> Optional[str]:
        """Value of the first entry (in record order) whose tag is in ``tags``."""
        for t, v in self.entries:
            if t in tags:
                return v
        return None


def normalize_doi(doi: str) -> str:
    """Lowercase a DOI and strip resolver/scheme prefixes.

    Raises InvalidDOIError unless the result looks like ``10.<registrant>/<suffix>``.
    """
    text = doi.strip()
    lowered = text.lower()
    for prefix in _DOI_PREFIXES:
        if lowered.startswith(prefix):
            lowered = lowered[len(prefix):].strip()
            break
    prefix, sep, suffix = lowered.partition("/")
    if not sep or not prefix.startswith("10.") or len(prefix) < 4 or not suffix:
        raise InvalidDOIError(f"not a DOI: {doi!r}")
    if any(ch.isspace() for ch in lowered):
        raise InvalidDOIError(f"not a DOI: {doi!r}")
    return lowered


def is_valid_doi(doi: str) -> bool:
    try:
        normalize_doi(doi)
    except InvalidDOIError:
        return False
    return True


def extract_year(value: Optional[str]) -> Optional[int]:
    """First standalone 4-digit group of ``value`` if it is a plausible year."""
    if not value:
        return None
    m = _YEAR_GROUP.search(value)
    if m is None:
        return None
    year = int(m.group(1))
    if MIN_YEAR <= year <= MAX_YEAR:
        return year
    return None


@dataclass(frozen=True, order=True)
class PaperRef:
    """A cited paper: normalized DOI, venue acronym, publication year."""

    venue: str
    pub_year: int
    doi: str

    def __post_init__(self):
        object.__setattr__(self, "doi", normalize_doi(self.doi))
        if not self.venue:
            raise ValueError("venue acronym must be non-empty")
        if not MIN_YEAR <= self.pub_year <= MAX_YEAR:
            raise ValueError(f"publication year out of range: {self.pub_year}")


@dataclass(frozen=True)
class CitationRecord:
    """One citing work attached to the paper it cites."""

    cited: PaperRef
    source_strings: tuple[str, ...] = ()
    citation_year: Optional[int] = None
    citing_doi: Optional[str] = None
    title: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "source_strings", tuple(self.source_strings))
        if self.citation_year is not None and not MIN_YEAR <= self.citation_year <= MAX_YEAR:
            raise ValueError(f"citation year out of range: {self.citation_year}")
        if self.citing_doi is not None:
            object.__setattr__(self, "citing_doi", normalize_doi(self.citing_doi))

    def to_dict(self) -> dict:
        return {
            "cited_doi": self.cited.doi,
            "venue": self.cited.venue,
            "pub_year": self.cited.pub_year,
            "citing_doi": self.citing_doi,
            "citation_year": self.citation_year,
            "source_strings": list(self.source_strings),
            "title": self.title,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CitationRecord":
        return cls(
            cited=PaperRef(venue=d["venue"], pub_year=int(d["pub_year"]), doi=d["cited_doi"]),
            source_strings=tuple(d.get("source_strings") or ()),
            citation_year=d.get("citation_year"),
            citing_doi=d.get("citing_doi"),
            title=d.get("title"),
        )


def _decode(data: Union[str, bytes]) -> str:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise RisEncodingError(f"input is not valid UTF-8 (byte offset {exc.start})") from exc
    else:
        text = data
    if text.startswith("\ufeff"):
        text = text[1:]
    return text


def parse_ris_stream(
    data: Union[str, bytes, io.IOBase],
    warnings: Optional[list[RisWarning]] = None,
) -> list[RawRisRecord]:
    """Parse RIS text into records.

    ``data`` may be text, UTF-8 bytes, or a readable file object. Stray lines
    outside a record and an unterminated final record are reported through
    ``warnings`` (or logged when no list is passed); they never become records.
    """
    if hasattr(data, "read"):
        data = data.read()
    text = _decode(data)

    def warn(line_no: int, message: str) -> None:
        w = RisWarning(line_no, message)
        if warnings is not None:
            warnings.append(w)
        else:
            logger.warning("RIS line %d: %s", line_no, message)

    records: list[RawRisRecord] = []
    current: list[list[str]] = []
    start_line = 0
    if not text:
        return records
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    for line_no, line in enumerate(lines, start=1):
        if line.endswith("\r"):
            line = line[:-1]
        m = TAG_LINE.fullmatch(line)
        if m is None:
            if not line.strip():
                continue
            if current:
                prev = current[-1]
                cont = line.strip()
                prev[1] = f"{prev[1]} {cont}" if prev[1] else cont
            else:
                warn(line_no, "text outside of a record ignored")
            continue
        tag, value = m.groups()
        if tag == "TY" and current:
            raise MalformedRecordError(
                line_no, f"TY inside unterminated record started at line {start_line}"
            )
        if not current:
            start_line = line_no
        current.append([tag, value])
        if tag == "ER":
            records.append(RawRisRecord(tuple((t, v) for t, v in current)))
            current = []
    if current:
        warn(start_line, f"trailing garbage: {len(current)} entries after the last ER")
    return records


def serialize_ris(records: Iterable[RawRisRecord]) -> str:
    out = []
    for rec in records:
        for tag, value in rec.entries:
            out.append(f"{tag}  - {value}\n")
    return "".join(out)


def to_citation_record(raw: RawRisRecord, cited: PaperRef) -> CitationRecord:
    sources = []
    for tag in SOURCE_TAGS:
        sources.extend(v.strip() for v in raw.values(tag) if v.strip())
    doi = raw.first("DO")
    citing_doi = None
    if doi and is_valid_doi(doi):
        citing_doi = normalize_doi(doi)
    title = raw.first(*TITLE_TAGS)
    return CitationRecord(
        cited=cited,
        source_strings=tuple(sources),
        citation_year=extract_year(raw.first(*YEAR_TAGS)),
        citing_doi=citing_doi,
        title=title.strip() if title and title.strip() else None,
    )


@dataclass(frozen=True)
class ManifestError:
    line_no: int
    row: str
    reason: str


@dataclass
class CorpusManifest:
    entries: dict[tuple[str, int], list[str]] = field(default_factory=dict)
    errors: list[ManifestError] = field(default_factory=list)
    duplicates: int = 0

    def papers(self) -> list[PaperRef]:
        return [
            PaperRef(venue=venue, pub_year=year, doi=doi)
            for (venue, year), dois in sorted(self.entries.items())
            for doi in dois
        ]

    def venues(self) -> list[str]:
        return sorted({venue for venue, _ in self.entries})

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())


MANIFEST_HEADER = ("venue", "year", "doi")


def load_corpus_manifest(text: Union[str, bytes]) -> CorpusManifest:
    """Load a ``venue,year,doi`` CSV manifest.

    Bad rows are collected in ``manifest.errors`` rather than raised; a DOI
    repeated within one (venue, year) cell is kept once and counted in
    ``manifest.duplicates``.
    """
    text = _decode(text)
    manifest = CorpusManifest()
    reader = csv.reader(io.StringIO(text))
    seen: dict[tuple[str, int], set[str]] = {}
    header_seen = False
    for row in reader:
        line_no = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if not header_seen:
            header_seen = True
            if tuple(c.lower() for c in cells) == MANIFEST_HEADER:
                continue
        raw = ",".join(row)
        if len(cells) != 3:
            manifest.errors.append(ManifestError(line_no, raw, "expected 3 columns: venue,year,doi"))
            continue
        venue, year_text, doi_text = cells
        if not venue:
            manifest.errors.append(ManifestError(line_no, raw, "empty venue"))
            continue
        try:
            year = int(year_text)
        except ValueError:
            manifest.errors.append(ManifestError(line_no, raw, f"bad year {year_text!r}"))
            continue
        if not MIN_YEAR <= year <= MAX_YEAR:
            manifest.errors.append(ManifestError(line_no, raw, f"year out of range {year}"))
            continue
        try:
            doi = normalize_doi(doi_text)
        except InvalidDOIError as exc:
            manifest.errors.append(ManifestError(line_no, raw, str(exc)))
            continue
        cell = seen.setdefault((venue, year), set())
        if doi in cell:
            manifest.duplicates += 1
            logger.warning("manifest line %d: duplicate DOI %s in (%s, %d)", line_no, doi, venue, year)
            continue
        cell.add(doi)
        manifest.entries.setdefault((venue, year), []).append(doi)
    return manifest


def dump_corpus_manifest(manifest: CorpusManifest) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for (venue, year), dois in sorted(manifest.entries.items()):
        for doi in dois:
            w.writerow([venue, year, doi])
    return buf.getvalue()


def doi_to_filename(doi: str, suffix: str = ".ris") -> str:
    """Path-safe, reversible file name for a normalized DOI."""
    return quote(normalize_doi(doi), safe="") + suffix


def filename_to_doi(name: str, suffix: str = ".ris") -> str:
    if name.endswith(suffix):
        name = name[: -len(suffix)]
    return unquote(name)


def records_for_paper(
    raw_records: Sequence[RawRisRecord], cited: PaperRef
) -> list[CitationRecord]:
    return [to_citation_record(r, cited) for r in raw_records]
