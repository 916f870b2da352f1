"""Venue catalogs and keyword classification of citing sources."""

from __future__ import annotations

import csv
import enum
import io
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Union

from .ris import CitationRecord

DEFAULT_CATALOG = "core-hci"

# Hyphen, non-breaking hyphen, figure dash, en dash, em dash, horizontal bar,
# minus sign, small/fullwidth hyphen-minus.
_DASHES = re.compile("[\u2010\u2011\u2012\u2013\u2014\u2015\u2212\ufe58\ufe63\uff0d]")


class CatalogError(ValueError):
    pass


class FieldLabel(enum.IntEnum):
    OUT_OF_FIELD = 0
    IN_FIELD = 1


def normalize_source_string(text: str) -> str:
    """Canonical form used on both sides of the keyword match.

    NFKC, dashes folded to "-", case folded, whitespace collapsed and trimmed.
    Case folding goes through ``upper()`` first so that a string and its
    upper-cased form always normalize identically (e.g. dotless i).
    """
    text = unicodedata.normalize("NFKC", text)
    text = unicodedata.normalize("NFKC", text.upper()).casefold()
    text = unicodedata.normalize("NFKC", text)
    text = _DASHES.sub("-", text)
    return " ".join(text.split())


@dataclass(frozen=True)
class VenueRule:
    acronym: str
    identifier: str

    @property
    def key(self) -> str:
        return normalize_source_string(self.identifier)


@dataclass(frozen=True)
class CatalogRowError:
    line_no: int
    row: str
    reason: str


@dataclass
class VenueCatalog:
    rules: list[VenueRule]
    name: str = "custom"
    errors: list[CatalogRowError] = field(default_factory=list, compare=False)

    def __post_init__(self):
        if not self.rules:
            raise CatalogError(f"catalog {self.name!r} has no rules")
        self._keys = tuple(dict.fromkeys(r.key for r in self.rules))

    @property
    def keys(self) -> tuple[str, ...]:
        """Distinct normalized identifiers, in file order."""
        return self._keys

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def union(self, rules: Iterable[VenueRule], name: str | None = None) -> "VenueCatalog":
        merged = list(self.rules)
        seen = {(r.acronym, r.identifier) for r in merged}
        for r in rules:
            if (r.acronym, r.identifier) not in seen:
                merged.append(r)
                seen.add((r.acronym, r.identifier))
        return VenueCatalog(merged, name=name or self.name)

    def matches(self, source: str) -> bool:
        norm = normalize_source_string(source)
        return any(k in norm for k in self._keys)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["acronym", "identifier"])
        for r in self.rules:
            w.writerow([r.acronym, r.identifier])
        return buf.getvalue()


def load_catalog(text: Union[str, bytes], name: str = "custom") -> VenueCatalog:
    """Read an ``acronym,identifier`` CSV catalog.

    Rows with an empty identifier, a wrong column count, or an exact repeat of
    an earlier (acronym, identifier) pair are skipped and listed in
    ``catalog.errors``. An empty result raises CatalogError.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8-sig")
    text = text.lstrip("\ufeff")
    reader = csv.reader(io.StringIO(text))
    rules: list[VenueRule] = []
    errors: list[CatalogRowError] = []
    seen = set()
    first = True
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if first:
            first = False
            if [c.lower() for c in cells] == ["acronym", "identifier"]:
                continue
        raw = ",".join(row)
        if len(cells) != 2:
            errors.append(CatalogRowError(reader.line_num, raw, "expected 2 columns: acronym,identifier"))
            continue
        acronym, identifier = cells
        if not normalize_source_string(identifier):
            errors.append(CatalogRowError(reader.line_num, raw, "empty identifier"))
            continue
        if (acronym, identifier) in seen:
            errors.append(CatalogRowError(reader.line_num, raw, "duplicate rule"))
            continue
        seen.add((acronym, identifier))
        rules.append(VenueRule(acronym or "NA", identifier))
    if not rules:
        raise CatalogError(f"catalog {name!r} contains no usable rules")
    return VenueCatalog(rules, name=name, errors=errors)


def default_catalog() -> VenueCatalog:
    """The shipped core HCI venue list."""
    data = resources.files("xindex.data").joinpath(f"{DEFAULT_CATALOG}.csv").read_text("utf-8")
    return load_catalog(data, name=DEFAULT_CATALOG)


def classify_sources(sources: Iterable[str], catalog: VenueCatalog) -> FieldLabel:
    keys = catalog.keys
    for s in sources:
        norm = normalize_source_string(s)
        if any(k in norm for k in keys):
            return FieldLabel.IN_FIELD
    return FieldLabel.OUT_OF_FIELD


def classify_source(record: CitationRecord, catalog: VenueCatalog) -> FieldLabel:
    """IN_FIELD iff some catalog identifier is a substring of some source string."""
    return classify_sources(record.source_strings, catalog)
