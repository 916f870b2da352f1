"""Synthetic corpora with planted out-of-field proportions.

The generator writes exact counts: a cohort planted at proportion ``p`` gets
exactly ``p * n`` out-of-field citations out of ``n``, where ``n`` is a
multiple of ``p``'s denominator. The seed only decides how citations are
spread over papers and years, never how many are out of field.
"""

from __future__ import annotations

import argparse
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .catalog import VenueCatalog, default_catalog
from .ris import doi_to_filename

OUT_OF_FIELD_SOURCES = (
    "Nature Communications",
    "IEEE Transactions on Pattern Analysis and Machine Intelligence",
    "Journal of Medical Internet Research",
    "PLOS ONE",
    "Scientific Reports",
    "Frontiers in Psychology",
    "IEEE Access",
    "Sensors",
)

IN_FIELD_SOURCES = (
    "Proceedings of the 2019 CHI Conference on Human Factors in Computing Systems",
    "Proceedings of the 32nd Annual ACM Symposium on User Interface Software and Technology",
    "Proceedings of the ACM on Human-Computer Interaction",
    "ACM Transactions on Computer-Human Interaction",
    "International Journal of Human-Computer Studies",
    "Proceedings of the 2016 ACM International Joint Conference on Pervasive and Ubiquitous Computing",
)


@dataclass
class SyntheticCorpus:
    manifest_rows: list[tuple[str, int, str]] = field(default_factory=list)
    ris: dict[str, str] = field(default_factory=dict)
    planted: dict[tuple[str, int], Fraction] = field(default_factory=dict)

    def manifest_text(self) -> str:
        lines = ["venue,year,doi"] + [f"{v},{y},{d}" for v, y, d in self.manifest_rows]
        return "\n".join(lines) + "\n"

    def write(self, root) -> tuple[Path, Path]:
        root = Path(root)
        ris_dir = root / "ris"
        ris_dir.mkdir(parents=True, exist_ok=True)
        manifest = root / "manifest.csv"
        manifest.write_text(self.manifest_text(), encoding="utf-8")
        for doi, text in sorted(self.ris.items()):
            (ris_dir / doi_to_filename(doi)).write_text(text, encoding="utf-8")
        return manifest, ris_dir


def _ris_record(source: str, year: int, citing_doi: str, title: str) -> str:
    return (
        "TY  - JOUR\n"
        f"TI  - {title}\n"
        f"T2  - {source}\n"
        f"PY  - {year}///\n"
        f"DO  - {citing_doi}\n"
        "ER  - \n"
    )


def planted_corpus(
    planted: Mapping[str, Mapping[int, Fraction]],
    citations_per_cohort: int = 20,
    papers_per_cohort: int = 4,
    last_citation_year: int = 2022,
    seed: int = 0,
    catalog: Optional[VenueCatalog] = None,
) -> SyntheticCorpus:
    """Build a corpus where cohort (venue, year) has exactly the planted X-index.

    ``citations_per_cohort`` is rounded up to a multiple of each cohort's
    denominator. All citation years fall in [pub_year, last_citation_year].
    """
    catalog = catalog or default_catalog()
    for s in OUT_OF_FIELD_SOURCES:
        assert not catalog.matches(s), s
    for s in IN_FIELD_SOURCES:
        assert catalog.matches(s), s
    rng = random.Random(seed)
    out = SyntheticCorpus()
    serial = 0
    for venue in sorted(planted):
        for year in sorted(planted[venue]):
            p = Fraction(planted[venue][year])
            if not 0 <= p <= 1:
                raise ValueError(f"planted proportion out of range: {p}")
            n = -(-citations_per_cohort // p.denominator) * p.denominator
            n_out = int(p * n)
            labels = [False] * n_out + [True] * (n - n_out)
            rng.shuffle(labels)
            papers = [f"10.5555/{venue.lower()}.{year}.{i}" for i in range(papers_per_cohort)]
            for doi in papers:
                out.manifest_rows.append((venue, year, doi))
                out.ris[doi] = ""
            out.planted[(venue, year)] = p
            for in_field in labels:
                serial += 1
                doi = rng.choice(papers)
                source = rng.choice(IN_FIELD_SOURCES if in_field else OUT_OF_FIELD_SOURCES)
                cy = rng.randint(year, last_citation_year)
                out.ris[doi] += _ris_record(source, cy, f"10.9999/cite.{serial}", f"Citing work {serial}")
    return out


def linear_trend(start: int, stop: int, first: Fraction, step: Fraction) -> dict[int, Fraction]:
    return {y: first + step * (y - start) for y in range(start, stop + 1)}


def demo_corpus(seed: int = 7) -> SyntheticCorpus:
    """Three venues over 2010-2015 with decreasing out-of-field shares."""
    planted = {
        "CHI": linear_trend(2010, 2015, Fraction(7, 10), Fraction(-1, 20)),
        "UIST": linear_trend(2010, 2015, Fraction(4, 5), Fraction(-1, 20)),
        "CSCW": linear_trend(2010, 2015, Fraction(3, 5), Fraction(-1, 20)),
    }
    return planted_corpus(planted, citations_per_cohort=20, papers_per_cohort=3, seed=seed)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(description="write the synthetic demo corpus")
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    manifest, ris_dir = demo_corpus(args.seed).write(args.out)
    print(f"wrote {manifest} and {ris_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
