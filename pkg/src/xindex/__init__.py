"""Out-of-field citation share (X-index) of a set of papers.

The X-index of a set of papers is the share of their citations that do not
come from a catalog of field venues: ``1 - n_infield / n_total``.
"""

from .catalog import (
    FieldLabel,
    VenueCatalog,
    VenueRule,
    classify_source,
    default_catalog,
    load_catalog,
    normalize_source_string,
)
from .engine import (
    CitationCorpus,
    CohortSeries,
    Cutoff,
    RollingSeries,
    TrajectorySeries,
    XIndexResult,
    bootstrap_interval,
    cohort_analysis,
    five_year_window_analysis,
    rolling_analysis,
    trajectory_analysis,
    x_index,
)
from .estimator import VenueClassifier
from .pipeline import DataError, IngestResult, RunConfig, analyze, ingest, run
from .ris import (
    CitationRecord,
    CorpusManifest,
    PaperRef,
    RawRisRecord,
    load_corpus_manifest,
    normalize_doi,
    parse_ris_stream,
    serialize_ris,
    to_citation_record,
)

__version__ = "0.1.0"
