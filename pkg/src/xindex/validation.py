"""Input validation helpers shared by the estimator, engine callers and CLI."""

from __future__ import annotations

import datetime as _dt
from typing import Iterable, Sequence

from .engine import Cutoff, as_cutoff
from .ris import CitationRecord

ANALYSES = ("cohort", "window", "trajectory", "rolling")


def check_sources(X) -> list[tuple[str, ...]]:
    """Coerce X into one tuple of source strings per citing work.

    Accepts CitationRecords, plain strings (one source each), or sequences of
    strings. A pandas Series/DataFrame column or numpy array works the same way.
    """
    if X is None:
        raise ValueError("expected citing works, got None")
    if isinstance(X, str):
        raise TypeError("expected a collection of citing works, got a single string")
    if hasattr(X, "ndim") and getattr(X, "ndim") == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of sources, got shape {X.shape}")
        X = X[:, 0] if not hasattr(X, "iloc") else X.iloc[:, 0]
    out = []
    for i, item in enumerate(X):
        if isinstance(item, CitationRecord):
            out.append(item.source_strings)
        elif isinstance(item, str):
            out.append((item,))
        elif item is None:
            out.append(())
        elif isinstance(item, Iterable):
            strings = tuple(item)
            if not all(isinstance(s, str) for s in strings):
                raise TypeError(f"row {i}: source strings must be str")
            out.append(strings)
        else:
            raise TypeError(f"row {i}: cannot read sources from {type(item).__name__}")
    return out


def check_cutoff(value, today: _dt.date | None = None) -> Cutoff:
    """Parse a cutoff and refuse dates in the future."""
    cut = as_cutoff(value)
    today = today or _dt.date.today()
    if (cut.year, cut.month) > (today.year, today.month):
        raise ValueError(f"cutoff {cut} is in the future")
    return cut


def check_analyses(names: Sequence[str]) -> list[str]:
    names = list(dict.fromkeys(names))
    if not names:
        raise ValueError("select at least one analysis")
    bad = [n for n in names if n not in ANALYSES]
    if bad:
        raise ValueError(f"unknown analyses {bad}; choose from {', '.join(ANALYSES)}")
    return [a for a in ANALYSES if a in names]
