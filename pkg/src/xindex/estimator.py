"""scikit-learn compatible wrapper around venue classification.

``VenueClassifier`` turns citing-source strings into in-field labels so the
keyword matcher can sit inside a Pipeline or be cloned/grid-searched over
catalogs like any other estimator.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .catalog import FieldLabel, VenueCatalog, classify_sources, default_catalog, load_catalog
from .engine import XIndexResult, x_index
from .validation import check_sources


class VenueClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Label each citing work IN_FIELD (1) or OUT_OF_FIELD (0).

    Parameters
    ----------
    catalog : VenueCatalog, path-like or None
        Field venue rules. ``None`` uses the shipped core HCI catalog.

    Attributes
    ----------
    catalog_ : VenueCatalog
    classes_ : ndarray of shape (2,)
    n_rules_ : int
    """

    def __init__(self, catalog=None):
        self.catalog = catalog

    def fit(self, X=None, y=None):
        # Rules come from the catalog, not from X; fit only resolves them.
        if self.catalog is None:
            cat = default_catalog()
        elif isinstance(self.catalog, VenueCatalog):
            cat = self.catalog
        else:
            path = Path(self.catalog)
            cat = load_catalog(path.read_text(encoding="utf-8"), name=path.stem)
        self.catalog_ = cat
        self.n_rules_ = len(cat)
        self.classes_ = np.array([FieldLabel.OUT_OF_FIELD, FieldLabel.IN_FIELD], dtype=int)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "catalog_")
        sources = check_sources(X)
        return np.fromiter(
            (classify_sources(s, self.catalog_) for s in sources), dtype=int, count=len(sources)
        )

    def transform(self, X) -> np.ndarray:
        return self.predict(X).reshape(-1, 1)

    def x_index(self, X) -> XIndexResult:
        """Pooled X-index of the citing works in X."""
        return x_index(self.predict(X))
