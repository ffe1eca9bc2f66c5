"""Correlation and agreement statistics.

Coefficients that are undefined for the input (a constant vector, or all
pairs tied) come back as :data:`NOT_DEFINED` rather than ``0`` or ``nan``.
"""

from __future__ import annotations

import math
from typing import Hashable, Mapping, Sequence, Union

import numpy as np

from ecreport.model import EcReportError


class LengthMismatch(EcReportError):
    pass


class NotDefined:
    """Marker for a coefficient that has no value on the given data."""

    _instance: NotDefined | None = None

    def __new__(cls) -> NotDefined:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NotDefined"

    def __str__(self) -> str:
        return "NotDefined"

    def __reduce__(self):
        return (NotDefined, ())


NOT_DEFINED = NotDefined()

Coefficient = Union[float, NotDefined]


def _pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    if len(x) != len(y):
        raise LengthMismatch(f"vectors differ in length: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise LengthMismatch("need at least two paired observations")
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _clip(r: float) -> float:
    return max(-1.0, min(1.0, r))


def pearson(x: Sequence[float], y: Sequence[float]) -> Coefficient:
    a, b = _pair(x, y)
    da, db = a - a.mean(), b - b.mean()
    sa, sb = float(np.dot(da, da)), float(np.dot(db, db))
    if sa == 0.0 or sb == 0.0:
        return NOT_DEFINED
    return _clip(float(np.dot(da, db)) / math.sqrt(sa * sb))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks, ties sharing the mean of the ranks they span."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a), dtype=float)
    sorted_vals = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> Coefficient:
    a, b = _pair(x, y)
    return pearson(average_ranks(a), average_ranks(b))


def kendall(x: Sequence[float], y: Sequence[float]) -> Coefficient:
    """Kendall's tau-b, which corrects for ties in either vector."""
    a, b = _pair(x, y)
    iu = np.triu_indices(len(a), k=1)
    sx = np.sign(a[:, None] - a[None, :])[iu]
    sy = np.sign(b[:, None] - b[None, :])[iu]
    prod = sx * sy
    concordant = int(np.sum(prod > 0))
    discordant = int(np.sum(prod < 0))
    tied_x_only = int(np.sum((sx == 0) & (sy != 0)))
    tied_y_only = int(np.sum((sy == 0) & (sx != 0)))
    denom = (concordant + discordant + tied_x_only) * (concordant + discordant + tied_y_only)
    if denom == 0:
        return NOT_DEFINED
    return _clip((concordant - discordant) / math.sqrt(denom))


def cohens_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Chance-corrected agreement between two label vectors."""
    if len(a) != len(b):
        raise LengthMismatch(f"label vectors differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise LengthMismatch("need at least one labelled item")
    observed = sum(1 for u, v in zip(a, b) if u == v) / n
    labels = set(a) | set(b)
    expected = sum((list(a).count(k) / n) * (list(b).count(k) / n) for k in labels)
    if expected == 1.0:
        # Both raters used one and the same label throughout.
        return 1.0
    return (observed - expected) / (1.0 - expected)


def merge_labels(labels: Sequence[Hashable], mapping: Mapping[Hashable, Hashable]) -> list[Hashable]:
    """Relabel via ``mapping``; labels not in the mapping are kept."""
    return [mapping.get(x, x) for x in labels]


def mean_coefficient(values: Sequence[Coefficient]) -> Coefficient:
    """Arithmetic mean of the defined coefficients; NotDefined if there are none."""
    defined = [v for v in values if not isinstance(v, NotDefined)]
    if not defined:
        return NOT_DEFINED
    return sum(defined) / len(defined)
