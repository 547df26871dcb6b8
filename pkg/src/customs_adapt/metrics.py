"""Normalised precision/revenue, smoothing and correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .core import WeekBatch
from .strategies import Selection


@dataclass(frozen=True)
class WeekMetrics:
    week: int
    norm_precision: float
    norm_revenue: float
    raw_precision: float
    raw_revenue: float
    k_t: float
    drift_s: float | None = None
    new_importer_norm_revenue: float | None = None


def _np_from_counts(hits: int, frauds: int, B: int) -> float:
    if frauds == 0:
        return 1.0
    return (hits / B) / (min(frauds, B) / B)


def _nr_from_values(selected_rev: np.ndarray, all_rev: np.ndarray, B: int) -> float:
    best = np.sort(all_rev)[::-1][:B].sum()
    if best <= 0:
        return 1.0
    return float(min(1.0, selected_rev.sum() / best))


def norm_precision(selection: Selection, batch: WeekBatch) -> float:
    """Precision of the selection over the best precision a size-B selection can reach."""
    illicit, _ = batch.labels()
    hits = int(illicit[selection.positions].sum())
    return _np_from_counts(hits, int(illicit.sum()), selection.budget)


def norm_revenue(selection: Selection, batch: WeekBatch) -> float:
    """Secured revenue over the sum of the B largest item revenues."""
    _, revenue = batch.labels()
    return _nr_from_values(revenue[selection.positions], revenue, selection.budget)


def raw_precision(selection: Selection, batch: WeekBatch) -> float:
    illicit, _ = batch.labels()
    return float(illicit[selection.positions].mean())


def raw_revenue(selection: Selection, batch: WeekBatch) -> float:
    _, revenue = batch.labels()
    return float(revenue[selection.positions].sum())


def new_importer_slice(selection: Selection, batch: WeekBatch, seen_importers: set[str]) -> float | None:
    """Normalised revenue restricted to items whose importer was never labelled before.

    Returns None when the week has no such items. The budget is the number
    of selected items inside the slice; when that is zero the value is 0 if
    the slice held any revenue (all of it was missed) and 1 otherwise.
    """
    importers = batch.tokens["importer_id"]
    in_slice = np.fromiter((imp not in seen_importers for imp in importers), dtype=bool, count=len(batch))
    if not in_slice.any():
        return None
    _, revenue = batch.labels()
    chosen = np.zeros(len(batch), dtype=bool)
    chosen[selection.positions] = True
    picked = chosen & in_slice
    b = int(picked.sum())
    if b == 0:
        return 0.0 if revenue[in_slice].sum() > 0 else 1.0
    return _nr_from_values(revenue[picked], revenue[in_slice], b)


def moving_average(series: Sequence[float | None], window: int = 14) -> np.ndarray:
    """Trailing mean over the last ``min(window, t)`` points; missing values are skipped."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.array([np.nan if v is None else v for v in series], dtype=float)
    valid = ~np.isnan(x)
    csum = np.concatenate([[0.0], np.cumsum(np.where(valid, x, 0.0))])
    ccnt = np.concatenate([[0], np.cumsum(valid)])
    idx = np.arange(1, len(x) + 1)
    start = np.maximum(0, idx - window)
    cnt = ccnt[idx] - ccnt[start]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, (csum[idx] - csum[start]) / cnt, np.nan)


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample correlation and two-sided p-value from the t statistic."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be one-dimensional and of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least three points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 1e-300 or syy <= 1e-300:
        raise ValueError("degenerate series")
    r = float(np.clip(dx @ dy / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * stats.t.sf(abs(t), n - 2))
