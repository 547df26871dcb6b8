"""Normalised earth mover's distance between a validation window and a new batch.

The score divides the exact 1-Wasserstein distance (Euclidean ground cost)
by the norm-inequality bound ``E_a|x| + E_b|y|``, so it lies in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import coo_matrix, vstack
from scipy.spatial.distance import cdist

from .core import Declaration, DataError, WeekBatch
from .embed import Embedder


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[0] < 1 or w.shape != (pts.shape[0],):
            raise ValueError("a point cloud needs one weight per point and at least one point")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "PointCloud":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class DriftConfig:
    sample_size: int = 256
    repeats: int = 5

    def __post_init__(self) -> None:
        if self.sample_size < 2:
            raise ValueError("sample_size must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def _transport_lp(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    n, m = cost.shape
    rows = np.repeat(np.arange(n), m)
    cols = np.arange(n * m)
    row_sums = coo_matrix((np.ones(n * m), (rows, cols)), shape=(n, n * m))
    col_sums = coo_matrix((np.ones(n * m), (np.tile(np.arange(m), n), cols)), shape=(m, n * m))
    res = linprog(
        cost.ravel(),
        A_eq=vstack([row_sums, col_sums]).tocsr(),
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0)


def emd_w1(a: PointCloud, b: PointCloud) -> float:
    """Exact 1-Wasserstein distance with Euclidean ground cost.

    Equal-size uniform clouds are solved as an assignment problem; anything
    else goes through the transportation LP.
    """
    if a.points.shape[1] != b.points.shape[1]:
        raise ValueError(
            f"dimension mismatch: {a.points.shape[1]} vs {b.points.shape[1]}"
        )
    cost = cdist(a.points, b.points)
    if len(a) == len(b) and a.is_uniform and b.is_uniform:
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].sum() / len(a))
    return _transport_lp(cost, a.weights, b.weights)


def w1_upper_bound(a: PointCloud, b: PointCloud) -> float:
    """Weighted mean norm of ``a`` plus weighted mean norm of ``b``."""
    return float(
        a.weights @ np.linalg.norm(a.points, axis=1) + b.weights @ np.linalg.norm(b.points, axis=1)
    )


def _resample(points: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    if len(points) <= size:
        return points
    return points[rng.integers(0, len(points), size=size)]


def drift_score_embedded(
    historical: np.ndarray,
    incoming: np.ndarray,
    cfg: DriftConfig = DriftConfig(),
    rng: np.random.Generator | None = None,
) -> float:
    """Bootstrap-averaged normalised EMD between two embedded samples."""
    if len(historical) == 0 or len(incoming) == 0:
        raise DataError("insufficient data for drift scoring")
    if rng is None:
        rng = np.random.default_rng(0)
    # both sides at one size keeps every round a balanced assignment
    m = min(cfg.sample_size, len(historical), len(incoming))
    ratios = []
    for child in rng.spawn(cfg.repeats):
        a = PointCloud.uniform(_resample(historical, m, child))
        b = PointCloud.uniform(_resample(incoming, m, child))
        bound = w1_upper_bound(a, b)
        ratios.append(emd_w1(a, b) / bound if bound > 0 else 0.0)
    return float(np.clip(np.mean(ratios), 0.0, 1.0))


def drift_score(
    historical: Sequence[Declaration] | WeekBatch,
    incoming: Sequence[Declaration] | WeekBatch,
    e: Embedder,
    cfg: DriftConfig = DriftConfig(),
    rng: np.random.Generator | None = None,
) -> float:
    """Drift score in [0, 1] of ``incoming`` against the ``historical`` window."""
    if len(historical) == 0 or len(incoming) == 0:
        raise DataError("insufficient data for drift scoring")
    return drift_score_embedded(e.encode_many(historical), e.encode_many(incoming), cfg, rng)
