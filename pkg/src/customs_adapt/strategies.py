"""Exploitation scorer, random exploration and the hybrid selector."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _stumps
from .core import Declaration, DataError, InspectionOutcome, WeekBatch, stable_hash

NUMERIC_FEATURES = ("log_fob", "log_weight", "log_quantity", "log_unit_price", "log_price_per_item")
CATEGORICAL_BUCKETS = {"tariff_code": 512, "importer_id": 1024, "declarant_id": 256, "office_id": 64}


@dataclass(frozen=True)
class ScorerConfig:
    rounds: int = 100
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    numeric_bins: int = 32
    hash_salt: int = 0


@lru_cache(maxsize=1 << 18)
def _bucket(salt: int, field_name: str, token: str) -> int:
    return stable_hash("scorer", salt, field_name, token) % CATEGORICAL_BUCKETS[field_name]


def encode_features(items: Sequence[Declaration] | WeekBatch, salt: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Numeric (n, 5) log features and hashed categorical buckets (n, 4)."""
    if isinstance(items, WeekBatch):
        cached = items.__dict__.setdefault("_scorer_features", {})
        if salt not in cached:
            cached[salt] = _encode(items.numeric, items.tokens, salt)
        return cached[salt]
    numeric = np.array([(d.fob_value, d.gross_weight, d.quantity) for d in items], dtype=float).reshape(-1, 3)
    tokens = {f: [getattr(d, f) for d in items] for f in CATEGORICAL_BUCKETS}
    return _encode(numeric, tokens, salt)


def _encode(numeric: np.ndarray, tokens: dict[str, list[str]], salt: int) -> tuple[np.ndarray, np.ndarray]:
    fob, weight, qty = numeric[:, 0], numeric[:, 1], numeric[:, 2]
    num = np.column_stack(
        [np.log(fob), np.log(weight), np.log(qty), np.log(fob / weight), np.log(fob / qty)]
    )
    n = len(fob)
    cat = np.empty((n, len(CATEGORICAL_BUCKETS)), dtype=np.uint16)
    for j, f in enumerate(CATEGORICAL_BUCKETS):
        cat[:, j] = np.fromiter((_bucket(salt, f, t) for t in tokens[f]), dtype=np.uint16, count=n)
    return num, cat


@dataclass(frozen=True)
class FraudScorer:
    """Boosted stumps over binned log-numeric and hashed categorical features.

    A scorer trained on single-class data is ``constant`` and emits the
    (clipped) class prior for every item.
    """

    config: ScorerConfig
    base_margin: float
    edges: tuple[np.ndarray, ...] = ()
    feat: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    thr: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    left_val: np.ndarray = field(default_factory=lambda: np.zeros(0))
    right_val: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_train: int = 0

    @property
    def constant(self) -> bool:
        return not self.edges

    def _bins(self, num: np.ndarray, cat: np.ndarray) -> np.ndarray:
        out = np.empty((num.shape[0], num.shape[1] + cat.shape[1]), dtype=np.uint16)
        for j, e in enumerate(self.edges):
            out[:, j] = np.searchsorted(e, num[:, j], side="right")
        out[:, num.shape[1] :] = cat
        return out

    def margin_arrays(self, num: np.ndarray, cat: np.ndarray) -> np.ndarray:
        if self.constant:
            return np.full(num.shape[0], self.base_margin)
        return _stumps.predict(
            self._bins(num, cat), _is_cat(num.shape[1], cat.shape[1]), self.base_margin,
            self.feat, self.thr, self.left_val, self.right_val,
        )

    def predict_arrays(self, num: np.ndarray, cat: np.ndarray) -> np.ndarray:
        m = np.clip(self.margin_arrays(num, cat), -30.0, 30.0)
        return 1.0 / (1.0 + np.exp(-m))

    def score(self, items: Sequence[Declaration] | WeekBatch) -> np.ndarray:
        return self.predict_arrays(*encode_features(items, self.config.hash_salt))


def _is_cat(n_num: int, n_cat: int) -> np.ndarray:
    return np.array([False] * n_num + [True] * n_cat)


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def fit_scorer(num: np.ndarray, cat: np.ndarray, y: np.ndarray, cfg: ScorerConfig = ScorerConfig()) -> FraudScorer:
    """Fit on pre-encoded features; ``y`` holds 0/1 illicit flags."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n == 0:
        raise DataError("cannot train a scorer on no data")
    prior = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    if y.min() == y.max():
        return FraudScorer(cfg, _logit(prior), n_train=n)
    # quantile edges from at most ~8k rows keep retraining cheap
    step = max(1, n // 8192)
    qs = np.linspace(0, 1, cfg.numeric_bins + 1)[1:-1]
    edges = tuple(np.unique(np.quantile(num[::step, j], qs)) for j in range(num.shape[1]))
    proto = FraudScorer(cfg, _logit(prior), edges)
    bins = proto._bins(num, cat)
    is_cat = _is_cat(num.shape[1], cat.shape[1])
    offsets = np.zeros(bins.shape[1] + 1, dtype=np.int64)
    sizes = [len(e) + 1 for e in edges] + list(CATEGORICAL_BUCKETS.values())
    offsets[1:] = np.cumsum(sizes)
    feat, thr, lv, rv = _stumps.boost(
        bins, offsets, is_cat, y, proto.base_margin, cfg.rounds, cfg.learning_rate,
        cfg.reg_lambda, cfg.min_child_weight,
    )
    return FraudScorer(cfg, proto.base_margin, edges, feat, thr, lv, rv, n)


def train_scorer(
    labeled: Sequence[tuple[Declaration, InspectionOutcome]],
    cfg: ScorerConfig = ScorerConfig(),
    rng: np.random.Generator | None = None,
) -> FraudScorer:
    """Fit the scorer to the illicit flag of labelled declarations.

    Training is deterministic, so ``rng`` is accepted for interface symmetry
    only.
    """
    if not labeled:
        raise DataError("cannot train a scorer on no data")
    num, cat = encode_features([d for d, _ in labeled], cfg.hash_salt)
    y = np.array([o.illicit for _, o in labeled], dtype=float)
    return fit_scorer(num, cat, y, cfg)


def score(scorer: FraudScorer, batch: Sequence[Declaration] | WeekBatch) -> np.ndarray:
    return scorer.score(batch)


@dataclass(frozen=True)
class Selection:
    week: int
    explore_ids: tuple[int, ...]
    exploit_ids: tuple[int, ...]
    ratio: float
    budget: int
    # positions within the batch, exploit first then explore
    positions: np.ndarray = field(repr=False, compare=False, default_factory=lambda: np.zeros(0, np.int64))

    @property
    def ids(self) -> tuple[int, ...]:
        return self.exploit_ids + self.explore_ids


def explore_count(k: float, B: int) -> int:
    """``round(k * B)`` with round-half-to-even on the exact rational product."""
    return round(Fraction(k).limit_denominator(10**6) * B)


def select_hybrid(
    batch: WeekBatch,
    B: int,
    k: float,
    scorer: FraudScorer | np.ndarray,
    rng: np.random.Generator,
) -> Selection:
    """Top-scored items for exploitation, uniform sample of the rest for exploration.

    ``scorer`` may be a fitted scorer or precomputed per-item scores.
    """
    n = len(batch)
    if B > n:
        raise DataError(f"budget {B} exceeds batch size {n}")
    if not 0 <= k <= 1:
        raise ValueError(f"exploration ratio {k} outside [0, 1]")
    n_explore = explore_count(k, B)
    n_exploit = B - n_explore
    ids = batch.ids
    if n_exploit > 0:
        scores = scorer if isinstance(scorer, np.ndarray) else scorer.score(batch)
        order = np.lexsort((ids, -scores))
        exploit = order[:n_exploit]
    else:
        exploit = np.zeros(0, dtype=np.int64)
    if n_explore > 0:
        mask = np.ones(n, dtype=bool)
        mask[exploit] = False
        explore = rng.choice(np.flatnonzero(mask), size=n_explore, replace=False)
    else:
        explore = np.zeros(0, dtype=np.int64)
    return Selection(
        batch.week,
        tuple(int(i) for i in ids[explore]),
        tuple(int(i) for i in ids[exploit]),
        float(k),
        int(B),
        np.concatenate([exploit, explore]).astype(np.int64),
    )
