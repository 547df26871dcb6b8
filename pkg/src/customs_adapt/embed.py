"""Fixed-dimension declaration embeddings for drift scoring.

Layout of a raw vector: dimensions 0-2 hold ``log1p`` of fob value, gross
weight and quantity; every categorical token adds +1 or -1 (sign from a salted
hash) to one hashed dimension among the remaining ``dim - 3``. The fitted
embedder standardises all dimensions against a reference window and then
multiplies the hashed block by ``categorical_weight``: identity tokens land in
random directions, and at full weight their combinatorial spread dominates
the sampling noise of a 256-point transport distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import Declaration, DataError, WeekBatch, stable_hash

NUMERIC_DIMS = 3
DEFAULT_CATEGORICAL_WEIGHT = 0.05
CATEGORICAL_FIELDS = ("tariff_code", "importer_id", "declarant_id", "office_id")


@lru_cache(maxsize=1 << 18)
def _slot(salt: int, field_name: str, token: str, n_hashed: int) -> tuple[int, float]:
    h = stable_hash(salt, field_name, token)
    return NUMERIC_DIMS + (h >> 1) % n_hashed, (1.0 if h & 1 else -1.0)


def raw_features(
    items: Sequence[Declaration] | WeekBatch, dim: int = 16, salt: int = 0
) -> np.ndarray:
    """Unstandardised (n, dim) embedding matrix."""
    if dim < NUMERIC_DIMS + 2:
        raise ValueError(f"dim must be at least {NUMERIC_DIMS + 2}")
    batch = items if isinstance(items, WeekBatch) else None
    n = len(items)
    out = np.zeros((n, dim))
    if batch is not None:
        out[:, :NUMERIC_DIMS] = np.log1p(batch.numeric)
        columns = batch.tokens
    else:
        out[:, :NUMERIC_DIMS] = np.log1p(
            np.array([(d.fob_value, d.gross_weight, d.quantity) for d in items], dtype=float).reshape(n, 3)
        )
        columns = {f: [getattr(d, f) for d in items] for f in CATEGORICAL_FIELDS}
    n_hashed = dim - NUMERIC_DIMS
    rows = np.arange(n)
    for f in CATEGORICAL_FIELDS:
        slots = [_slot(salt, f, tok, n_hashed) for tok in columns[f]]
        cols = np.fromiter((s[0] for s in slots), dtype=np.int64, count=n)
        signs = np.fromiter((s[1] for s in slots), dtype=float, count=n)
        np.add.at(out, (rows, cols), signs)
    return out


@dataclass(frozen=True)
class Embedder:
    dim: int
    hash_salt: int
    mean: np.ndarray
    std: np.ndarray
    categorical_weight: float = DEFAULT_CATEGORICAL_WEIGHT

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedder):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.hash_salt == other.hash_salt
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
            and self.categorical_weight == other.categorical_weight
        )

    @classmethod
    def from_raw(
        cls, raw: np.ndarray, salt: int = 0, categorical_weight: float = DEFAULT_CATEGORICAL_WEIGHT
    ) -> "Embedder":
        if raw.ndim != 2 or raw.shape[0] == 0:
            raise DataError("cannot fit an embedder on an empty reference")
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        # zero-variance dimensions are left unscaled
        std = np.where(std > 1e-12, std, 1.0)
        return cls(raw.shape[1], salt, mean, std, categorical_weight)

    @property
    def scale(self) -> np.ndarray:
        w = np.full(self.dim, self.categorical_weight)
        w[:NUMERIC_DIMS] = 1.0
        return w / self.std

    def transform(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.mean) * self.scale

    def encode(self, d: Declaration) -> np.ndarray:
        return self.transform(raw_features([d], self.dim, self.hash_salt))[0]

    def encode_many(self, items: Sequence[Declaration] | WeekBatch) -> np.ndarray:
        return self.transform(raw_features(items, self.dim, self.hash_salt))


def fit(
    reference: Sequence[Declaration] | WeekBatch,
    dim: int = 16,
    salt: int = 0,
    categorical_weight: float = DEFAULT_CATEGORICAL_WEIGHT,
) -> Embedder:
    """Fit the standardiser on ``reference``."""
    if len(reference) == 0:
        raise DataError("cannot fit an embedder on an empty reference")
    return Embedder.from_raw(raw_features(reference, dim, salt), salt, categorical_weight)
