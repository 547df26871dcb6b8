"""Domain types, configuration and seeded randomness shared by every module."""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration field is outside its allowed range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class DataError(ValueError):
    """Raised for malformed or inconsistent declaration data."""


# ---------------------------------------------------------------------------
# randomness


def _label_words(label: str) -> list[int]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def make_rng(seed: int, stream_label: str) -> np.random.Generator:
    """Return a PCG64 generator for the sub-stream ``stream_label`` of ``seed``.

    The label is hashed with blake2b so the entropy words, and therefore the
    draws, do not depend on the platform or on Python's hash randomisation.
    """
    seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
    entropy = [seed & 0xFFFF_FFFF, seed >> 32, *_label_words(stream_label)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def stable_hash(*parts: object) -> int:
    """64-bit hash of ``parts`` that is stable across processes and platforms."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# ground-truth access tracking

_tracker: contextvars.ContextVar["LabelAccessTracker | None"] = contextvars.ContextVar(
    "label_tracker", default=None
)
_scope: contextvars.ContextVar[str] = contextvars.ContextVar("label_scope", default="strategy")


class LabelAccessTracker:
    """Records which declaration ids had their labels read, grouped by scope.

    Scopes used by the simulator: ``warmup`` (initial fully labelled weeks),
    ``inspection`` (labels revealed for selected items) and ``evaluation``
    (metric computation). Any read outside those lands in ``strategy``.
    """

    def __init__(self) -> None:
        self.reads: dict[str, set[int]] = defaultdict(set)

    def record(self, ids: Iterable[int]) -> None:
        self.reads[_scope.get()].update(int(i) for i in ids)


@contextlib.contextmanager
def track_label_access() -> Iterator[LabelAccessTracker]:
    tracker = LabelAccessTracker()
    token = _tracker.set(tracker)
    try:
        yield tracker
    finally:
        _tracker.reset(token)


@contextlib.contextmanager
def label_scope(name: str) -> Iterator[None]:
    token = _scope.set(name)
    try:
        yield
    finally:
        _scope.reset(token)


def _note_reads(ids: Iterable[int]) -> None:
    tracker = _tracker.get()
    if tracker is not None:
        tracker.record(ids)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class InspectionOutcome:
    illicit: bool
    revenue: float = 0.0

    def __post_init__(self) -> None:
        if self.revenue < 0 or not math.isfinite(self.revenue):
            raise DataError(f"revenue must be finite and non-negative, got {self.revenue}")
        if not self.illicit and self.revenue != 0:
            raise DataError("licit items carry zero revenue")


@dataclass(frozen=True)
class Declaration:
    """One import declaration.

    The label lives in ``truth`` but must be read through :attr:`ground_truth`
    so that access tracking sees it.
    """

    id: int
    week: int
    fob_value: float
    gross_weight: float
    quantity: int
    tariff_code: str
    importer_id: str
    declarant_id: str
    office_id: str
    truth: InspectionOutcome = field(repr=False)

    def __post_init__(self) -> None:
        if self.week < 0:
            raise DataError(f"declaration {self.id}: week must be non-negative")
        if not self.fob_value > 0:
            raise DataError(f"declaration {self.id}: fob_value must be positive")
        if not self.gross_weight > 0:
            raise DataError(f"declaration {self.id}: gross_weight must be positive")
        if self.quantity < 1:
            raise DataError(f"declaration {self.id}: quantity must be at least 1")

    @property
    def ground_truth(self) -> InspectionOutcome:
        _note_reads((self.id,))
        return self.truth


@dataclass(frozen=True)
class WeekBatch:
    """All declarations of one week, with cached column views."""

    week: int
    items: tuple[Declaration, ...]

    def __post_init__(self) -> None:
        if not self.items:
            raise DataError(f"week {self.week}: empty batch")
        object.__setattr__(self, "items", tuple(self.items))
        for d in self.items:
            if d.week != self.week:
                raise DataError(f"declaration {d.id} has week {d.week}, batch is {self.week}")

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.fromiter((d.id for d in self.items), dtype=np.int64, count=len(self.items))

    @cached_property
    def numeric(self) -> np.ndarray:
        """(n, 3) array of fob_value, gross_weight, quantity."""
        return np.array(
            [(d.fob_value, d.gross_weight, d.quantity) for d in self.items], dtype=np.float64
        )

    @cached_property
    def tokens(self) -> dict[str, list[str]]:
        return {
            name: [getattr(d, name) for d in self.items]
            for name in ("tariff_code", "importer_id", "declarant_id", "office_id")
        }

    def labels(self, positions: Sequence[int] | np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Illicit flags and revenues for ``positions`` (all items when None)."""
        illicit, revenue = self._label_arrays
        if positions is None:
            _note_reads(self.ids)
            return illicit, revenue
        positions = np.asarray(positions, dtype=np.int64)
        _note_reads(self.ids[positions])
        return illicit[positions], revenue[positions]

    @cached_property
    def _label_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        illicit = np.fromiter((d.truth.illicit for d in self.items), dtype=bool, count=len(self))
        revenue = np.fromiter((d.truth.revenue for d in self.items), dtype=np.float64, count=len(self))
        return illicit, revenue


def budget(batch: WeekBatch | Sequence, inspection_rate: float) -> int:
    """Number of items that may be inspected: ``max(1, floor(rate * n))``."""
    n = len(batch)
    if n == 0:
        raise DataError("empty batch")
    if not 0 < inspection_rate <= 1:
        raise ConfigError("inspection_rate", f"must lie in (0, 1], got {inspection_rate}")
    # the epsilon guards floor(0.1 * 200) style products that land a hair below an integer
    return max(1, min(n, math.floor(inspection_rate * n + 1e-9)))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SimConfig:
    inspection_rate: float = 0.10
    warmup_weeks: int = 8
    validation_window_weeks: int = 4
    arm_step: float = 0.05
    num_arms: int = 21
    eta: float = 3.0
    epsilon: float = 0.1
    alpha: float = 0.001
    gamma: float = 0.9
    window_halfwidth: float = 0.25
    bootstrap_sample: int = 256
    bootstrap_repeats: int = 5
    embed_dim: int = 16
    embed_categorical_weight: float = 0.05
    retrain_every_weeks: int = 1
    seed: int = 0
    runs: int = 5
    moving_avg_weeks: int = 14
    # bandit variants; defaults follow the exponential-weights maximisation reading
    reward_sign: int = 1
    mean_includes_current: bool = True
    raw_precision_feedback: bool = False
    # exploitation scorer
    scorer_rounds: int = 100
    scorer_learning_rate: float = 0.1

    def __post_init__(self) -> None:
        def check(ok: bool, name: str, msg: str) -> None:
            if not ok:
                raise ConfigError(name, msg)

        check(0 < self.inspection_rate <= 1, "inspection_rate", "must lie in (0, 1]")
        check(self.warmup_weeks >= 1, "warmup_weeks", "must be >= 1")
        check(self.validation_window_weeks >= 1, "validation_window_weeks", "must be >= 1")
        check(0 < self.arm_step <= 1, "arm_step", "must lie in (0, 1]")
        check(
            self.num_arms == round(1 / self.arm_step) + 1,
            "num_arms",
            f"must equal round(1/arm_step) + 1 = {round(1 / self.arm_step) + 1}",
        )
        check(self.eta > 0, "eta", "must be positive")
        check(0 <= self.epsilon <= 1, "epsilon", "must lie in [0, 1]")
        check(self.alpha > 0, "alpha", "must be positive")
        check(0 < self.gamma <= 1, "gamma", "must lie in (0, 1]")
        check(0 < self.window_halfwidth <= 1, "window_halfwidth", "must lie in (0, 1]")
        check(self.bootstrap_sample >= 2, "bootstrap_sample", "must be >= 2")
        check(self.bootstrap_repeats >= 1, "bootstrap_repeats", "must be >= 1")
        check(self.embed_dim >= 5, "embed_dim", "must be >= 5 (3 numeric + 2 hashed dims)")
        check(
            0 <= self.embed_categorical_weight <= 1, "embed_categorical_weight", "must lie in [0, 1]"
        )
        check(self.retrain_every_weeks >= 1, "retrain_every_weeks", "must be >= 1")
        check(0 <= self.seed < 2**64, "seed", "must be an unsigned 64-bit integer")
        check(self.runs >= 1, "runs", "must be >= 1")
        check(self.moving_avg_weeks >= 1, "moving_avg_weeks", "must be >= 1")
        check(self.reward_sign in (1, -1), "reward_sign", "must be +1 or -1")
        check(self.scorer_rounds >= 1, "scorer_rounds", "must be >= 1")
        check(self.scorer_learning_rate > 0, "scorer_learning_rate", "must be positive")

    @property
    def arm_ratios(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.num_arms)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        return dataclass_from_dict(cls, data)


def dataclass_from_dict(cls, data: dict):
    """Build ``cls`` from a mapping, rejecting unknown keys and mistyped values."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    kwargs = {}
    for name, value in data.items():
        default = fields[name].default
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(name, "must be a boolean")
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
                else:
                    raise ConfigError(name, "must be an integer")
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(name, "must be a number")
            value = float(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:  # nested structures with bad shapes
        raise ConfigError("<root>", str(exc)) from exc


def load_config(path: str | Path) -> SimConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return SimConfig.from_dict(data)
