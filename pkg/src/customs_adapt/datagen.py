"""Seeded synthetic declaration streams with controllable concept drift.

Two regimes drive generation. Regime A concentrates fraud in a group of
risky tariff codes and importers and marks it by under-valuation. Regime B
brings new tariff codes and a larger share of freshly registered importers,
moves fraud onto them, marks it by under-declared weight instead, and shifts
the price level with week-to-week volatility. The drift kind decides how the
two regimes are blended over time.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    ConfigError,
    DataError,
    Declaration,
    InspectionOutcome,
    WeekBatch,
    dataclass_from_dict,
    make_rng,
)

CSV_HEADER = (
    "id,week,fob_value,gross_weight,quantity,tariff_code,importer_id,"
    "declarant_id,office_id,illicit,revenue"
).split(",")

DRIFT_KINDS = ("none", "sudden", "gradual", "incremental", "recurrent")
RULE_TARGETS = ("risky_tariff", "risky_importer", "risky_new_tariff", "fresh_importer")


@dataclass(frozen=True)
class FraudRule:
    """Fraud probability for items matching ``target`` in regime A and B."""

    target: str
    prob_a: float
    prob_b: float

    def __post_init__(self) -> None:
        if self.target not in RULE_TARGETS:
            raise ConfigError("fraud_rules", f"unknown target {self.target!r}")
        if not (0 <= self.prob_a <= 1 and 0 <= self.prob_b <= 1):
            raise ConfigError("fraud_rules", "probabilities must lie in [0, 1]")


DEFAULT_RULES = (
    FraudRule("risky_tariff", 0.30, 0.12),
    FraudRule("risky_importer", 0.30, 0.12),
    FraudRule("risky_new_tariff", 0.0, 0.60),
    FraudRule("fresh_importer", 0.0, 0.15),
)


@dataclass(frozen=True)
class ScenarioConfig:
    weeks: int = 156
    items_per_week: int = 2000
    illicit_rate: float = 0.05
    drift_kind: str = "none"
    drift_week: int = 78
    drift_span: int = 26
    recurrent_period: int = 26
    n_tariff_codes: int = 200
    n_importers: int = 3000
    n_declarants: int = 300
    n_offices: int = 12
    risky_tariff_fraction: float = 0.08
    risky_importer_fraction: float = 0.03
    new_tariff_fraction: float = 0.06
    new_tariff_share: float = 0.15
    risky_new_tariff_fraction: float = 0.5
    new_importer_injection_rate: float = 0.03
    new_importer_share_b: float = 0.10
    fraud_rules: tuple[FraudRule, ...] = DEFAULT_RULES
    undervaluation_a: float = 0.45
    weight_understatement_b: float = 0.5
    price_shift_b: float = 0.8
    weekly_jitter_b: float = 1.6
    jitter_decay_weeks: float = 30.0
    revenue_rate: float = 0.25
    revenue_sigma: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        def check(ok: bool, name: str, msg: str) -> None:
            if not ok:
                raise ConfigError(name, msg)

        check(self.weeks >= 1, "weeks", "must be >= 1")
        check(self.items_per_week >= 1, "items_per_week", "must be >= 1")
        check(0 < self.illicit_rate < 1, "illicit_rate", "must lie in (0, 1)")
        check(self.drift_kind in DRIFT_KINDS, "drift_kind", f"must be one of {', '.join(DRIFT_KINDS)}")
        if self.drift_kind != "none":
            check(0 <= self.drift_week < self.weeks, "drift_week", "must lie in [0, weeks)")
        check(self.drift_span >= 1, "drift_span", "must be >= 1")
        check(self.recurrent_period >= 1, "recurrent_period", "must be >= 1")
        for name in ("n_tariff_codes", "n_importers", "n_declarants", "n_offices"):
            check(getattr(self, name) >= 2, name, "must be >= 2")
        for name in (
            "risky_tariff_fraction", "risky_importer_fraction", "new_tariff_fraction",
            "new_tariff_share", "risky_new_tariff_fraction", "new_importer_injection_rate",
            "new_importer_share_b",
        ):
            check(0 <= getattr(self, name) <= 1, name, "must lie in [0, 1]")
        for name in ("undervaluation_a", "weight_understatement_b"):
            check(0 < getattr(self, name) <= 1, name, "must lie in (0, 1]")
        check(self.weekly_jitter_b >= 0, "weekly_jitter_b", "must be non-negative")
        check(self.jitter_decay_weeks >= 0, "jitter_decay_weeks", "must be non-negative (0 disables decay)")
        check(self.revenue_rate > 0, "revenue_rate", "must be positive")
        check(self.revenue_sigma >= 0, "revenue_sigma", "must be non-negative")
        check(0 <= self.seed < 2**64, "seed", "must be an unsigned 64-bit integer")
        rules = tuple(
            r if isinstance(r, FraudRule) else FraudRule(**r) if isinstance(r, dict) else r
            for r in self.fraud_rules
        )
        check(all(isinstance(r, FraudRule) for r in rules), "fraud_rules", "entries must be objects")
        object.__setattr__(self, "fraud_rules", rules)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if isinstance(data, dict) and "fraud_rules" in data:
            rules = data["fraud_rules"]
            if not isinstance(rules, list) or not all(isinstance(r, dict) for r in rules):
                raise ConfigError("fraud_rules", "must be a list of objects")
            try:
                data = {**data, "fraud_rules": tuple(FraudRule(**r) for r in rules)}
            except TypeError as exc:
                raise ConfigError("fraud_rules", str(exc)) from exc
        return dataclass_from_dict(cls, data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def regime_b_weight(cfg: ScenarioConfig, week: int) -> float:
    """Share (or, for ``incremental``, blend) of regime B in ``week``."""
    if cfg.drift_kind == "none" or week < cfg.drift_week:
        return 0.0
    if cfg.drift_kind == "sudden":
        return 1.0
    if cfg.drift_kind in ("gradual", "incremental"):
        return min(1.0, (week - cfg.drift_week + 1) / cfg.drift_span)
    # recurrent: B for one period, A for the next, and so on
    return 1.0 if ((week - cfg.drift_week) // cfg.recurrent_period) % 2 == 0 else 0.0


@dataclass
class _Universe:
    tariffs: list[str]
    tariff_pop: np.ndarray
    log_weight_mu: np.ndarray
    log_price_mu: np.ndarray
    risky_tariff: np.ndarray
    new_tariffs: list[str]
    new_tariff_pop: np.ndarray
    new_log_weight_mu: np.ndarray
    new_log_price_mu: np.ndarray
    risky_new_tariff: np.ndarray
    importer_pop: np.ndarray
    risky_importer: np.ndarray
    declarant_pop: np.ndarray
    office_pop_a: np.ndarray
    office_pop_b: np.ndarray
    rule_probs: dict[str, tuple[float, float]] = field(default_factory=dict)


def _zipf(rng: np.random.Generator, n: int, s: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    rng.shuffle(w)
    return w / w.sum()


def _universe(cfg: ScenarioConfig, rng: np.random.Generator) -> _Universe:
    nt = cfg.n_tariff_codes
    n_new = max(1, round(nt * cfg.new_tariff_fraction))
    risky_t = np.zeros(nt, dtype=bool)
    risky_t[rng.choice(nt, size=max(1, round(nt * cfg.risky_tariff_fraction)), replace=False)] = True
    risky_new = np.zeros(n_new, dtype=bool)
    risky_new[rng.choice(n_new, size=round(n_new * cfg.risky_new_tariff_fraction), replace=False)] = True
    risky_imp = np.zeros(cfg.n_importers, dtype=bool)
    risky_imp[
        rng.choice(cfg.n_importers, size=round(cfg.n_importers * cfg.risky_importer_fraction), replace=False)
    ] = True
    office_a = _zipf(rng, cfg.n_offices, 1.2)
    return _Universe(
        tariffs=[f"T{i:05d}" for i in range(nt)],
        tariff_pop=_zipf(rng, nt, 0.6),
        log_weight_mu=rng.normal(4.0, 1.2, nt),
        log_price_mu=rng.normal(2.5, 0.6, nt),
        risky_tariff=risky_t,
        new_tariffs=[f"N{i:05d}" for i in range(n_new)],
        new_tariff_pop=_zipf(rng, n_new, 0.6),
        new_log_weight_mu=rng.normal(3.0, 1.2, n_new),
        new_log_price_mu=rng.normal(3.3, 0.6, n_new),
        risky_new_tariff=risky_new,
        importer_pop=_zipf(rng, cfg.n_importers, 0.9),
        risky_importer=risky_imp,
        declarant_pop=_zipf(rng, cfg.n_declarants, 1.0),
        office_pop_a=office_a,
        office_pop_b=rng.permutation(office_a),
        rule_probs={r.target: (r.prob_a, r.prob_b) for r in cfg.fraud_rules},
    )


def _jitter_decay(cfg: ScenarioConfig, week: int) -> float:
    if cfg.jitter_decay_weeks == 0 or cfg.drift_kind == "none":
        return 1.0
    return math.exp(-max(0, week - cfg.drift_week) / cfg.jitter_decay_weeks)


def _week(cfg: ScenarioConfig, u: _Universe, week: int, first_id: int, rng: np.random.Generator) -> WeekBatch:
    n = cfg.items_per_week
    lam = regime_b_weight(cfg, week)
    if cfg.drift_kind == "incremental":
        c = np.full(n, lam)
    else:
        c = (rng.random(n) < lam).astype(float)
    # regime-B volatility: one shipment-size factor per week scales weight,
    # value and quantity together, leaving unit prices (and so the ranking
    # signal) untouched. Drawn every week so the stream stays aligned.
    # The burst settles with time since the drift onset.
    size_shift = rng.normal(0.0, cfg.weekly_jitter_b) * _jitter_decay(cfg, week)

    # tariff codes
    is_new_t = rng.random(n) < c * cfg.new_tariff_share
    old_idx = rng.choice(len(u.tariffs), size=n, p=u.tariff_pop)
    new_idx = rng.choice(len(u.new_tariffs), size=n, p=u.new_tariff_pop)
    log_w_mu = np.where(is_new_t, u.new_log_weight_mu[new_idx], u.log_weight_mu[old_idx])
    log_p_mu = np.where(is_new_t, u.new_log_price_mu[new_idx], u.log_price_mu[old_idx])

    # importers: established pool or freshly registered (last four weeks)
    fresh_share = cfg.new_importer_injection_rate + c * (cfg.new_importer_share_b - cfg.new_importer_injection_rate)
    fresh = rng.random(n) < fresh_share
    imp_idx = rng.choice(cfg.n_importers, size=n, p=u.importer_pop)
    regs_per_week = max(1, math.ceil(max(cfg.new_importer_injection_rate, cfg.new_importer_share_b) * n / 3))
    fresh_week = week - rng.integers(0, 4, size=n)
    fresh_no = rng.integers(0, regs_per_week, size=n)
    dec_idx = rng.choice(cfg.n_declarants, size=n, p=u.declarant_pop)
    use_b_office = rng.random(n) < c
    off_idx = np.where(
        use_b_office,
        rng.choice(cfg.n_offices, size=n, p=u.office_pop_b),
        rng.choice(cfg.n_offices, size=n, p=u.office_pop_a),
    )

    # fraud probability: strongest matching rule, calibrated background elsewhere
    matches = {
        "risky_tariff": ~is_new_t & u.risky_tariff[old_idx],
        "risky_importer": ~fresh & u.risky_importer[imp_idx],
        "risky_new_tariff": is_new_t & u.risky_new_tariff[new_idx],
        "fresh_importer": fresh,
    }
    p = np.zeros(n)
    matched = np.zeros(n, dtype=bool)
    for target, (pa, pb) in u.rule_probs.items():
        prob = pa + c * (pb - pa)
        m = matches[target] & (prob > 0)
        p = np.where(m, np.maximum(p, prob), p)
        matched |= m
    n_bg = int((~matched).sum())
    if n_bg:
        bg = (cfg.illicit_rate * n - p[matched].sum()) / n_bg
        p[~matched] = min(max(bg, 0.002), 0.5)
    illicit = rng.random(n) < p

    # numeric fields; fraud signatures blend with the regime weight
    log_weight = rng.normal(log_w_mu + c * size_shift, 0.8)
    log_price = rng.normal(log_p_mu + c * cfg.price_shift_b, 0.35)
    weight_true = np.exp(log_weight)
    fob_true = weight_true * np.exp(log_price)
    quantity = 1 + rng.poisson(np.exp(rng.normal(1.5 + c * size_shift, 0.8, n)))
    under_val = np.exp((1 - c) * math.log(cfg.undervaluation_a))
    under_w = np.exp(c * math.log(cfg.weight_understatement_b))
    fob = np.where(illicit, fob_true * under_val, fob_true)
    weight = np.where(illicit, weight_true * under_w, weight_true)
    revenue = np.where(
        illicit, cfg.revenue_rate * fob_true * np.exp(rng.normal(0.0, cfg.revenue_sigma, n)), 0.0
    )

    items = []
    for i in range(n):
        tariff = u.new_tariffs[new_idx[i]] if is_new_t[i] else u.tariffs[old_idx[i]]
        importer = f"R{max(fresh_week[i], 0):04d}-{fresh_no[i]:04d}" if fresh[i] else f"I{imp_idx[i]:06d}"
        items.append(
            Declaration(
                id=first_id + i,
                week=week,
                fob_value=round(float(fob[i]), 4) or 0.0001,
                gross_weight=round(float(weight[i]), 4) or 0.0001,
                quantity=int(quantity[i]),
                tariff_code=tariff,
                importer_id=importer,
                declarant_id=f"D{dec_idx[i]:05d}",
                office_id=f"O{off_idx[i]:03d}",
                truth=InspectionOutcome(bool(illicit[i]), round(float(revenue[i]), 4) if illicit[i] else 0.0),
            )
        )
    return WeekBatch(week, tuple(items))


def generate(cfg: ScenarioConfig, seed: int | None = None) -> list[WeekBatch]:
    """Generate ``cfg.weeks`` weekly batches (``seed`` overrides ``cfg.seed``)."""
    seed = cfg.seed if seed is None else seed
    u = _universe(cfg, make_rng(seed, "datagen/universe"))
    rng = make_rng(seed, "datagen/stream")
    stream = []
    next_id = 0
    for week in range(cfg.weeks):
        batch = _week(cfg, u, week, next_id, rng)
        next_id += len(batch)
        stream.append(batch)
    return stream


# ---------------------------------------------------------------------------
# CSV


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(stream: list[WeekBatch], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for batch in stream:
            for d in batch.items:
                t = d.truth
                w.writerow(
                    [d.id, d.week, _fmt(d.fob_value), _fmt(d.gross_weight), d.quantity, d.tariff_code,
                     d.importer_id, d.declarant_id, d.office_id, int(t.illicit), _fmt(t.revenue)]
                )


def read_csv(path: str | Path) -> list[WeekBatch]:
    """Parse a stream file; errors name the offending line."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("no data") from None
        if header != CSV_HEADER:
            extra = [h for h in header if h not in CSV_HEADER]
            if extra:
                raise DataError(f"line 1: unknown column {extra[0]!r}")
            raise DataError(f"line 1: header must be {','.join(CSV_HEADER)}")
        weeks: dict[int, list[Declaration]] = {}
        last_week = -1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                illicit = {"0": False, "1": True}[row[9]]
                d = Declaration(
                    id=int(row[0]),
                    week=int(row[1]),
                    fob_value=float(row[2]),
                    gross_weight=float(row[3]),
                    quantity=int(row[4]),
                    tariff_code=row[5],
                    importer_id=row[6],
                    declarant_id=row[7],
                    office_id=row[8],
                    truth=InspectionOutcome(illicit, float(row[10])),
                )
            except KeyError:
                raise DataError(f"line {lineno}: illicit must be 0 or 1") from None
            except (ValueError, DataError) as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            if d.week < last_week:
                raise DataError(f"line {lineno}: week {d.week} after week {last_week}")
            last_week = d.week
            weeks.setdefault(d.week, []).append(d)
    if not weeks:
        raise DataError("no data")
    return [WeekBatch(w, tuple(items)) for w, items in weeks.items()]
