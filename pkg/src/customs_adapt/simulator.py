"""Long-horizon replay of the weekly inspect-label-retrain loop.

Each post-warmup week: score drift of the incoming batch against the last
validation window, let the controller pick the exploration ratio, select a
budget of items, reveal only their labels, record metrics, feed precision
back to the bandit and retrain the scorer on everything labelled so far.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bandit, controller, embed, metrics, strategies
from .controller import Method, RatioDecision
from .core import DataError, SimConfig, WeekBatch, budget, label_scope, make_rng
from .drift import DriftConfig, drift_score_embedded

log = logging.getLogger(__name__)

TIMELINE_COLUMNS = (
    "run,week,method,k_t,drift_s,budget,raw_precision,norm_precision,"
    "raw_revenue,norm_revenue,new_importer_norm_revenue"
).split(",")
PERIODS = (("all", None), ("2y", 104), ("1y", 52), ("0.5y", 26))
METHOD_NAMES = ("adapt", "apt", "ada", "fixed:<k>", "explore", "exploit")


@dataclass(frozen=True)
class MethodSpec:
    method: Method
    k: float | None = None

    @property
    def label(self) -> str:
        if self.method is Method.FIXED:
            return f"FIXED:{self.k:g}"
        return self.method.value

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        t = text.strip().lower()
        if t in ("adapt", "apt", "ada"):
            return cls(Method(t.upper()))
        if t == "explore":
            return cls(Method.FIXED, 1.0)
        if t == "exploit":
            return cls(Method.FIXED, 0.0)
        if t.startswith("fixed:"):
            try:
                k = float(t.split(":", 1)[1])
            except ValueError:
                k = math.nan
            if 0.0 <= k <= 1.0:
                return cls(Method.FIXED, k)
        raise ValueError(f"unknown method {text!r}; valid methods: {', '.join(METHOD_NAMES)}")


def fixed(k: float) -> MethodSpec:
    return MethodSpec(Method.FIXED, float(k))


@dataclass
class WeekRow:
    run: int
    week: int
    method: str
    k_t: float
    drift_s: float
    budget: int
    raw_precision: float
    norm_precision: float
    raw_revenue: float
    norm_revenue: float
    new_importer_norm_revenue: float | None
    arm: int | None = None


@dataclass
class SimTimeline:
    """Per-(run, week) rows plus per-week means across runs and period summaries."""

    method: str
    seeds: list[int]
    rows: list[WeekRow]
    weeks: list[int] = field(default_factory=list)
    mean: dict[str, np.ndarray] = field(default_factory=dict)
    summary: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.mean:
            self._aggregate()

    def _aggregate(self) -> None:
        self.weeks = sorted({r.week for r in self.rows})
        pos = {w: i for i, w in enumerate(self.weeks)}
        n_runs = len(self.seeds)
        cols = ("k_t", "drift_s", "norm_precision", "norm_revenue", "raw_precision", "raw_revenue")
        acc = {c: np.zeros(len(self.weeks)) for c in cols}
        ni_sum = np.zeros(len(self.weeks))
        ni_cnt = np.zeros(len(self.weeks))
        for r in self.rows:
            i = pos[r.week]
            for c in cols:
                acc[c][i] += getattr(r, c)
            if r.new_importer_norm_revenue is not None:
                ni_sum[i] += r.new_importer_norm_revenue
                ni_cnt[i] += 1
        self.mean = {c: v / n_runs for c, v in acc.items()}
        with np.errstate(invalid="ignore"):
            self.mean["new_importer_norm_revenue"] = np.where(ni_cnt > 0, ni_sum / np.maximum(ni_cnt, 1), np.nan)
        self.summary = {
            name: {
                "norm_precision": float(self.mean["norm_precision"][-n:].mean() if n else self.mean["norm_precision"].mean()),
                "norm_revenue": float(self.mean["norm_revenue"][-n:].mean() if n else self.mean["norm_revenue"].mean()),
            }
            for name, n in PERIODS
        }

    def last(self, metric: str, weeks: int) -> float:
        return float(np.nanmean(self.mean[metric][-weeks:]))

    def runs(self) -> list["SimTimeline"]:
        """Split into one timeline per run."""
        out = []
        for i, seed in enumerate(self.seeds):
            out.append(SimTimeline(self.method, [seed], [r for r in self.rows if r.run == i]))
        return out


@dataclass
class OracleResult:
    ratios: list[float]
    timelines: dict[float, SimTimeline]
    best_ratio: float

    @property
    def best(self) -> SimTimeline:
        return self.timelines[self.best_ratio]


# ---------------------------------------------------------------------------
# drift series


def check_stream(stream: Sequence[WeekBatch], cfg: SimConfig) -> None:
    if not stream:
        raise DataError("empty stream")
    first = stream[0].week
    for i, b in enumerate(stream):
        if b.week != first + i:
            raise DataError(f"stream gap: expected week {first + i}, found {b.week}")
    if cfg.warmup_weeks >= len(stream):
        raise DataError(f"warmup_weeks={cfg.warmup_weeks} leaves no week to simulate ({len(stream)} weeks)")


def _raw(batch: WeekBatch, cfg: SimConfig) -> np.ndarray:
    cache = batch.__dict__.setdefault("_raw_embedding", {})
    if cfg.embed_dim not in cache:
        cache[cfg.embed_dim] = embed.raw_features(batch, cfg.embed_dim, cfg.seed & 0xFFFF)
    return cache[cfg.embed_dim]


def weekly_drift(stream: Sequence[WeekBatch], t: int, cfg: SimConfig, seed: int) -> float:
    """Drift score of batch ``t`` against the preceding validation window (features only)."""
    lo = max(0, t - cfg.validation_window_weeks)
    if lo == t:
        raise DataError("insufficient data for drift scoring")
    hist = np.vstack([_raw(b, cfg) for b in stream[lo:t]])
    e = embed.Embedder.from_raw(hist, cfg.seed & 0xFFFF, cfg.embed_categorical_weight)
    return drift_score_embedded(
        e.transform(hist),
        e.transform(_raw(stream[t], cfg)),
        DriftConfig(cfg.bootstrap_sample, cfg.bootstrap_repeats),
        make_rng(seed, f"drift/{stream[t].week}"),
    )


def drift_series(stream: Sequence[WeekBatch], cfg: SimConfig, seed: int, cache: dict | None = None) -> np.ndarray:
    """Drift score of every post-warmup week; depends only on features and seed."""
    key = (id(stream), seed, cfg.validation_window_weeks, cfg.bootstrap_sample, cfg.bootstrap_repeats,
           cfg.embed_dim, cfg.embed_categorical_weight, cfg.warmup_weeks)
    if cache is not None and key in cache:
        return cache[key]
    s = np.array([weekly_drift(stream, t, cfg, seed) for t in range(cfg.warmup_weeks, len(stream))])
    if cache is not None:
        cache[key] = s
    return s


# ---------------------------------------------------------------------------
# single run


def _bandit_params(cfg: SimConfig) -> bandit.BanditParams:
    return bandit.BanditParams(cfg.eta, cfg.epsilon, cfg.alpha, cfg.gamma, cfg.reward_sign, cfg.mean_includes_current)


def _scorer_cfg(cfg: SimConfig) -> strategies.ScorerConfig:
    return strategies.ScorerConfig(rounds=cfg.scorer_rounds, learning_rate=cfg.scorer_learning_rate)


def run(
    stream: Sequence[WeekBatch],
    cfg: SimConfig,
    method: MethodSpec | str,
    seed: int | None = None,
    run_index: int = 0,
    drift: np.ndarray | None = None,
) -> SimTimeline:
    """Simulate one seeded run of ``method`` over ``stream``."""
    if isinstance(method, str):
        method = MethodSpec.parse(method)
    check_stream(stream, cfg)
    seed = cfg.seed if seed is None else seed
    if drift is None:
        drift = drift_series(stream, cfg, seed)
    grid = cfg.arm_ratios
    state = bandit.init_state(grid, _bandit_params(cfg)) if method.method in (Method.ADAPT, Method.APT) else None
    rng_ctrl = make_rng(seed, "controller")
    rng_sel = make_rng(seed, "selection")
    scfg = _scorer_cfg(cfg)

    nums, cats, ys = [], [], []
    seen: set[str] = set()
    for b in stream[: cfg.warmup_weeks]:
        with label_scope("warmup"):
            illicit, _ = b.labels()
        num, cat = strategies.encode_features(b, scfg.hash_salt)
        nums.append(num)
        cats.append(cat)
        ys.append(illicit.astype(float))
        seen.update(b.tokens["importer_id"])
    scorer = strategies.fit_scorer(np.vstack(nums), np.vstack(cats), np.concatenate(ys), scfg)

    rows = []
    for i, batch in enumerate(stream[cfg.warmup_weeks :]):
        s = float(drift[i])
        if method.method is Method.ADAPT:
            decision = controller.decide_adapt(state, grid, s, cfg.window_halfwidth, rng_ctrl, batch.week)
        elif method.method is Method.APT:
            decision = controller.decide_apt(state, grid, rng_ctrl, batch.week)
        elif method.method is Method.ADA:
            decision = controller.decide_ada(s, batch.week)
        else:
            decision = controller.decide_fixed(method.k, batch.week, s)
        B = budget(batch, cfg.inspection_rate)
        sel = strategies.select_hybrid(batch, B, decision.ratio, scorer, rng_sel)
        with label_scope("inspection"):
            y_sel, _ = batch.labels(sel.positions)
        with label_scope("evaluation"):
            np_ = metrics.norm_precision(sel, batch)
            row = WeekRow(
                run=run_index,
                week=batch.week,
                method=method.label,
                k_t=decision.ratio,
                drift_s=s,
                budget=B,
                raw_precision=metrics.raw_precision(sel, batch),
                norm_precision=np_,
                raw_revenue=metrics.raw_revenue(sel, batch),
                norm_revenue=metrics.norm_revenue(sel, batch),
                new_importer_norm_revenue=metrics.new_importer_slice(sel, batch, seen),
                arm=decision.arm,
            )
        rows.append(row)
        num, cat = strategies.encode_features(batch, scfg.hash_salt)
        nums.append(num[sel.positions])
        cats.append(cat[sel.positions])
        ys.append(y_sel.astype(float))
        importers = batch.tokens["importer_id"]
        seen.update(importers[p] for p in sel.positions)
        feedback = row.raw_precision if cfg.raw_precision_feedback else np_
        controller.post_feedback(decision, feedback, state)
        if (i + 1) % cfg.retrain_every_weeks == 0:
            scorer = strategies.fit_scorer(np.vstack(nums), np.vstack(cats), np.concatenate(ys), scfg)
    return SimTimeline(method.label, [seed], rows)


# ---------------------------------------------------------------------------
# drivers


def _run_job(args):
    stream, cfg, method, seed, idx, drift = args
    return run(stream, cfg, method, seed, idx, drift)


def run_averaged(
    stream: Sequence[WeekBatch],
    cfg: SimConfig,
    method: MethodSpec | str,
    drift_cache: dict | None = None,
    jobs: int = 1,
) -> SimTimeline:
    """``cfg.runs`` runs with seeds ``cfg.seed + r``; metrics averaged per week."""
    if isinstance(method, str):
        method = MethodSpec.parse(method)
    check_stream(stream, cfg)
    seeds = [cfg.seed + r for r in range(cfg.runs)]
    cache = {} if drift_cache is None else drift_cache
    drifts = [drift_series(stream, cfg, s, cache) for s in seeds]
    args = [(stream, cfg, method, s, r, d) for r, (s, d) in enumerate(zip(seeds, drifts))]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_job, args))
    else:
        parts = [_run_job(a) for a in args]
    rows = [r for p in parts for r in p.rows]
    return SimTimeline(method.label, seeds, rows)


def oracle_sweep(
    stream: Sequence[WeekBatch],
    cfg: SimConfig,
    ratios: Sequence[float] = tuple(i / 10 for i in range(11)),
    drift_cache: dict | None = None,
    jobs: int = 1,
) -> OracleResult:
    """Fixed-ratio runs; the oracle is the best by last-six-month norm-precision (ties to smaller k)."""
    if not ratios:
        raise ValueError("no ratios to sweep")
    for k in ratios:
        if not 0 <= k <= 1:
            raise ValueError(f"ratio {k} outside [0, 1]")
    cache = {} if drift_cache is None else drift_cache
    timelines = {}
    for k in ratios:
        timelines[float(k)] = run_averaged(stream, cfg, fixed(k), cache, jobs)
        log.info("sweep k=%.2f: last-0.5y norm-precision %.4f", k, timelines[float(k)].summary["0.5y"]["norm_precision"])
    best = None
    for k in sorted(timelines):
        v = timelines[k].summary["0.5y"]["norm_precision"]
        if best is None or v > timelines[best].summary["0.5y"]["norm_precision"]:
            best = k
    return OracleResult([float(k) for k in ratios], timelines, best)


def ablation(
    stream: Sequence[WeekBatch], cfg: SimConfig, drift_cache: dict | None = None, jobs: int = 1
) -> dict[str, SimTimeline]:
    cache = {} if drift_cache is None else drift_cache
    return {m: run_averaged(stream, cfg, m, cache, jobs) for m in ("ADAPT", "APT", "ADA")}


def correlation_report(timeline_exploit_only: SimTimeline, drift_series_: Sequence[float] | None = None) -> tuple[float, float]:
    """Pearson (r, p) between the drift score and full-exploitation norm-precision."""
    s = timeline_exploit_only.mean["drift_s"] if drift_series_ is None else np.asarray(drift_series_, dtype=float)
    return metrics.pearson(s, timeline_exploit_only.mean["norm_precision"])


# ---------------------------------------------------------------------------
# CSV


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def timeline_csv(timeline: SimTimeline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMELINE_COLUMNS)
    for r in timeline.rows:
        w.writerow([_cell(getattr(r, c)) for c in TIMELINE_COLUMNS])
    return buf.getvalue()


def write_timeline_csv(timeline: SimTimeline, path: str | Path) -> None:
    Path(path).write_text(timeline_csv(timeline), encoding="utf-8", newline="")


def read_timeline_csv(path: str | Path) -> SimTimeline:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TIMELINE_COLUMNS:
            raise DataError(f"{path}: timeline header must be {','.join(TIMELINE_COLUMNS)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                ni = rec["new_importer_norm_revenue"]
                rows.append(
                    WeekRow(
                        run=int(rec["run"]), week=int(rec["week"]), method=rec["method"],
                        k_t=float(rec["k_t"]), drift_s=float(rec["drift_s"]) if rec["drift_s"] else math.nan,
                        budget=int(rec["budget"]), raw_precision=float(rec["raw_precision"]),
                        norm_precision=float(rec["norm_precision"]), raw_revenue=float(rec["raw_revenue"]),
                        norm_revenue=float(rec["norm_revenue"]), new_importer_norm_revenue=float(ni) if ni else None,
                    )
                )
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data")
    n_runs = max(r.run for r in rows) + 1
    return SimTimeline(rows[0].method, list(range(n_runs)), rows)


def summary_rows(timelines: Sequence[SimTimeline], labels: Sequence[str] | None = None) -> list[list[str]]:
    header = ["method"] + [f"{m}_{p}" for m in ("norm_precision", "norm_revenue") for p, _ in PERIODS]
    out = [header]
    for i, t in enumerate(timelines):
        label = labels[i] if labels else t.method
        out.append([label] + [repr(t.summary[p][m]) for m in ("norm_precision", "norm_revenue") for p, _ in PERIODS])
    return out


def write_summary_csv(timelines: Sequence[SimTimeline], path: str | Path, labels: Sequence[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(summary_rows(timelines, labels))
