"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import __version__, datagen, metrics, simulator
from .core import ConfigError, DataError, SimConfig, load_config

log = logging.getLogger("customs_adapt")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4
DEFAULT_RATIOS = tuple(i / 10 for i in range(11))


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    methods: list[str]
    inputs: dict[str, str]
    outputs: dict[str, str]
    options: dict = field(default_factory=dict)
    tool_version: str = __version__
    wall_clock_s: float | None = None

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**data)
        except (json.JSONDecodeError, TypeError) as exc:
            raise ConfigError("manifest", f"unreadable manifest: {exc}") from exc


def _start(manifest: RunManifest, out: Path) -> tuple[Path, float]:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    manifest.write(path)
    return path, time.perf_counter()


def _finish(manifest: RunManifest, path: Path, t0: float) -> None:
    manifest.wall_clock_s = round(time.perf_counter() - t0, 3)
    manifest.write(path)


# ---------------------------------------------------------------------------
# helpers


def _sim_config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _read_stream(path: str | None):
    if not path:
        raise DataError("--data is required")
    try:
        return datagen.read_csv(path)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None


def _parse_ratios(text: str | None) -> list[float]:
    if text is None:
        return list(DEFAULT_RATIOS)
    try:
        ratios = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("ratios", f"not a comma-separated list of numbers: {text!r}") from None
    if not ratios or any(not 0 <= k <= 1 for k in ratios):
        raise ConfigError("ratios", "ratios must be non-empty and lie in [0, 1]")
    return ratios


def _parse_method(text: str) -> simulator.MethodSpec:
    try:
        return simulator.MethodSpec.parse(text)
    except ValueError as exc:
        raise ConfigError("method", str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_datagen(args) -> int:
    cfg = datagen.ScenarioConfig.load(args.config) if args.config else datagen.ScenarioConfig()
    if args.seed is not None:
        cfg = datagen.ScenarioConfig.from_dict({**_scenario_dict(cfg), "seed": args.seed})
    out = Path(args.out)
    data_path = out / "stream.csv"
    manifest = RunManifest("datagen", _scenario_dict(cfg), cfg.seed, [], {}, {"data": str(data_path)})
    mpath, t0 = _start(manifest, out)
    datagen.write_csv(datagen.generate(cfg), data_path)
    _finish(manifest, mpath, t0)
    return EXIT_OK


def _scenario_dict(cfg: datagen.ScenarioConfig) -> dict:
    d = cfg.to_dict()
    d["fraud_rules"] = [dict(r) for r in d["fraud_rules"]]
    return d


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    method = _parse_method(args.method)
    stream = _read_stream(args.data)
    out = Path(args.out)
    outputs = {"timeline": str(out / "timeline.csv"), "summary": str(out / "summary.csv")}
    manifest = RunManifest(
        "simulate", cfg.to_dict(), cfg.seed, [method.label], {"data": str(args.data)}, outputs,
        {"jobs": args.jobs},
    )
    mpath, t0 = _start(manifest, out)
    tl = simulator.run_averaged(stream, cfg, method, jobs=args.jobs)
    simulator.write_timeline_csv(tl, outputs["timeline"])
    simulator.write_summary_csv([tl], outputs["summary"])
    _finish(manifest, mpath, t0)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _sim_config(args)
    ratios = _parse_ratios(args.ratios)
    stream = _read_stream(args.data)
    out = Path(args.out)
    outputs = {"sweep": str(out / "sweep.csv")}
    manifest = RunManifest(
        "sweep", cfg.to_dict(), cfg.seed, [f"fixed:{k:g}" for k in ratios], {"data": str(args.data)},
        outputs, {"jobs": args.jobs, "ratios": ratios},
    )
    mpath, t0 = _start(manifest, out)
    res = simulator.oracle_sweep(stream, cfg, ratios, jobs=args.jobs)
    tls = [res.timelines[float(k)] for k in ratios]
    rows = simulator.summary_rows(tls, [f"{k:g}" for k in ratios])
    rows[0][0] = "ratio"
    best = simulator.summary_rows([res.best], [f"oracle:{res.best_ratio:g}"])[1]
    with open(outputs["sweep"], "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows + [best])
    _finish(manifest, mpath, t0)
    return EXIT_OK


def cmd_drift(args) -> int:
    cfg = _sim_config(args)
    stream = _read_stream(args.data)
    if len(stream) <= max(cfg.warmup_weeks, cfg.validation_window_weeks):
        raise DataError(
            f"stream has {len(stream)} weeks; drift scoring needs more than "
            f"max(warmup_weeks, validation_window_weeks) = {max(cfg.warmup_weeks, cfg.validation_window_weeks)}"
        )
    out_path = Path(args.out)
    if out_path.suffix.lower() != ".csv":
        out_path = out_path / "drift.csv"
    manifest = RunManifest("drift", cfg.to_dict(), cfg.seed, [], {"data": str(args.data)}, {"drift": str(out_path)})
    mpath, t0 = _start(manifest, out_path.parent)
    simulator.check_stream(stream, cfg)
    s = simulator.drift_series(stream, cfg, cfg.seed)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["week", "drift_s"])
        for batch, v in zip(stream[cfg.warmup_weeks :], s):
            w.writerow([batch.week, repr(float(v))])
    _finish(manifest, mpath, t0)
    return EXIT_OK


REPORT_METRICS = ("norm_precision", "norm_revenue", "k_t", "drift_s")


def cmd_report(args) -> int:
    if not args.timelines:
        raise DataError("report needs at least one timeline CSV")
    cfg = _sim_config(args)
    out = Path(args.out)
    tls = [simulator.read_timeline_csv(p) for p in args.timelines]
    labels = _unique_labels(tls, args.timelines)
    outputs = {m: str(out / f"{m}.svg") for m in REPORT_METRICS}
    outputs["pearson"] = str(out / "pearson.csv")
    manifest = RunManifest(
        "report", cfg.to_dict(), cfg.seed, labels, {"timelines": ",".join(map(str, args.timelines))}, outputs
    )
    mpath, t0 = _start(manifest, out)
    weeks = sorted(set.intersection(*(set(t.weeks) for t in tls)))
    if not weeks:
        raise DataError("timelines share no weeks")
    if any(len(t.weeks) != len(weeks) for t in tls):
        log.warning("timelines cover different weeks; truncating to the %d shared weeks", len(weeks))
    series = {}
    for label, t in zip(labels, tls):
        keep = np.isin(t.weeks, weeks)
        series[label] = {m: t.mean[m][keep] for m in REPORT_METRICS}
    for m in REPORT_METRICS:
        smoothed = {lab: metrics.moving_average(s[m], cfg.moving_avg_weeks) for lab, s in series.items()}
        Path(outputs[m]).write_text(line_chart_svg(weeks, smoothed, m), encoding="utf-8")
    with open(outputs["pearson"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "r", "p", "n"])
        for label, s in series.items():
            try:
                r, p = metrics.pearson(s["drift_s"], s["norm_precision"])
            except ValueError as exc:
                log.warning("%s: no correlation (%s)", label, exc)
                r = p = math.nan
            w.writerow([label, repr(r), repr(p), len(weeks)])
    _finish(manifest, mpath, t0)
    return EXIT_OK


def _unique_labels(tls, paths) -> list[str]:
    labels = [t.method for t in tls]
    if len(set(labels)) < len(labels):
        labels = [f"{t.method} ({Path(p).parent.name or Path(p).stem})" for t, p in zip(tls, paths)]
    return labels


def cmd_replay(args) -> int:
    m = RunManifest.read(args.manifest)
    argv = [m.command]
    cfg_path = Path(args.manifest).with_name("replay_config.json")
    if m.command == "datagen":
        cfg_path.write_text(json.dumps(m.config, sort_keys=True), encoding="utf-8")
        argv += ["--config", str(cfg_path), "--out", str(Path(m.outputs["data"]).parent)]
    else:
        cfg_path.write_text(json.dumps(m.config, sort_keys=True), encoding="utf-8")
        argv += ["--config", str(cfg_path)]
        if m.command == "report":
            argv += m.inputs["timelines"].split(",") + ["--out", str(Path(m.outputs["pearson"]).parent)]
        else:
            argv += ["--data", m.inputs["data"]]
        if m.command == "simulate":
            argv += ["--method", m.methods[0].lower(), "--out", str(Path(m.outputs["timeline"]).parent)]
        elif m.command == "sweep":
            argv += ["--ratios", ",".join(repr(k) for k in m.options["ratios"]), "--out", str(Path(m.outputs["sweep"]).parent)]
        elif m.command == "drift":
            argv += ["--out", m.outputs["drift"]]
    return main(argv)


# ---------------------------------------------------------------------------
# SVG


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def line_chart_svg(weeks: Sequence[int], series: dict[str, np.ndarray], title: str,
                   width: int = 720, height: int = 400) -> str:
    """Plain SVG line chart; NaN points break the line."""
    left, right, top, bottom = 60, 20, 30, 70
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = (min(weeks), max(weeks)) if weeks else (0, 1)
    x1 = x1 if x1 > x0 else x0 + 1
    vals = np.concatenate([v[np.isfinite(v)] for v in series.values()] or [np.zeros(0)])
    y0, y1 = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(w):
        return left + (w - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for i in range(5):
        v = y0 + (y1 - y0) * i / 4
        parts.append(
            f'<text x="{left - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3g}</text>'
        )
        w = x0 + (x1 - x0) * i / 4
        parts.append(
            f'<text x="{px(w):.1f}" y="{top + ph + 14}" text-anchor="middle" font-family="sans-serif" font-size="10">{w:.0f}</text>'
        )
    for j, (label, v) in enumerate(series.items()):
        colour = PALETTE[j % len(PALETTE)]
        segs, cur = [], []
        for w, y in zip(weeks, v):
            if np.isfinite(y):
                cur.append(f"{px(w):.2f},{py(y):.2f}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        for seg in segs:
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = top + ph + 32 + 14 * (j // 3)
        lx = left + (j % 3) * (pw / 3)
        parts.append(f'<line x1="{lx:.1f}" y1="{ly}" x2="{lx + 20:.1f}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        parts.append(
            f'<text x="{lx + 26:.1f}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="customs-adapt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", required=True, help="output directory (drift: directory or .csv path)")
        if data:
            sp.add_argument("--data", help="declaration stream CSV")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("datagen", help="generate a synthetic declaration stream"), data=False)
    sp = sub.add_parser("simulate", help="replay one method over a stream")
    common(sp)
    sp.add_argument("--method", required=True, help=", ".join(simulator.METHOD_NAMES))
    sp = sub.add_parser("sweep", help="fixed-ratio sweep with oracle")
    common(sp)
    sp.add_argument("--ratios", help="comma-separated exploration ratios")
    common(sub.add_parser("drift", help="weekly drift scores"))
    sp = sub.add_parser("report", help="SVG charts and drift/precision correlations")
    common(sp, data=False)
    sp.add_argument("timelines", nargs="*", help="timeline CSV files")
    sp = sub.add_parser("replay", help="re-run a command from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("-v", "--verbose", action="store_true")
    return p


COMMANDS = {
    "datagen": cmd_datagen, "simulate": cmd_simulate, "sweep": cmd_sweep,
    "drift": cmd_drift, "report": cmd_report, "replay": cmd_replay,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: seed: must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("error: jobs: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
