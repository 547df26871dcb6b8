"""Drift score against full-exploitation precision, plus the new-importer slice.

    python3 scripts/drift_report.py --out results/drift
"""

import argparse
from pathlib import Path

import numpy as np

from customs_adapt import datagen, simulator
from customs_adapt.core import SimConfig


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/drift")
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = SimConfig(runs=1, seed=a.seed)
    for kind in ("sudden", "none"):
        stream = datagen.generate(datagen.ScenarioConfig(drift_kind=kind, seed=a.seed))
        cache: dict = {}
        exploit = simulator.run_averaged(stream, cfg, "exploit", cache)
        r, p = simulator.correlation_report(exploit)
        simulator.write_timeline_csv(exploit, out / f"exploit_{kind}.csv")
        print(f"{kind:<7} exploit-only: pearson r={r:+.3f} p={p:.2e}")
        if kind == "sudden":
            adapt = simulator.run_averaged(stream, cfg, "adapt", cache)
            simulator.write_timeline_csv(adapt, out / f"adapt_{kind}.csv")
            for tl in (exploit, adapt):
                v = float(np.mean(tl.mean["new_importer_norm_revenue"]))
                print(f"        {tl.method:<8} mean new-importer norm-revenue {v:.3f}")


if __name__ == "__main__":
    main()
