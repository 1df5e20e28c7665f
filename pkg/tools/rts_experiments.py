"""Run the RTS-96 loading-level and operator-delay studies and print summaries.

    python tools/rts_experiments.py --years 200 --seed 11 --out results/
"""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import numpy as np

from gridmc.components import CAUSES
from gridmc.engine import SimConfig, run_monte_carlo
from gridmc.io import load_rts96
from gridmc.model import apply_loading_level
from gridmc.stats import frequency_curve

CONFIGS = {
    "L1.0-noop": (1.0, SimConfig(operator=False)),
    "L1.2-noop": (1.2, SimConfig(operator=False)),
    "L1.37-noop": (1.37, SimConfig(operator=False)),
    "L1.37-op15": (1.37, SimConfig(operator=True, response_delay=15.0)),
    "L1.37-op30": (1.37, SimConfig(operator=True, response_delay=30.0)),
}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--years", type=int, default=200)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default="rts_results")
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, profile = load_rts96()
    for name, (level, cfg) in CONFIGS.items():
        if args.only and name not in args.only:
            continue
        t0 = time.time()
        res = run_monte_carlo(apply_loading_level(model, level), profile, cfg, args.years, args.seed)
        good = [r for r in res if not r.aborted]
        recs = [rec for r in good for rec in r.records]
        energy = np.sum([r.energy_by_cause for r in good], axis=0) / max(len(good), 1)
        curve = frequency_curve(recs, len(good), [1e2, 1e3, 1e4, 1e5])
        summary = {
            "name": name,
            "seconds": round(time.time() - t0, 1),
            "years": len(good),
            "aborted": len(res) - len(good),
            "events": len(recs),
            "eens": {c.name: float(energy[c.value]) for c in CAUSES},
            "Fc": dict(zip(map(str, curve.thresholds.tolist()), curve.frequency.tolist())),
            "events_1e4_1e5": sum(1e4 <= r.energy <= 1e5 for r in recs),
        }
        print(json.dumps(summary), flush=True)
        (out / f"{name}.json").write_text(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
