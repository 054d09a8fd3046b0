#!/usr/bin/env python3
"""Sweep eps at fixed p and print sup g, the ladder gap, and per-step effective constants."""

import argparse
from pathlib import Path

from plaplab.experiment import ExperimentConfig, run_experiment

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "eps_uniformity.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT_CONFIG))
    ap.add_argument("--out", default="results/eps_uniformity")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    code, rows = run_experiment(cfg, out_dir=args.out, jobs=args.jobs)
    print(f"{'p':>6} {'eps':>8} {'n':>5} {'sup g':>10} {'gap':>8}  C_eff by step")
    for r in rows:
        if r["error"]:
            print(f"{r['p']:6g} {r['epsilon']:8.0e} {r['resolution']:5d}  failed: {r['error']}")
            continue
        ceff = " ".join(f"{s['c_eff']:.2e}" for s in r["ladder"]["steps"])
        print(f"{r['p']:6g} {r['epsilon']:8.0e} {r['resolution']:5d} {r['sup_g']:10.5f} "
              f"{r['ladder_gap']:8.2%}  {ceff}")
    for p in cfg.p:
        sups = [r["sup_g"] for r in rows if r["p"] == p and r["sup_g"] is not None]
        if sups:
            print(f"p = {p:g}: relative spread of sup g across eps = {(max(sups) - min(sups)) / max(sups):.3%}")
    raise SystemExit(code)


if __name__ == "__main__":
    main()
