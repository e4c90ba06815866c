"""How often does the pairing study reach rho >= 0.8 across seeds?

The default seed is one draw from this distribution; this script shows
the rest of it.

    python scripts/seed_sweep.py --seeds 50
"""

import argparse
from dataclasses import replace

import numpy as np

from b2bplan.pairing import ScenarioConfig, scenario_grid_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--threshold", type=float, default=0.8)
    args = ap.parse_args()
    rhos = []
    for seed in range(args.seeds):
        rho = scenario_grid_study(replace(ScenarioConfig(), seed=seed)).spearman_rho
        rhos.append(np.nan if rho is None else rho)
        print(f"seed {seed:3d}  rho {rhos[-1]:.4f}")
    r = np.array(rhos)
    print(f"mean {np.nanmean(r):.4f}  min {np.nanmin(r):.4f}  max {np.nanmax(r):.4f}  "
          f"share >= {args.threshold}: {np.mean(r >= args.threshold):.0%}")


if __name__ == "__main__":
    main()
