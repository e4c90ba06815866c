"""Run the 24-scenario pairing study and print the table.

    python scripts/run_scenario_study.py [--seed N] [--size KVA] [--out study.csv]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from b2bplan.cli import write_study_csv
from b2bplan.pairing import ScenarioConfig, scenario_grid_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=ScenarioConfig.seed)
    ap.add_argument("--size", type=float, default=ScenarioConfig.reference_size_kva)
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = replace(ScenarioConfig(), seed=args.seed, reference_size_kva=args.size)
    res = scenario_grid_study(cfg)
    print(f"{'area':<15}{'pratio':>7}{'std_sum_kw':>12}{'savings_kwh':>14}")
    for r in res.rows:
        print(f"{r.area:<15}{r.pratio:>7.1f}{r.std_sum_kw:>12.1f}{r.annual_savings_kwh:>14.0f}")
    print(f"spearman rho = {res.rho_label}")
    if args.out:
        write_study_csv(res, Path(args.out))


if __name__ == "__main__":
    main()
