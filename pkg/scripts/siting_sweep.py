"""Selected connection bus on the bundled 10-bus feeder as beta goes from 0 to 1.

    python scripts/siting_sweep.py --der 5 7 10
"""

import argparse

import numpy as np

from b2bplan.network import bundled_feeder, compute_vlsm
from b2bplan.siting import SitingConfig, site_connection_point


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--der", type=int, nargs="+", default=[5, 7, 10])
    ap.add_argument("--steps", type=int, default=11)
    args = ap.parse_args()
    net = bundled_feeder()
    m = compute_vlsm(net)
    print(f"{'beta':>5} {'bus':>4} {'p_sum':>11} {'dist_km':>8}")
    for beta in np.linspace(0, 1, args.steps):
        beta = float(round(beta, 10))
        res = site_connection_point(net, m, SitingConfig(1 - beta, beta, tuple(args.der)))
        s = next(x for x in res.per_bus if x.bus_id == res.selected_bus)
        print(f"{beta:5.2f} {s.bus_id:4d} {s.p_sum:11.3e} {s.dist_sum_km:8.2f}")


if __name__ == "__main__":
    main()
