"""Command-line entry point: ``b2bplan {size,pair,site,simulate}``.

Exit codes: 0 success, 1 input/usage error, 2 uneconomic result,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pairing, sizing
from .config import ConfigError, PlanConfig, load_config
from .network import ConvergenceError, NetworkError, compute_vlsm, load_network_json, solve_power_flow, write_vlsm_csv
from .profiles import ProfileError, load_profile_csv, net_load
from .siting import SitingError, site_connection_point
from .transfer import ConverterSpec, savings_curve, simulate_transfer

SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNECONOMIC = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("b2bplan")


def _num(x) -> str:
    return repr(float(x))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows, header_comments=(), footer=()) -> None:
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(header))
    lines += [",".join(str(c) for c in row) for row in rows]
    lines += [f"# {c}" for c in footer]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _floats(a) -> list[float]:
    return [float(x) for x in np.asarray(a)]


def _load_pair(args, cfg: PlanConfig):
    p1 = load_profile_csv(args.feeder1, cfg.backfeed_limits.feeder1_kw)
    p2 = load_profile_csv(args.feeder2, cfg.backfeed_limits.feeder2_kw)
    if not p1.load.aligned_with(p2.load):
        raise ProfileError(f"{args.feeder1} and {args.feeder2} are not aligned "
                           f"({p1.n_t} x {p1.step_hours} h vs {p2.n_t} x {p2.step_hours} h)")
    return p1, p2


# -- size --------------------------------------------------------------------

def sizing_report(a: sizing.SizingAnalysis) -> dict:
    def feeder(i, d, r, s_min, s_max, nr, opts):
        return {
            "s_max_kva": s_max,
            "s_min_kva": s_min,
            "nr_max": float(np.max(nr)),
            "turning_points_kva": list(opts),
            "opt_tor_kva": float(a.curve.sizes_kva[r.best_index]),
            "ratio_vt": r.ratio_vt,
            "d1": _floats(d.d1),
            "d2": _floats(d.d2),
            "d3": _floats(d.d3),
        }

    t = a.table
    return {
        "cost_split": {"gamma1": a.split.gamma1, "gamma2": a.split.gamma2},
        "savings": {"e_save1_max_kwh": a.curve.e_save1_max_kwh, "e_save2_max_kwh": a.curve.e_save2_max_kwh},
        "feeders": {
            "1": feeder(1, a.deriv1, a.tor1, a.s_min1, t.s_max1, a.revenue.nr1, t.opt_j1),
            "2": feeder(2, a.deriv2, a.tor2, a.s_min2, t.s_max2, a.revenue.nr2, t.opt_j2),
        },
        "option_table": t.as_dict(),
        "subset": a.decision.subset,
        "decision": {
            "s_opt_kva": a.decision.s_opt_kva,
            "rule_applied": a.decision.rule_applied,
            "audit": list(a.decision.audit),
        },
    }


def write_curves_csv(a: sizing.SizingAnalysis, path: Path) -> None:
    c, rev = a.curve, a.revenue
    rows = zip(c.sizes_kva, rev.nr, rev.nr1, rev.nr2, c.f1_kwh, c.f2_kwh,
               a.tor1.tor_years, a.tor2.tor_years, a.tor1.dvt, a.tor2.dvt)
    _write_csv(path, ["size_kva", "nr", "nr1", "nr2", "f1_kwh", "f2_kwh", "tor1", "tor2", "dvt1", "dvt2"],
               ([_num(x) for x in row] for row in rows))


def cmd_size(args) -> int:
    out = Path(args.out)
    cfg = load_config(args.config)
    p1, p2 = _load_pair(args, cfg)
    curve = savings_curve(p1, p2, cfg.converter.grid(), cfg.converter.efficiency,
                          cfg.converter.savings_mode, workers=args.jobs)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "size",
        "inputs": {"feeder1": Path(args.feeder1).name, "feeder2": Path(args.feeder2).name,
                   "n_t": p1.n_t, "step_hours": p1.step_hours},
        "config": cfg.to_dict(),
    }
    try:
        analysis = sizing.analyse(curve, cfg.economics)
    except (sizing.NoExchangeError, sizing.UneconomicError) as exc:
        report.update(status="uneconomic", message=str(exc),
                      savings={"e_save1_max_kwh": curve.e_save1_max_kwh,
                               "e_save2_max_kwh": curve.e_save2_max_kwh})
        _write_json(out, report)
        print(f"uneconomic: {exc}", file=sys.stderr)
        return EXIT_UNECONOMIC

    curves_path = out.with_name(out.stem + "_curves.csv")
    write_curves_csv(analysis, curves_path)
    report["status"] = "ok"
    report.update(sizing_report(analysis))
    report["curves_csv"] = curves_path.name
    _write_json(out, report)
    print(f"optimal converter size: {analysis.decision.s_opt_kva:g} kVA ({analysis.decision.rule_applied})")
    return EXIT_OK


# -- pair --------------------------------------------------------------------

def write_study_csv(result: pairing.StudyResult, path: Path) -> None:
    cfg = result.config
    _write_csv(
        path, ["area", "pratio", "std_sum_kw", "annual_savings_kwh"],
        ((r.area, _num(r.pratio), _num(r.std_sum_kw), _num(r.annual_savings_kwh)) for r in result.rows),
        header_comments=[f"reference_size_kva={cfg.reference_size_kva:g}", f"seed={cfg.seed}",
                         f"pv_penetration={cfg.pv_penetration:g} (annual energy basis)"],
        footer=[f"spearman_rho={result.rho_label}"],
    )


def cmd_pair(args) -> int:
    if not args.dir and not args.study:
        raise ConfigError("pair needs --dir and/or --study")
    out = Path(args.out)
    cfg = load_config(args.config)
    if args.dir:
        files = sorted(Path(args.dir).glob("*.csv"))
        profiles = [load_profile_csv(f) for f in files]
        if len(profiles) < 2:
            raise ProfileError(f"{args.dir}: need at least two profile CSVs, found {len(profiles)}")
        ranked = pairing.rank_pairs(profiles, args.top)
        _write_csv(out, ["feeder_a", "feeder_b", "std_sum_kw", "pratio", "rank"],
                   ((s.pair_id[0], s.pair_id[1], _num(s.std_sum_kw), _num(s.pratio), k)
                    for k, s in enumerate(ranked, start=1)))
        print(f"ranked {len(ranked)} pair(s) -> {out}")
    if args.study:
        result = pairing.scenario_grid_study(cfg.pairing)
        study_path = out.with_name("scenario_study.csv") if args.dir else out
        write_study_csv(result, study_path)
        print(f"scenario study: spearman rho = {result.rho_label} -> {study_path}")
    return EXIT_OK


# -- site --------------------------------------------------------------------

def cmd_site(args) -> int:
    out = Path(args.out)
    cfg = load_config(args.config)
    net = load_network_json(args.network)
    base = solve_power_flow(net)
    if not base.converged:
        raise ConvergenceError(f"base power flow did not converge after {base.iterations} iterations "
                               f"(mismatch {base.max_mismatch_kw:.3g} kW)")
    m = compute_vlsm(net, cfg.siting.delta_p_kw, cfg.siting.delta_q_kvar)
    res = site_connection_point(net, m, cfg.siting.siting)

    _write_csv(out, ["bus_id", "p_sum", "dist_sum_km", "c_value", "selected"],
               ((s.bus_id, _num(s.p_sum), _num(s.dist_sum_km), _num(s.c_value), int(s.bus_id == res.selected_bus))
                for s in res.per_bus))
    vlsm_path = out.with_name(out.stem + "_vlsmp.csv")
    write_vlsm_csv(m, vlsm_path, "p")
    best = next(s for s in res.per_bus if s.bus_id == res.selected_bus)
    _write_json(out.with_suffix(".json"), {
        "schema_version": SCHEMA_VERSION,
        "command": "site",
        "inputs": {"network": Path(args.network).name, "n_node": net.n_node},
        "config": cfg.to_dict()["siting"],
        "selected_bus": res.selected_bus,
        "c_value": best.c_value,
        "r_used": res.r_used,
        "min_voltage_pu": float(base.v_pu.min()),
        "siting_csv": out.name,
        "vlsmp_csv": vlsm_path.name,
    })
    print(f"selected connection bus: {res.selected_bus}")
    return EXIT_OK


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    p1, p2 = _load_pair(args, cfg)
    r = simulate_transfer(p1, p2, ConverterSpec(args.size, cfg.converter.efficiency), cfg.converter.savings_mode)
    cols = [net_load(p1).values, net_load(p2).values, r.p_c_12.values, r.p_c_21.values,
            r.net1_after.values, r.net2_after.values, r.save1.values, r.save2.values]
    _write_csv(Path(args.out),
               ["index", "net1_kw", "net2_kw", "p_c_12_kw", "p_c_21_kw", "net1_after_kw", "net2_after_kw",
                "save1_kw", "save2_kw"],
               ([i] + [_num(c[i]) for c in cols] for i in range(p1.n_t)),
               footer=[f"e_save1_kwh={r.e_save1_kwh!r}", f"e_save2_kwh={r.e_save2_kwh!r}"])
    print(f"E_save1 = {r.e_save1_kwh:.1f} kWh, E_save2 = {r.e_save2_kwh:.1f} kWh")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="b2bplan", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("size", help="select the converter size for a feeder pair")
    p.add_argument("--feeder1", required=True)
    p.add_argument("--feeder2", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1, help="threads for the size sweep")
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("pair", help="rank feeder pairs by the std criterion")
    p.add_argument("--dir")
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--study", action="store_true", help="run the 24-scenario validation study")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("site", help="select the connection bus on a feeder")
    p.add_argument("--network", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_site)

    p = sub.add_parser("simulate", help="write the per-step transfer trace for one size")
    p.add_argument("--feeder1", required=True)
    p.add_argument("--feeder2", required=True)
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ProfileError, ConfigError, NetworkError, SitingError, sizing.SizingError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
