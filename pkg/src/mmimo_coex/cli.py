"""Command line front end: run one configuration, sweep a grid, or validate a config file."""

import argparse
import csv
import os
import sys

from .config import ScenarioConfig, load_config
from .engine import run_simulation
from .errors import ConfigError
from .results import emit_results


def _base_config(args):
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "scenario", None):
        overrides["scenario"] = args.scenario
    for arg_name, field in (
        ("ptr", "p_tr"),
        ("drops", "n_drops"),
        ("rounds", "n_rounds"),
        ("seed", "seed"),
        ("out", "out_dir"),
        ("format", "out_format"),
    ):
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field] = value
    return cfg.replace(**overrides) if overrides else cfg


def _print_summary(results):
    cfg = results.config
    print(f"scenario {cfg.scenario}  p_tr={cfg.p_tr}  drops={cfg.n_drops}  rounds={cfg.n_rounds}  seed={cfg.seed}")
    for ap in range(3):
        print(f"  AP{ap} access success: {results.ap_access_success(ap):.3f}")
    print(f"  median DL sum user throughput: {results.median_sum_throughput() / 1e6:.2f} Mb/s")
    print(f"  DL user SINR p5/p50: {results.sinr_percentile_db(5):.2f} / {results.sinr_percentile_db(50):.2f} dB")


def cmd_run(args):
    cfg = _base_config(args).validate()
    results = run_simulation(cfg)
    paths = emit_results(results)
    _print_summary(results)
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_sweep(args):
    base = _base_config(args)
    scenarios = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    ptrs = [float(p) for p in args.ptrs.split(",")]
    rows = []
    for scenario in scenarios:
        for p_tr in ptrs:
            sub = os.path.join(base.out_dir, f"{scenario}_ptr{p_tr:g}")
            cfg = base.replace(scenario=scenario, p_tr=p_tr, out_dir=sub).validate()
            results = run_simulation(cfg)
            emit_results(results)
            _print_summary(results)
            rows.append(
                [scenario, p_tr]
                + [results.ap_access_success(ap) for ap in range(3)]
                + [results.median_sum_throughput(), results.sinr_percentile_db(5)]
            )
    summary_path = os.path.join(base.out_dir, "sweep_summary.csv")
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["scenario", "p_tr", "access_ap0", "access_ap1", "access_ap2", "median_sum_throughput_bps", "sinr_p5_db"]
        )
        w.writerows(rows)
    print(f"  wrote {summary_path}")
    return 0


def cmd_validate_config(args):
    if not args.config:
        print("validate-config requires --config", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        cfg.validate()
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    print(f"{args.config}: ok (scenario {cfg.scenario})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and emit results")
    run_p.add_argument("--config", help="JSON configuration file")
    run_p.add_argument("--scenario", choices=["A", "B", "C"])
    run_p.add_argument("--ptr", type=float, help="traffic probability per STA")
    run_p.add_argument("--drops", type=int, help="number of Monte-Carlo drops")
    run_p.add_argument("--rounds", type=int, help="rounds per drop")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--format", choices=["csv", "json"])
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a scenario x traffic grid")
    sweep_p.add_argument("--config", help="JSON configuration file")
    sweep_p.add_argument("--scenarios", default="A,B,C")
    sweep_p.add_argument("--ptrs", default="0.1,1.0")
    sweep_p.add_argument("--drops", type=int)
    sweep_p.add_argument("--rounds", type=int)
    sweep_p.add_argument("--seed", type=int)
    sweep_p.add_argument("--out", help="root output directory")
    sweep_p.set_defaults(func=cmd_sweep)

    val_p = sub.add_parser("validate-config", help="check a configuration file")
    val_p.add_argument("--config", required=True)
    val_p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
