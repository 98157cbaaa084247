"""Command-line front end.

Subcommands: simulate (run a scenario config, emit metrics/summary CSVs),
pm-estimate (fleet PM budget arithmetic), sweep (concentration curves),
ledger-audit (run with the ledger on and verify the DAG).

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, emissions
from .simulator import (
    ConfigError,
    ScenarioConfig,
    run_scenario,
    write_metrics_csv,
    write_summary_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

PRESET_DIR = Path(__file__).parent / "presets"


def _load_config(path: str, seed: int | None) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        preset = PRESET_DIR / f"{path}.json"
        if preset.exists():
            p = preset
        else:
            raise ConfigError(f"config not found: {path}")
    with open(p) as fh:
        raw = json.load(fh)
    if seed is not None:
        raw["seed"] = seed
    return ScenarioConfig.from_dict(raw)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args.seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(cfg)
    write_metrics_csv(outdir / "metrics.csv", result.metrics)
    write_summary_csv(outdir / "summary.csv", result)
    print(f"wrote {outdir / 'metrics.csv'} ({len(result.metrics)} days)")
    print(f"wrote {outdir / 'summary.csv'}")
    return EXIT_OK


def cmd_pm_estimate(args: argparse.Namespace) -> int:
    if not 0.0 <= args.airborne_frac <= 1.0:
        raise ConfigError(
            f"--airborne-frac must be in [0,1], got {args.airborne_frac}"
        )
    if args.cars < 0 or args.kg_per_car < 0:
        raise ConfigError("--cars and --kg-per-car must be nonnegative")
    if args.volume_m3 <= 0:
        raise ConfigError("--volume-m3 must be positive")
    kg_year, kg_day = emissions.annual_fleet_estimate(
        args.cars, args.kg_per_car, args.airborne_frac
    )
    conc = emissions.steady_concentration(kg_year, args.volume_m3, args.ach)
    who = emissions.classify_who(conc, species="pm25", horizon="annual")
    print(f"airborne PM: {kg_year:.1f} kg/yr ({kg_day:.1f} kg/day)")
    print(f"steady concentration: {conc:.2f} ug/m^3")
    print(f"WHO annual PM2.5: {who.value}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.steps < 2:
        raise ConfigError(f"--steps must be >= 2, got {args.steps}")
    if not args.start < args.stop:
        raise ConfigError(f"--from must be < --to, got {args.start} >= {args.stop}")
    values = np.linspace(args.start, args.stop, args.steps).tolist()
    rows = emissions.sweep(
        args.axis, values,
        per_car_airborne_kg_year=args.per_car_kg_yr,
        cars=args.cars, volume_m3=args.volume_m3,
    )
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "sweep.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "concentration_ug_m3", "who_class"])
        for x, c, cls in rows:
            writer.writerow([repr(x), repr(c), cls.value])
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_ledger_audit(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args.seed)
    if cfg.ledger_mode == "off":
        cfg.ledger_mode = "sampled"
        cfg.ledger_sample_days = min(cfg.days, 5)
    result = run_scenario(cfg)
    dag = result.dag
    assert dag is not None
    replayed = dag.replay_balances()
    if replayed != dag.balances:
        print("AUDIT FAIL: replayed balances diverge from ledger state")
        return EXIT_RUNTIME
    total = sum(dag.balances.values())
    if total != dag.issuance:
        print(f"AUDIT FAIL: supply {total} != issuance {dag.issuance}")
        return EXIT_RUNTIME
    dag.topological_order()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dump_path = outdir / "ledger.txt"
    dump_path.write_text(dag.dump())
    print(
        f"audit ok: {len(dag.transactions)} transactions, "
        f"supply {total} conserved"
    )
    print(f"wrote {dump_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cityaccess",
        description="City access control simulator with tyre-PM accounting",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and emit CSVs")
    p_sim.add_argument("config", help="config JSON path or preset name (dublin, desk)")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--outdir", default=".")
    p_sim.set_defaults(func=cmd_simulate)

    p_pm = sub.add_parser("pm-estimate", help="fleet tyre-PM budget arithmetic")
    p_pm.add_argument("--cars", type=int, required=True)
    p_pm.add_argument("--kg-per-car", type=float, required=True)
    p_pm.add_argument("--airborne-frac", type=float, required=True)
    p_pm.add_argument("--volume-m3", type=float, required=True)
    p_pm.add_argument("--ach", type=float, default=1.0)
    p_pm.set_defaults(func=cmd_pm_estimate)

    p_sweep = sub.add_parser("sweep", help="concentration sweep over cars or volume")
    p_sweep.add_argument("--axis", choices=["cars", "volume"], required=True)
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--per-car-kg-yr", type=float, default=0.4)
    p_sweep.add_argument("--cars", type=float, default=170_000)
    p_sweep.add_argument("--volume-m3", type=float, default=450e6)
    p_sweep.add_argument("--outdir", default=".")
    p_sweep.set_defaults(func=cmd_sweep)

    p_audit = sub.add_parser("ledger-audit", help="run with ledger on and audit the DAG")
    p_audit.add_argument("config")
    p_audit.add_argument("--seed", type=int, default=None)
    p_audit.add_argument("--outdir", default=".")
    p_audit.set_defaults(func=cmd_ledger_audit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure, not a config problem
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
