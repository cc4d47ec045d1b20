"""Command-line surface.

Exit codes: 0 ok, 1 configuration error, 2 invariant violation in debug
mode, 3 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys

import yaml

from . import harness
from .env import FIXTURE_NAMES, fixture
from .errors import ConfigError, InvariantViolationError, SimulationError


def _load(args) -> harness.ExperimentConfig:
    overrides = args.set or []
    if args.preset:
        cfg = harness.preset_config(args.preset)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not section.field=value")
            dotted, _, value = item.partition("=")
            cfg = harness._replace_field(cfg, dotted, yaml.safe_load(value))
        return cfg
    if not args.config:
        raise ConfigError("either --config or --preset is required")
    return harness.load_config(args.config, overrides)


def _cmd_run(args) -> int:
    cfg = _load(args)
    results = harness.run_experiment(cfg, debug=args.debug_invariants)
    out = args.out or cfg.run.out
    if out:
        if os.path.isdir(out) or out.endswith(os.sep):
            os.makedirs(out, exist_ok=True)
            out = os.path.join(out, "results.csv")
        harness.export_csv(results, out)
        print(f"wrote {out}")
    for res in results:
        print(f"run {res.run_id}: seed={res.seed} regret={res.final_regret:.3f} "
              f"cost={res.final_cost:.3f} target_fraction={res.target_fraction:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    values = []
    for chunk in args.values.split(","):
        chunk = chunk.strip()
        values.append(float(chunk) if "." in chunk or "e" in chunk else int(chunk))
    rows = harness.sweep(cfg, args.axis, values, debug=args.debug_invariants)
    if args.out:
        harness.export_sweep_csv(rows, args.out)
        print(f"wrote {args.out}")
    else:
        for row in rows:
            print(row)
    return 0


def _cmd_fixtures(args) -> int:
    if args.list:
        for name in FIXTURE_NAMES:
            inst = fixture(name)
            kind = "homogeneous" if inst.is_homogeneous else "heterogeneous"
            print(f"{name}: K={inst.K} M={inst.M} sigma={inst.sigma} b={inst.b} ({kind})")
    return 0


def _cmd_bounds(args) -> int:
    cfg = _load(args)
    res = harness.simulate_bounds(cfg)
    for key, value in res.items():
        print(f"{key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopbandits",
                                     description="Cooperative bandit attack simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--preset", help="named preset configuration")
        p.add_argument("--set", action="append", metavar="sec.field=value",
                       help="override a config field (repeatable)")
        p.add_argument("--debug-invariants", action="store_true",
                       help="assert attack invariants every round")

    run_p = sub.add_parser("run", help="run an experiment")
    common(run_p)
    run_p.add_argument("--out", help="CSV output file or directory")
    run_p.set_defaults(fn=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run an experiment per axis value")
    common(sweep_p)
    sweep_p.add_argument("--axis", required=True, help="numeric field, e.g. run.horizon")
    sweep_p.add_argument("--values", required=True, help="comma separated values")
    sweep_p.add_argument("--out", help="summary CSV output file")
    sweep_p.set_defaults(fn=_cmd_sweep)

    fix_p = sub.add_parser("fixtures", help="inspect canonical instances")
    fix_p.add_argument("--list", action="store_true")
    fix_p.set_defaults(fn=_cmd_fixtures)

    bounds_p = sub.add_parser("bounds", help="print theoretical bound values")
    common(bounds_p)
    bounds_p.set_defaults(fn=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
