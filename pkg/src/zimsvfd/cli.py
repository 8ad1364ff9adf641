"""Command line entry point: ``zimsvfd run`` and ``zimsvfd validate``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .frame_timing import DelayExtrema, FrameTiming, TimingError, validate_timing
from .runner import (EXPERIMENTS, ConfigError, full_scale_warning, load_config,
                     run_experiment)


def build_parser():
    p = argparse.ArgumentParser(prog="zimsvfd", description="ZIMS two-way OFDM link simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment and write CSV results")
    run.add_argument("--config", required=True, help="INI experiment config")
    run.add_argument("--experiment", choices=EXPERIMENTS, help="override the experiment id")
    run.add_argument("--seed", type=int, help="master seed (drawn from entropy if omitted)")
    run.add_argument("--trials", type=int, help="number of Monte-Carlo trials")
    run.add_argument("--scale", type=int, help="simulated subcarrier count 2N")
    run.add_argument("--full-scale", action="store_true",
                     help="simulate the full reference subcarrier count (slow)")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--output", help="CSV path (default: stdout)")
    run.add_argument("--format", choices=("csv",), default=None)

    val = sub.add_parser("validate", help="check the timing conditions of a config")
    val.add_argument("--config", required=True, help="INI experiment config")
    val.add_argument("--t-zero", type=float, help="zero-interval length in seconds")
    val.add_argument("--t-data", type=float, help="data-interval length in seconds")
    return p


def _apply_overrides(cfg, args):
    if args.experiment and args.experiment != cfg.experiment:
        from .runner import PRESETS
        # switching experiment re-reads the preset defaults for that id
        cfg = replace(cfg, experiment=args.experiment, **PRESETS.get(args.experiment, {}))
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.output is not None:
        changes["output"] = args.output
    if args.format is not None:
        changes["fmt"] = args.format
    if args.scale is not None:
        changes["two_n"] = args.scale
    if args.full_scale:
        changes["two_n"] = None
    return replace(cfg, **changes)


def cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.two_n is None or cfg.two_n >= max(cfg.two_n_ref) >= 2048:
        full_scale_warning(cfg)
    table = run_experiment(cfg, progress=lambda msg: print(msg, file=sys.stderr))
    print(f"seed: {table.seed}", file=sys.stderr)
    if cfg.output:
        table.write(cfg.output)
        print(f"wrote {len(table.rows)} rows to {cfg.output}", file=sys.stderr)
    else:
        sys.stdout.write(table.to_csv())
    return 0


def cmd_validate(args):
    cfg = load_config(args.config)
    worst = DelayExtrema.worst_case(cfg.tau_max)
    t_zero = args.t_zero if args.t_zero is not None else cfg.extra.get("t_zero")
    t_data = args.t_data if args.t_data is not None else cfg.extra.get("t_data")
    ok = True
    if t_zero is not None:
        delta_f = 1.0 / t_data if t_data is not None else cfg.bandwidth / cfg.two_n_ref[0]
        n_half = cfg.sim_two_n(cfg.two_n_ref[0]) // 2
        t = FrameTiming(delta_f, n_half, t_zero, cfg.t_trans)
        rep = validate_timing(t, worst)
        print(f"T_D={t.t_data:.4e} s  T_Z={t.t_zero:.4e} s  delta={t.t_trans:.4e} s  "
              f"tau_max={cfg.tau_max:.4e} s  alpha={t.alpha:.4f}")
        print(rep.format())
        ok = rep.ok
    else:
        for ref in cfg.two_n_ref:
            for a in cfg.alpha:
                rep = validate_timing(cfg.timing(ref, a), worst)
                print(f"2N_ref={ref} alpha={a}")
                print(rep.format())
                ok = ok and rep.ok
    return 0 if ok else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_validate(args)
    except (ConfigError, TimingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
