"""Command-line experiment runner.

Subcommands: simulate, predict, control, oracle-check, husimi, sweep.
Exit code 0 on success, 2 on configuration errors, 3 on numerical-sanity
failures (norm drift), 1 on a failed oracle battery.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, control, experiment, oracles
from .experiment import ConfigError, fmt, load_config


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    result = experiment.run(cfg, figures=not args.no_figures)
    print(f"wrote {len(result.files)} files to {cfg.output}")
    return 0


def cmd_predict(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    for line in experiment._prediction_lines(cfg):
        print(line)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        experiment.write_csv(
            out / "predictions.csv",
            ["quantity", "value"],
            ([k, v] for k, v in experiment._prediction_pairs(cfg, None)),
        )
        (out / "prediction_report.txt").write_text(
            "\n".join(experiment._prediction_lines(cfg)) + "\n"
        )
        print(f"wrote prediction files to {out}")
    return 0


def cmd_control(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    chain_cfg = cfg.chain
    if args.preset in ("freeze", "simultaneous") and args.target is None:
        raise ConfigError(f"control: --target is required for the {args.preset} preset")
    try:
        if args.preset == "one-way":
            schedule = control.schedule_one_way(chain_cfg, args.blocked, args.duration)
        elif args.preset == "freeze":
            schedule = control.schedule_freeze(
                chain_cfg, args.target, hold_until=cfg.kicks, timing=args.timing
            )
        else:
            schedule = control.schedule_simultaneous(chain_cfg, args.target, hold_until=cfg.kicks)
    except ValueError as exc:
        raise ConfigError(f"control: {exc}") from exc
    cfg.schedule = schedule
    cfg.bath = None
    if args.no_disturb:
        cfg.disturbance = None
    if args.schedule_only:
        cfg.output.mkdir(parents=True, exist_ok=True)
        sched_path = cfg.output / "schedule.txt"
        sched_path.write_text(control.serialize_schedule(schedule))
        print(f"schedule written to {sched_path}")
        return 0
    result = experiment.run(cfg, figures=not args.no_figures)
    print(f"wrote {len(result.files)} files to {cfg.output} (schedule.txt included)")
    return 0


def cmd_oracle_check(args) -> int:
    report = oracles.simulator_battery()
    worst = 0.0
    for name, dev in report.items():
        print(f"{name:38s} max deviation {fmt(dev)}")
        worst = max(worst, dev)
    print(f"{'WORST':38s} {fmt(worst)}")
    if worst > args.tolerance:
        print(f"FAIL: worst deviation exceeds {fmt(args.tolerance)}", file=sys.stderr)
        return 1
    print("all oracle equivalences hold")
    return 0


def cmd_husimi(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    if args.kicks is not None:
        cfg.husimi_at = tuple(_parse_int_list(args.kicks))
    if args.spins is not None:
        cfg.husimi_spins = tuple(_parse_int_list(args.spins))
    for i in cfg.husimi_at:
        if not 0 <= i <= cfg.kicks:
            raise ConfigError(f"husimi: kick index {i} outside 0..{cfg.kicks}")
    for s in cfg.husimi_spins:
        if not 1 <= s <= cfg.chain.n_spins:
            raise ConfigError(f"husimi: spin {s} outside 1..{cfg.chain.n_spins}")
    if not cfg.husimi_at:
        raise ConfigError("husimi: no kick indices requested (run.husimi_at or --kicks)")
    cfg.observables = ("population", "coherence", "entropy")
    result = experiment.run(cfg, figures=not args.no_figures)
    wrote = [p for p in result.files if "husimi" in p.name]
    print(f"wrote {len(wrote)} husimi exports to {cfg.output}")
    return 0


def _sweep_one(payload) -> str:
    config_path, dotted, value, no_figures = payload
    cfg = load_config(config_path, {dotted: value})
    tag = str(value).replace("/", "_")
    cfg.output = cfg.output / f"{dotted.split('.')[-1]}={tag}"
    experiment.run(cfg, figures=not no_figures)
    return str(cfg.output)


def cmd_sweep(args) -> int:
    dotted, _, values_text = args.set.partition("=")
    if not values_text:
        raise ConfigError("sweep: --set must look like section.key=v1,v2,...")
    values = []
    for tok in values_text.split(","):
        tok = tok.strip()
        try:
            values.append(int(tok))
        except ValueError:
            try:
                values.append(float(tok))
            except ValueError:
                values.append(tok)
    payloads = [(args.config, dotted, v, args.no_figures) for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for out in pool.map(_sweep_one, payloads):
                print(f"done: {out}")
    else:
        for p in payloads:
            print(f"done: {_sweep_one(p)}")
    return 0


def _overrides(args) -> dict:
    out = {}
    for item in getattr(args, "override", None) or []:
        dotted, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"--override {item!r} must look like section.key=value")
        try:
            out[dotted] = int(value)
        except ValueError:
            try:
                out[dotted] = float(value)
            except ValueError:
                out[dotted] = value
    if getattr(args, "overwrite", False):
        out["run.overwrite"] = True
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kickedchain",
        description="Kicked spin chain simulator with chaotic torus kick baths",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("config", help="experiment TOML file")
        p.add_argument(
            "--override",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
        p.add_argument("--overwrite", action="store_true", help="replace existing outputs")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p = sub.add_parser("simulate", help="run one experiment and write the output bundle")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="print horizon and transmission predictions")
    add_common(p)
    p.add_argument("--output", help="also write prediction files to this directory")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("control", help="build a control schedule preset and simulate it")
    add_common(p)
    p.add_argument("--preset", required=True, choices=["one-way", "freeze", "simultaneous"])
    p.add_argument("--target", type=int, default=None, help="target spin for freeze presets")
    p.add_argument("--blocked", type=int, default=None, help="blocked spin for one-way")
    p.add_argument("--duration", type=int, default=None, help="one-way block length in kicks")
    p.add_argument(
        "--timing",
        choices=["simulated", "predicted"],
        default="simulated",
        help="freeze start times: self-consistent simulation or period algebra",
    )
    p.add_argument("--no-disturb", action="store_true", help="ignore the disturbance section")
    p.add_argument("--schedule-only", action="store_true", help="write the schedule and stop")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("oracle-check", help="run the closed-form equivalence battery")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("husimi", help="export Husimi grids and disks at chosen kicks")
    add_common(p)
    p.add_argument("--kicks", help="comma-separated kick indices")
    p.add_argument("--spins", help="comma-separated spin indices (default: all)")
    p.set_defaults(func=cmd_husimi)

    p = sub.add_parser("sweep", help="fan one config across parameter values")
    add_common(p)
    p.add_argument("--set", required=True, metavar="SECTION.KEY=V1,V2,...")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"numerical sanity failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
