"""Command line interface: run one episode, drive a sweep, emit scenarios."""
from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .scenarios import UncertaintyConfig, build_elevator, build_fig1_micro, build_office
from .strips import serialize_scenario


def _add_episode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", choices=bench.DOMAINS, required=True)
    p.add_argument("--uncertainty-amount", type=int, default=2, dest="amount")
    p.add_argument("--likelihood", choices=("uniform", "decay75", "decay50"),
                   default="uniform")
    p.add_argument("--seed", type=int, default=0)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="portalplan")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single episode")
    _add_episode_flags(run_p)
    run_p.add_argument("--algo", choices=bench.ALGOS, required=True)
    budget = run_p.add_mutually_exclusive_group()
    budget.add_argument("--budget-secs", type=float)
    budget.add_argument("--budget-iters", type=int)
    run_p.add_argument("--particles", type=int, default=bench.DEFAULT_PARTICLES)
    run_p.add_argument("--step-cap", type=int, default=bench.DEFAULT_STEP_CAP)
    run_p.add_argument("--trace", action="store_true", help="print one line per executed step")
    run_p.add_argument("--debug", action="store_true", help="verbose planner/search diagnostics")

    sweep_p = sub.add_parser("sweep", help="run a grid of episodes from a config file")
    sweep_p.add_argument("--config", help="sweep config file (key: value lists)")
    sweep_p.add_argument("--preset", choices=("algorithm", "time"),
                         help="use a canned comparison grid instead of a config file")
    sweep_p.add_argument("--seeds", type=int, default=50, help="seed count for presets")
    sweep_p.add_argument("--out", required=True, help="CSV output path")
    sweep_p.add_argument("--workers", type=int, default=1)

    emit_p = sub.add_parser("emit-scenario", help="print a built scenario file")
    _add_episode_flags(emit_p)
    emit_p.add_argument("--out", help="write to a file instead of stdout")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "debug", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "run":
        if args.budget_secs is None and args.budget_iters is None and args.algo != "ffreplan":
            parser.error("--budget-secs or --budget-iters required for this algorithm")
        mode = "iters" if args.budget_iters is not None else "secs"
        budget_value = args.budget_iters if args.budget_iters is not None else (args.budget_secs or 0.0)
        cfg = bench.EpisodeConfig(domain=args.domain, algo=args.algo, budget_mode=mode,
                                  budget=float(budget_value), amount=args.amount,
                                  likelihood=args.likelihood, particles=args.particles,
                                  seed=args.seed, step_cap=args.step_cap)
        record, trace = bench.run_episode(cfg)
        if args.trace:
            for line in trace:
                print(line)
        print(f"domain={record.domain} algo={record.algo} seed={record.seed} "
              f"steps={record.steps} goal={str(record.goal).lower()} "
              f"planning_secs={record.planning_secs:.3f} plans={record.plans_generated}")
        return 0

    if args.command == "sweep":
        if bool(args.config) == bool(args.preset):
            parser.error("exactly one of --config / --preset is required")
        if args.config:
            with open(args.config) as fh:
                cfgs = bench.parse_sweep_config(fh.read())
        elif args.preset == "algorithm":
            cfgs = bench.expand_algorithm_comparison(seeds=range(args.seeds))
        else:
            cfgs = bench.expand_time_comparison(seeds=range(args.seeds))
        done = 0

        def progress(_record):
            nonlocal done
            done += 1
            if done % 10 == 0 or done == len(cfgs):
                print(f"{done}/{len(cfgs)} episodes complete", file=sys.stderr)

        records = bench.run_sweep(cfgs, workers=args.workers, on_result=progress)
        bench.write_results(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
        return 0

    if args.command == "emit-scenario":
        if args.domain == "micro":
            spec = build_fig1_micro()
        else:
            uc = UncertaintyConfig(args.amount, args.likelihood, seed=args.seed)
            spec = build_office(uc) if args.domain == "office" else build_elevator(uc)
        text = serialize_scenario(spec)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
