"""Command-line entry point for the experiment harness."""

import argparse
import sys
from dataclasses import replace

from .attack_optim import SolverError
from .harness import SCENARIOS, ExperimentSpec, load_spec_file, run_experiment
from .simplex import NonConvergenceError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcmimo",
        description="Massive-MIMO pilot-contamination attack experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its CSV")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--config", help="TOML manifest; CLI flags override its values")
    run.add_argument("--seed", type=int)
    run.add_argument("--realizations", type=int)
    run.add_argument("--scale", choices=["desk", "paper"])
    run.add_argument("--unit", choices=["se", "mbps"])
    run.add_argument("--out")

    sub.add_parser("list-scenarios", help="print the scenario catalog")

    val = sub.add_parser("validate-config", help="parse a manifest and echo the resolved spec")
    val.add_argument("--config", required=True)
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    if args.config:
        spec = load_spec_file(args.config)
        if spec.scenario != args.scenario:
            spec = replace(spec, scenario=args.scenario)
    else:
        spec = ExperimentSpec(scenario=args.scenario)
    overrides = {}
    for name in ("seed", "realizations", "scale", "unit", "out"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return replace(spec, **overrides) if overrides else spec


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-scenarios":
        for name in sorted(SCENARIOS):
            print(f"{name}: {SCENARIOS[name].description}")
        return 0

    if args.command == "validate-config":
        try:
            spec = load_spec_file(args.config)
        except (OSError, ValueError) as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 2
        print(spec)
        return 0

    try:
        spec = _spec_from_args(args)
        rows = run_experiment(spec)
    except (SolverError, NonConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = spec.out or f"{spec.scenario}.csv"
    print(f"{len(rows)} rows -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
