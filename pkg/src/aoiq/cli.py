"""Command-line front end.

Subcommands::

    aoiq solve      --config net.json          exact average age of a network
    aoiq simulate   --config net.json [...]    discrete-event estimate / trace
    aoiq bound      --config net.json          closed-form upper bound
    aoiq game       --config game.json [...]   routing equilibrium solvers
    aoiq experiment run <name> [...]           run a registered CSV sweep
    aoiq experiment list [--json]              show the registry

Network configs are JSON objects with ``sources`` (rates), ``servers``
(``{"mu", "theta", "buffer"}``) and ``routing`` (one probability row per
source).  Game configs carry ``lambdas``/``mus``/``n_buffer`` plus the
optional ``alpha``/``tol``/``max_iter`` (or ``ratios`` for the
large-population solver).  Errors exit nonzero with a one-line JSON
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments
from . import sim
from .bounds import BoundInput, upper_bound
from .game import GameSpec, finite_n_equilibrium, mean_field_routing, mean_field_solve
from .models import QueueNetworkSpec, build_network_model, kind_of
from .shs import average_aoi


def _load_json(path: str) -> dict:
    with open(path) as handle:
        return json.load(handle)


def _cmd_solve(args: argparse.Namespace) -> int:
    spec = QueueNetworkSpec.load(args.config)
    model = build_network_model(spec)
    solution = average_aoi(model)
    kind = kind_of(spec)
    print(f"sources: {spec.num_sources}, servers: {spec.num_servers}"
          + (f" ({kind.value})" if kind else ""))
    print(f"states: {model.num_states}, transitions: {len(model.transitions)}")
    print(f"average age: {solution.average_aoi!r}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = QueueNetworkSpec.load(args.config)
    config = sim.SimConfig(
        spec,
        horizon=args.horizon,
        warmup=args.warmup,
        replications=args.replications,
        seed=args.seed,
    )
    if args.trace is not None:
        sys.stdout.write(sim.format_trace(sim.trace(config, max_events=args.trace)))
        return 0
    report = sim.simulate(config, engine=args.engine, workers=args.workers)
    counts = report.counts
    print(f"mean age: {report.mean_aoi!r}")
    print(f"ci95 halfwidth: {report.ci95_halfwidth!r}")
    print(f"replications used: {len(report.per_rep)} (excluded: {report.excluded})")
    print(
        "events: "
        f"arrivals={counts.arrivals}, deliveries={counts.deliveries}, "
        f"losses={counts.losses}, preemptions={counts.preemptions}, "
        f"replacements={counts.replacements}"
    )
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    spec = QueueNetworkSpec.load(args.config)
    value = upper_bound(BoundInput.from_network(spec))
    print(f"upper bound: {value!r}")
    return 0


def _cmd_game(args: argparse.Namespace) -> int:
    config = _load_json(args.config)
    if args.mean_field:
        result = mean_field_solve(
            config["ratios"],
            alpha=config.get("alpha"),
            tol=config.get("tol", 1e-10),
            max_iter=config.get("max_iter", 100_000),
        )
        status = "converged" if result.converged else "did not converge"
        print(f"{status} after {result.iterations} iterations "
              f"(residual {result.residuals[-1]:.3e})")
        print(f"y: {np.array2string(result.state.y, precision=10)}")
        print(f"m: {np.array2string(result.state.m, precision=10)}")
        print(f"routing: {np.array2string(mean_field_routing(result.state), precision=10)}")
        return 0 if result.converged else 3
    spec = GameSpec.from_dict(config)
    result = finite_n_equilibrium(
        spec,
        alpha=config.get("alpha", 0.5),
        tol=config.get("tol", 1e-10),
        max_iter=config.get("max_iter", 100_000),
    )
    status = "converged" if result.converged else "did not converge"
    print(f"{status} after {result.iterations} iterations "
          f"(residual {result.residuals[-1]:.3e})")
    for i, row in enumerate(result.routing):
        print(f"p_{i + 1}: {np.array2string(row, precision=10)}")
    return 0 if result.converged else 3


def _cmd_experiment_run(args: argparse.Namespace) -> int:
    registry = experiments.default_experiments()
    if args.name not in registry:
        raise ValueError(
            f"unknown experiment {args.name!r}; valid names: "
            + ", ".join(registry)
        )
    spec = registry[args.name]
    output = args.output
    if args.config:
        overrides = _load_json(args.config)
        params = dict(spec.params)
        params.update(overrides.get("params", {}))
        params.update({
            k: v for k, v in overrides.items()
            if k not in ("name", "kind", "output", "params")
        })
        spec = experiments.ExperimentSpec(
            name=spec.name, kind=spec.kind, params=params,
            output=overrides.get("output", spec.output),
        )
    path, summary = experiments.run(
        spec, output=output, seed=args.seed, workers=args.workers
    )
    print(f"wrote {path}")
    print(summary)
    return 0


def _cmd_experiment_list(args: argparse.Namespace) -> int:
    listing = experiments.list_experiments()
    if args.json:
        print(json.dumps(
            [{"name": name, "description": desc} for name, desc in listing]
        ))
    else:
        for name, desc in listing:
            print(f"{name:18} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoiq",
        description="Average age of information for parallel lossy queues.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="exact average age of a network config")
    solve.add_argument("--config", required=True, help="network JSON file")
    solve.set_defaults(func=_cmd_solve)

    simulate = sub.add_parser("simulate", help="discrete-event age estimate")
    simulate.add_argument("--config", required=True, help="network JSON file")
    simulate.add_argument("--horizon", type=float, default=1e5)
    simulate.add_argument("--warmup", type=float, default=0.1)
    simulate.add_argument("--replications", type=int, default=20)
    simulate.add_argument("--seed", type=int, default=42)
    simulate.add_argument("--engine", default="auto",
                          choices=("auto", "python", "kernel"))
    simulate.add_argument("--workers", type=int, default=1)
    simulate.add_argument("--trace", type=int, default=None, metavar="N",
                          help="print the first N events instead of simulating")
    simulate.set_defaults(func=_cmd_simulate)

    bound = sub.add_parser("bound", help="closed-form age upper bound")
    bound.add_argument("--config", required=True, help="network JSON file")
    bound.set_defaults(func=_cmd_bound)

    game = sub.add_parser("game", help="routing equilibrium solvers")
    game.add_argument("--config", required=True, help="game JSON file")
    game.add_argument("--mean-field", action="store_true",
                      help="solve the large-population equations (needs 'ratios')")
    game.set_defaults(func=_cmd_game)

    experiment = sub.add_parser("experiment", help="CSV sweeps")
    exp_sub = experiment.add_subparsers(dest="experiment_command", required=True)
    run = exp_sub.add_parser("run", help="run a registered experiment")
    run.add_argument("name")
    run.add_argument("--config", help="JSON file overriding parameters")
    run.add_argument("--output", help="CSV output path")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_cmd_experiment_run)
    listing = exp_sub.add_parser("list", help="list registered experiments")
    listing.add_argument("--json", action="store_true")
    listing.set_defaults(func=_cmd_experiment_list)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        json.dump({"error": f"{type(exc).__name__}: {exc}"}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
