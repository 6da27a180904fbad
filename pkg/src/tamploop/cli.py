"""Command-line entry point: plan, simulate, experiment, viewpoints, report.

Exit codes: 0 success, 1 infrastructure error, 2 no plan, 3 task failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PLAN = 2
EXIT_TASK_FAILED = 3
ENDPOINT_ENV = "TAMPLOOP_BACKEND_ENDPOINT"


def _die(msg: str, code: int = EXIT_ERROR) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_plan(args) -> int:
    from .pddl import NoPlanFound, SearchBudgetExceeded, parse_domain, parse_problem, solve

    domain = parse_domain(Path(args.domain).read_text())
    problem = parse_problem(Path(args.problem).read_text(), domain)
    try:
        plan = solve(domain, problem, mode=args.mode)
    except (NoPlanFound, SearchBudgetExceeded) as e:
        print(f"no plan: {e}")
        return EXIT_NO_PLAN
    for a in plan:
        print(f"({a.name} {' '.join(a.args)})")
    print(f"; {len(plan)} actions, {plan.expansions} expansions", file=sys.stderr)
    return EXIT_OK


def _make_backend(spec: str, rng, eps_p: float, eps_a: float):
    from .perception import ExternalBackend, GroundTruthBackend, NoisyBackend

    if spec == "truth":
        return GroundTruthBackend()
    if spec == "noisy":
        return NoisyBackend(rng, eps_p, eps_a)
    if spec == "external" or spec.startswith("external:"):
        endpoint = spec.partition(":")[2] or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ValueError(f"external backend needs an endpoint (external:<endpoint> or ${ENDPOINT_ENV})")
        return ExternalBackend(endpoint)
    raise ValueError(f"unknown backend {spec!r}; use truth, noisy or external:<endpoint>")


def cmd_simulate(args) -> int:
    from .executor import NO_PLAN, ExecutionBudget, run_task, write_log
    from .harness import trial_seed
    from .perception import parse_goal
    from .worldsim import read_scenario

    sc = read_scenario(args.scenario)
    world_seed, backend_seed = trial_seed(args.seed, sc.name, args.trial).spawn(2)
    world = sc.make_world(np.random.default_rng(world_seed))
    backend = _make_backend(args.backend, np.random.default_rng(backend_seed), args.eps_p, args.eps_a)
    try:
        goal = list(sc.problem.goal)
        if not goal:
            if not sc.goal_text:
                return _die(f"{sc.name} has neither a symbolic goal nor goal_text")
            goal = parse_goal(sc.goal_text, world.scene_graph(), sc.domain, backend)
            print(f"goal: {', '.join(map(str, goal))}")
        budget = ExecutionBudget(args.max_replans, args.viewpoint_budget, args.max_actions)
        r = run_task(world, sc.domain, goal, args.strategy, backend, budget, sc.table, log=bool(args.log))
    finally:
        backend.close()
    if args.log:
        write_log(r.log, args.log)
    summary = {
        "scenario": sc.name, "strategy": args.strategy, "seed": args.seed, "trial": args.trial,
        "success": r.success, "termination": r.termination, "actions": r.actions_executed,
        "replans": r.replans, "viewpoints": r.viewpoints_total,
        "situations": [f"{s}:{label}" for s, label in r.situations],
    }
    if args.json:
        print(json.dumps(summary))
    else:
        for k, v in summary.items():
            print(f"{k:12s} {v}")
    if r.success:
        return EXIT_OK
    return EXIT_NO_PLAN if r.termination == NO_PLAN else EXIT_TASK_FAILED


def _config(args):
    from .harness import ExperimentConfig

    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "parallel", None):
        cfg.parallel = args.parallel
    if getattr(args, "trials", None):
        cfg.trials_per_cell = args.trials
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    return cfg


def cmd_experiment(args) -> int:
    from .harness import emit_report, run_experiment

    cfg = _config(args)
    report = run_experiment(cfg)
    for ref, err in report.errors.items():
        print(f"skipped {ref}: {err}", file=sys.stderr)
    for p in emit_report(report, args.out, args.format):
        print(p)
    agg = report.aggregate()
    for st, rate in agg.strategy_means.items():
        print(f"{st:20s} {100 * rate:5.1f}%")
    return EXIT_ERROR if report.errors else EXIT_OK


def cmd_viewpoints(args) -> int:
    from .harness import compare_viewpoint_policies

    cfg = _config(args)
    rep = compare_viewpoint_policies(cfg)
    print(f"{'fixture':14s} {'ring':>4s} {'guided':>7s} {'greedy':>7s} {'acc(g)':>7s} {'acc(r)':>7s}")
    for f in rep.per_fixture():
        print(f"{f['fixture']:14s} {f['ring']:4d} {f['guided_mean']:7.2f} {f['greedy_mean']:7.2f} "
              f"{f['guided_accuracy']:7.2f} {f['greedy_accuracy']:7.2f}")
    print(f"mean viewpoints: guided {rep.guided_mean:.2f}, greedy {rep.greedy_mean:.2f} "
          f"over {len(rep.rows)} paired trials")
    return EXIT_OK


def cmd_report(args) -> int:
    from .harness import emit_report, read_rows

    rows = read_rows(args.rows)
    out = args.out or str(Path(args.rows).parent)
    for p in emit_report(rows, out, args.format):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .executor import Strategy

    ap = argparse.ArgumentParser(prog="tamploop", description="Closed-loop task planning with verified execution.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve a PDDL problem")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("--mode", choices=["greedy", "optimal"], default="greedy")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run one task in a simulated scenario")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--strategy", default="Full", choices=[s.value for s in Strategy])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--backend", default="noisy", help="truth, noisy, or external:<endpoint>")
    p.add_argument("--eps-p", type=float, default=0.1)
    p.add_argument("--eps-a", type=float, default=0.2)
    p.add_argument("--max-replans", type=int, default=20)
    p.add_argument("--viewpoint-budget", type=int, default=6)
    p.add_argument("--max-actions", type=int, default=200)
    p.add_argument("--log", help="write a JSON-lines execution log here")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a seeded experiment campaign")
    p.add_argument("config", help="config JSON file or bundled config name")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=None)
    p.add_argument("--trials", type=int, default=None, help="override trials per cell")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--format", nargs="+", choices=["csv", "markdown"], default=["csv", "markdown"])
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("viewpoints", help="compare guided and greedy viewpoint policies")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_viewpoints)

    p = sub.add_parser("report", help="re-aggregate a per-trial rows.csv")
    p.add_argument("rows")
    p.add_argument("--format", nargs="+", choices=["csv", "markdown"], default=["markdown"])
    p.add_argument("--out", help="output directory (default: next to rows.csv)")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    from .perception import BackendError
    from .pddl import PDDLError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, PDDLError, BackendError) as e:
        return _die(str(e))


if __name__ == "__main__":
    sys.exit(main())
