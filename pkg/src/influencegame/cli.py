"""Command-line front end: scenario files in, solver runs and trace files out.

Subcommands
    simulate     hybrid opinion trajectory for a scenario and a plans file
    solve        single-player optimal investment (writes a solve report)
    equilibrate  multiplayer no-regret run (writes trace CSV + result JSON)
    verify       property suites (stochasticity, convexity, gradients, oracles)

Exit codes: 0 ok, 1 verify failure, 2 parse error, 3 infeasible plans,
4 wrong mode (single- vs multi-player), 5 hypothesis-check failure.
All files are written atomically; a failed run never leaves partial output.
The environment variable INFLUENCE_GAME_SEED overrides the scenario seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    HypothesisCheckError,
    InfeasiblePlanError,
    ScenarioError,
)
from .equilibrium_solver import (
    StepSchedule,
    default_step_schedule,
    result_to_json,
    solve_equilibrium,
    trace_to_csv,
)
from .fileio import atomic_write_text
from .game_model import BudgetPlan, GameSpec, StageUtility
from .opinion_dynamics import CampaignSchedule, OpinionState, build_network, simulate_trajectory
from .single_player_solver import solve_single
from .verification import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILURE = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_WRONG_MODE = 4
EXIT_HYPOTHESIS = 5

SEED_ENV_VAR = "INFLUENCE_GAME_SEED"

_TOLERANCE_KEYS = ("step_norm", "projection", "best_response")


@dataclass(frozen=True)
class SolverSettings:
    T: int = 100
    step: StepSchedule | None = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    spec: GameSpec
    solver: SolverSettings


def _strict_keys(mapping: dict, allowed, required, context: str):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown keys {unknown} in {context}")
    missing = sorted(set(required) - set(mapping))
    if missing:
        raise ScenarioError(f"missing keys {missing} in {context}")


def scenario_from_dict(document: dict) -> Scenario:
    """Parse a scenario document; unknown keys are rejected to surface typos."""
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object")
    _strict_keys(document, ("network", "schedule", "players", "x0", "solver"),
                 ("network", "schedule", "players", "x0"), "scenario")
    try:
        network = build_network(np.asarray(document["network"], dtype=float))
        schedule = CampaignSchedule(times=np.asarray(document["schedule"], dtype=float))
        x0 = OpinionState(np.asarray(document["x0"], dtype=float))
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc

    players = document["players"]
    if not isinstance(players, list) or not players:
        raise ScenarioError("players must be a nonempty list")
    budgets, utilities = [], []
    for idx, player in enumerate(players):
        _strict_keys(player, ("budget", "utility"), ("budget", "utility"),
                     f"players[{idx}]")
        utility_doc = player["utility"]
        _strict_keys(utility_doc, ("kind", "rho", "lambda"), ("kind", "rho", "lambda"),
                     f"players[{idx}].utility")
        kind = utility_doc["kind"]
        if kind not in ("linear-favor", "linear-complement"):
            raise ScenarioError(
                f"players[{idx}].utility.kind must be linear-favor or linear-complement"
            )
        try:
            utilities.append(StageUtility(
                kind=kind,
                rho=np.asarray(utility_doc["rho"], dtype=float),
                cost_coefficient=float(utility_doc["lambda"]),
            ))
            budgets.append(float(player["budget"]))
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"players[{idx}]: {exc}") from exc

    solver_doc = document.get("solver", {})
    _strict_keys(solver_doc, ("T", "step", "seed", "tolerances"), (), "solver")
    step = None
    if "step" in solver_doc:
        step_doc = solver_doc["step"]
        _strict_keys(step_doc, ("kind", "c"), ("kind", "c"), "solver.step")
        try:
            step = StepSchedule(kind=step_doc["kind"], c=float(step_doc["c"]))
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
    tolerances = dict(solver_doc.get("tolerances", {}))
    _strict_keys(tolerances, _TOLERANCE_KEYS, (), "solver.tolerances")

    try:
        spec = GameSpec(network=network, schedule=schedule, x0=x0,
                        budgets=np.asarray(budgets), utilities=tuple(utilities))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    seed = int(solver_doc.get("seed", 0))
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ScenarioError(f"{SEED_ENV_VAR} must be an integer") from exc
    settings = SolverSettings(
        T=int(solver_doc.get("T", 100)),
        step=step,
        seed=seed,
        tolerances={k: float(v) for k, v in tolerances.items()},
    )
    return Scenario(spec=spec, solver=settings)


def scenario_to_dict(scenario: Scenario) -> dict:
    spec = scenario.spec
    players = []
    for j, utility in enumerate(spec.utilities):
        if utility.kind == "custom":
            raise ScenarioError("custom utilities cannot be serialized to a scenario file")
        players.append({
            "budget": float(spec.budgets[j]),
            "utility": {
                "kind": utility.kind,
                "rho": utility.rho.tolist(),
                "lambda": float(utility.cost_coefficient),
            },
        })
    step = scenario.solver.step or default_step_schedule(spec)
    return {
        "network": spec.network.adjacency.tolist(),
        "schedule": spec.schedule.times.tolist(),
        "players": players,
        "x0": spec.x0.values.tolist(),
        "solver": {
            "T": scenario.solver.T,
            "step": {"kind": step.kind, "c": step.c},
            "seed": scenario.solver.seed,
            "tolerances": dict(scenario.solver.tolerances),
        },
    }


def load_scenario(path) -> Scenario:
    try:
        with open(path) as handle:
            document = json.load(handle)
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(document)


def reference_scenario() -> Scenario:
    """Built-in two-player configuration: three individuals on a path, two
    campaigns at t = 1, 2 on a [0, 3] horizon, budgets 3 and 5, unit opinion
    weights and unit advertising costs, everyone starting undecided at 1/2."""
    adjacency = np.array([
        [2 / 3, 1 / 3, 0.0],
        [1 / 3, 1 / 3, 1 / 3],
        [0.0, 1 / 3, 2 / 3],
    ])
    rho = np.ones((3, 3))
    spec = GameSpec(
        network=build_network(adjacency),
        schedule=CampaignSchedule(times=np.array([0.0, 1.0, 2.0, 3.0])),
        x0=OpinionState(np.full((3, 2), 0.5)),
        budgets=np.array([3.0, 5.0]),
        utilities=(
            StageUtility(kind="linear-favor", rho=rho, cost_coefficient=1.0),
            StageUtility(kind="linear-favor", rho=rho, cost_coefficient=1.0),
        ),
    )
    seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    return Scenario(
        spec=spec,
        solver=SolverSettings(T=100, step=StepSchedule(kind="c_over_tau", c=10.0), seed=seed),
    )


def load_plans(path, spec: GameSpec) -> list[BudgetPlan]:
    try:
        with open(path) as handle:
            document = json.load(handle)
    except FileNotFoundError as exc:
        raise ScenarioError(f"plans file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(document, dict):
        raise ScenarioError("plans file must be a JSON object")
    _strict_keys(document, ("plans",), ("plans",), "plans file")
    entries = document["plans"]
    if not isinstance(entries, list) or len(entries) != spec.m:
        raise ScenarioError(f"plans file must list one K x n matrix per player ({spec.m})")
    plans = []
    for j, matrix in enumerate(entries):
        arr = np.asarray(matrix, dtype=float)
        if arr.shape != (spec.K, spec.n):
            raise ScenarioError(
                f"plan {j} must be shaped ({spec.K}, {spec.n}), got {arr.shape}"
            )
        plans.append(BudgetPlan(player=j, entries=arr, budget_cap=float(spec.budgets[j])))
    return plans


def _trajectory_csv(points) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["time", "individual", "player", "opinion"])
    for point in points:
        values = point.state.values
        for i in range(values.shape[0]):
            for j in range(values.shape[1]):
                writer.writerow([repr(point.time), i, j, repr(float(values[i, j]))])
    return buffer.getvalue()


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = scenario.spec
    plans = load_plans(args.plans, spec)
    samples = np.linspace(spec.schedule.t0, spec.schedule.tf, args.samples)
    points = simulate_trajectory(spec.network, spec.schedule, spec.x0, plans, samples)
    atomic_write_text(args.out, _trajectory_csv(points))
    print(f"wrote {len(points)} trajectory records to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = scenario.spec
    if spec.m != 1:
        print("solve handles single-player scenarios; use `equilibrate` for "
              f"this {spec.m}-player game", file=sys.stderr)
        return EXIT_WRONG_MODE
    tolerances = scenario.solver.tolerances
    report = solve_single(
        spec,
        tol=tolerances.get("step_norm", 1e-8),
        projection_tol=tolerances.get("projection", 1e-12),
    )
    document = {
        "plan": report.plan.entries.tolist(),
        "objective": report.objective,
        "iterations": report.iterations,
        "final_step_norm": report.final_step_norm,
        "kkt_residual": report.kkt_residual,
    }
    atomic_write_text(args.out, json.dumps(document, indent=2, sort_keys=True) + "\n")
    print(f"objective {report.objective!r} after {report.iterations} iterations "
          f"(kkt residual {report.kkt_residual:.3e})")
    return EXIT_OK


def cmd_equilibrate(args) -> int:
    if args.paper_example == (args.scenario is not None):
        raise ScenarioError("provide either a scenario file or --paper-example")
    scenario = reference_scenario() if args.paper_example else load_scenario(args.scenario)
    spec = scenario.spec
    if spec.m < 2:
        print("equilibrate handles multiplayer scenarios; use `solve` for "
              "single-player games", file=sys.stderr)
        return EXIT_WRONG_MODE
    T = args.T if args.T is not None else scenario.solver.T
    step = scenario.solver.step or default_step_schedule(spec)
    trace, result = solve_equilibrium(spec, T, step_schedule=step,
                                      seed=scenario.solver.seed)
    trace_path = f"{args.out}_trace.csv"
    result_path = f"{args.out}_result.json"
    atomic_write_text(trace_path, trace_to_csv(trace))
    atomic_write_text(result_path, result_to_json(result))
    print(f"exploitability of averaged profile: {result.exploitability:.6e}")
    for j in range(spec.m):
        regret_value = float(result.regrets[j])
        print(f"player {j}: regret {regret_value:.6e} "
              f"({regret_value / T:.6e} per iteration)")
    print(f"wrote {trace_path} and {result_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_suite(args.suite, seed=args.seed)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    print(text, end="")
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="influence-game",
        description="Budget allocation and open-loop equilibria for "
                    "influence games over social networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="sample a hybrid opinion trajectory")
    simulate.add_argument("scenario", help="scenario JSON file")
    simulate.add_argument("plans", help="plans JSON file ({\"plans\": [K x n, ...]})")
    simulate.add_argument("--samples", type=int, default=100,
                          help="number of evenly spaced sample times")
    simulate.add_argument("--out", required=True, help="output CSV path")
    simulate.set_defaults(handler=cmd_simulate)

    solve = sub.add_parser("solve", help="single-player optimal investment")
    solve.add_argument("scenario", help="scenario JSON file (single player)")
    solve.add_argument("--out", required=True, help="solve report JSON path")
    solve.set_defaults(handler=cmd_solve)

    equilibrate = sub.add_parser("equilibrate",
                                 help="multiplayer no-regret equilibrium run")
    equilibrate.add_argument("scenario", nargs="?",
                             help="scenario JSON file (omit with --paper-example)")
    equilibrate.add_argument("--paper-example", action="store_true",
                             help="run the built-in two-player reference configuration")
    equilibrate.add_argument("--T", type=int, default=None,
                             help="iteration count (overrides the scenario)")
    equilibrate.add_argument("--out", required=True,
                             help="output prefix for <prefix>_trace.csv and "
                                  "<prefix>_result.json")
    equilibrate.set_defaults(handler=cmd_equilibrate)

    verify = sub.add_parser("verify", help="run property suites")
    verify.add_argument("--suite", choices=SUITES, default="all")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default=None, help="optional report JSON path")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasiblePlanError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except HypothesisCheckError as exc:
        print(f"hypothesis check failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILURE


if __name__ == "__main__":
    sys.exit(main())
