"""Open-loop equilibria by simultaneous no-regret gradient ascent.

Every player repeatedly plays projected gradient ascent on its own payoff
against the others' current strategies; for socially concave games the
running average of the joint iterates converges to a pure open-loop
equilibrium.  The trace records iterates, running averages, per-iteration
payoffs and stepsizes, and the diagnostics below quantify how close the
averaged profile is to equilibrium:

* regret -- gap between the best fixed strategy in hindsight and the payoff
  actually accumulated,
* exploitability -- the largest unilateral improvement any player can still
  find against the averaged profile.

Best-response and hindsight subproblems are themselves concave maximizations
over the budget set (or the single-player polytope) and reuse the projected
gradient machinery, with Nesterov momentum and adaptive restart for the
tight tolerances the diagnostics need.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, HypothesisCheckError
from .fileio import atomic_write_text
from .game_model import (
    GameSpec,
    payoff_gradient,
    plans_from_array,
    profile_array,
    total_payoff,
)
from .opinion_dynamics import interval_propagators, _readonly
from .single_player_solver import build_region, project_feasible


def project_budget_set(point: np.ndarray, cap: float) -> np.ndarray:
    """Exact Euclidean projection onto {b >= 0, sum(b) <= cap}.

    Clamping negatives suffices when the clamped sum fits under the cap;
    otherwise the usual water-filling threshold projects onto the face
    {b >= 0, sum(b) = cap}.  Exact in finitely many operations.
    """
    if cap < 0:
        raise ValueError("budget cap must be nonnegative")
    v = np.asarray(point, dtype=float)
    clamped = np.maximum(v, 0.0)
    if clamped.sum() <= cap:
        return clamped
    flat = v.ravel()
    u = np.sort(flat)[::-1]
    cumulative = np.cumsum(u) - cap
    ranks = np.arange(1, flat.size + 1)
    feasible = u - cumulative / ranks > 0
    rho = int(np.count_nonzero(feasible))
    theta = cumulative[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class BudgetSimplexSet:
    """The constraint set of one player: nonnegative spend totalling at most ``cap``."""

    dimension: int
    cap: float

    def contains(self, b: np.ndarray, tol: float = 1e-9) -> bool:
        b = np.asarray(b, dtype=float).ravel()
        return b.size == self.dimension and b.min() >= -tol and b.sum() <= self.cap + tol

    def project(self, b: np.ndarray) -> np.ndarray:
        return project_budget_set(b, self.cap)


@dataclass(frozen=True)
class StepSchedule:
    """Diminishing stepsize eta_tau = c / tau or c / sqrt(tau)."""

    kind: str
    c: float

    def __post_init__(self):
        if self.kind not in ("c_over_tau", "c_over_sqrt_tau"):
            raise ValueError(f"unknown step schedule kind {self.kind!r}")
        if self.c <= 0:
            raise ValueError("step schedule constant must be positive")

    def eta(self, tau: int) -> float:
        if self.kind == "c_over_tau":
            return self.c / tau
        return self.c / np.sqrt(tau)


def default_step_schedule(spec: GameSpec) -> StepSchedule:
    """c/tau when every utility is linear (attested concave per player),
    c/sqrt(tau) otherwise."""
    if all(u.is_linear for u in spec.utilities):
        return StepSchedule(kind="c_over_tau", c=10.0)
    return StepSchedule(kind="c_over_sqrt_tau", c=1.0)


@dataclass(frozen=True)
class LearningTrace:
    """Everything one no-regret run produced.

    ``iterates[tau-1]`` is the joint profile played at iteration tau (shape
    (m, K, n)), ``averages[tau-1]`` the running average over the first tau
    iterates, ``payoffs[tau-1, j]`` player j's payoff at that iterate.
    """

    spec: GameSpec
    iterates: np.ndarray
    averages: np.ndarray
    payoffs: np.ndarray
    stepsizes: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("iterates", "averages", "payoffs", "stepsizes"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def iterations(self) -> int:
        return self.iterates.shape[0]


@dataclass(frozen=True)
class EquilibriumResult:
    """Averaged profile plus closeness-to-equilibrium diagnostics."""

    profile: np.ndarray
    exploitability: float
    regrets: np.ndarray
    iterations: int

    def __post_init__(self):
        object.__setattr__(self, "profile", _readonly(self.profile))
        object.__setattr__(self, "regrets", _readonly(np.atleast_1d(self.regrets)))
        if self.exploitability < -1e-8:
            raise ValueError("exploitability cannot be materially negative")


def _require_convergence_hypotheses(spec: GameSpec):
    """Multiplayer convergence rests on utilities increasing and convex in opinions."""
    if spec.m == 1:
        return
    for j, utility in enumerate(spec.utilities):
        if utility.kind == "linear-favor":
            continue
        if utility.kind == "custom" and utility.declared_increasing_convex:
            continue
        raise HypothesisCheckError(
            f"player {j}'s utility is not attested increasing and convex in "
            "opinions, which the no-regret convergence guarantee needs"
        )


def _require_own_concave(spec: GameSpec, j: int):
    """Best-response subproblems must be concave maximizations."""
    utility = spec.utilities[j]
    if spec.m == 1:
        if utility.is_linear:
            return  # opinions are linear in own investments: linear objective
        from .single_player_solver import _check_concave_stages

        _check_concave_stages(spec)
        return
    if utility.kind == "linear-favor":
        return
    if utility.kind == "custom" and utility.declared_own_concave:
        return
    raise HypothesisCheckError(
        f"player {j}'s best-response subproblem is not attested concave"
    )


def _projections(spec: GameSpec):
    if spec.m == 1:
        region = build_region(spec)
        return [lambda v: project_feasible(v, region)]
    return [
        (lambda v, cap=float(spec.budgets[j]): project_budget_set(v, cap))
        for j in range(spec.m)
    ]


def run_no_regret(spec: GameSpec, T: int, step_schedule=None, seed: int = 0) -> LearningTrace:
    """Simultaneous projected gradient ascent for all players, T iterations.

    Players start from the interior half-budget spread (each entry
    beta_j / (2 K n)) and update together from the same joint iterate.  The
    run is deterministic given the spec, schedule and seed.
    """
    if T < 1:
        raise ValueError("iteration count must be at least 1")
    _require_convergence_hypotheses(spec)
    if step_schedule is None:
        step_schedule = default_step_schedule(spec)
    m, K, n = spec.m, spec.K, spec.n
    projections = _projections(spec)

    current = np.stack(
        [np.full((K, n), float(spec.budgets[j]) / (2 * K * n)) for j in range(m)]
    )
    if m == 1:
        current[0] = projections[0](current[0].ravel()).reshape(K, n)

    iterates = np.empty((T, m, K, n))
    averages = np.empty((T, m, K, n))
    payoffs = np.empty((T, m))
    stepsizes = np.empty(T)
    running_sum = np.zeros((m, K, n))

    for tau in range(1, T + 1):
        iterates[tau - 1] = current
        running_sum += current
        averages[tau - 1] = running_sum / tau
        plans = plans_from_array(spec, current)
        for j in range(m):
            payoffs[tau - 1, j] = total_payoff(spec, plans, j)
        eta = step_schedule.eta(tau) if hasattr(step_schedule, "eta") else step_schedule(tau)
        if eta <= 0:
            raise ValueError("step schedule produced a nonpositive stepsize")
        stepsizes[tau - 1] = eta
        gradients = [payoff_gradient(spec, plans, j) for j in range(m)]
        updated = np.empty_like(current)
        for j in range(m):
            stepped = (current[j] + eta * gradients[j]).ravel()
            updated[j] = projections[j](stepped).reshape(K, n)
        current = updated

    return LearningTrace(
        spec=spec,
        iterates=iterates,
        averages=averages,
        payoffs=payoffs,
        stepsizes=stepsizes,
        seed=seed,
    )


def _maximize_concave(value_fn, grad_fn, project, start, max_iters=50_000, tol=1e-9):
    """Monotone projected gradient ascent with backtracking line search.

    The step is halved until the candidate clears the quadratic ascent model
    (so every accepted move is an ascent up to round-off) and grown again
    after acceptance.  Returns (point, residual, converged) where the
    residual is the projected-gradient-step norm at a unit-capped probe step.
    """
    x = project(np.asarray(start, dtype=float).ravel())
    fx = value_fn(x)
    step = 1.0
    noise = 1e-13 * max(1.0, abs(fx))

    def residual_at(point, gradient):
        probe = min(step, 1.0)
        move = project(point + probe * gradient) - point
        return float(np.linalg.norm(move)) / probe

    g = grad_fn(x)
    for _ in range(max_iters):
        candidate = None
        for _ in range(80):
            candidate = project(x + step * g)
            delta = candidate - x
            model = float(g @ delta) - float(delta @ delta) / (2.0 * step)
            if value_fn(candidate) >= fx + model - noise:
                break
            step *= 0.5
        x, fx = candidate, value_fn(candidate)
        g = grad_fn(x)
        residual = residual_at(x, g)
        if residual <= tol:
            return x, residual, True
        step *= 1.5
    return x, residual_at(x, grad_fn(x)), False


def _objective_for_player(spec: GameSpec, entries: np.ndarray, j: int):
    """Value and gradient of player j's payoff as a function of its own flat plan."""
    K, n = spec.K, spec.n

    def assemble(flat):
        profile = entries.copy()
        profile[j] = flat.reshape(K, n)
        return plans_from_array(spec, profile)

    value = lambda flat: total_payoff(spec, assemble(flat), j)
    grad = lambda flat: payoff_gradient(spec, assemble(flat), j).ravel()
    return value, grad


def best_response(
    spec: GameSpec, plans, j: int, max_iters: int = 50_000, tol: float = 1e-9
):
    """Best response of player j to the others' plans; returns (entries, payoff).

    Warm-started at player j's current plan, so the returned payoff is never
    below the played one.
    """
    _require_own_concave(spec, j)
    entries = profile_array(plans)
    value, grad = _objective_for_player(spec, entries, j)
    project = _projections(spec)[j if spec.m > 1 else 0]
    point, residual, converged = _maximize_concave(
        value, grad, project, entries[j].ravel(), max_iters=max_iters, tol=tol
    )
    if not converged:
        raise ConvergenceError(
            "best-response ascent did not converge", residual=residual
        )
    return point.reshape(spec.K, spec.n), value(point)


def exploitability(spec: GameSpec, profile) -> float:
    """Largest unilateral payoff improvement available at the profile.

    Zero exactly at an open-loop equilibrium; small positive values bound the
    distance from equilibrium in payoff terms.
    """
    arr = profile if isinstance(profile, np.ndarray) else profile_array(profile)
    plans = plans_from_array(spec, arr)
    gaps = []
    for j in range(spec.m):
        base = total_payoff(spec, plans, j)
        _, improved = best_response(spec, plans, j)
        gaps.append(improved - base)
    return float(max(gaps))


def _hindsight_objective(spec: GameSpec, trace: LearningTrace, j: int, horizon: int):
    """Sum over the first ``horizon`` iterations of player j's payoff against the
    opponents' played strategies, as a function of one fixed own plan.

    Linear utilities admit a batched evaluation: opponents influence player
    j's opinion column only through the per-individual budget row sums, so
    all iterations propagate together as one stacked state array.
    """
    K, n, m = spec.K, spec.n, spec.m
    utility = spec.utilities[j]

    if m == 1:
        value_one, grad_one = _objective_for_player(spec, trace.iterates[0].copy(), j)
        return (
            lambda flat: horizon * value_one(flat),
            lambda flat: horizon * grad_one(flat),
        )

    if not utility.is_linear:
        snapshots = [trace.iterates[tau].copy() for tau in range(horizon)]

        def value(flat):
            total = 0.0
            for entries in snapshots:
                v, _ = _objective_for_player(spec, entries, j)
                total += v(flat)
            return total

        def grad(flat):
            total = np.zeros(flat.size)
            for entries in snapshots:
                _, g = _objective_for_player(spec, entries, j)
                total += g(flat)
            return total

        return value, grad

    others = [ell for ell in range(m) if ell != j]
    opp_sigma = trace.iterates[:horizon, others].sum(axis=1)  # (horizon, K, n)
    gaps = interval_propagators(spec.network, spec.schedule)
    rho = utility.rho
    sign = 1.0 if utility.kind == "linear-favor" else -1.0
    lam = utility.cost_coefficient
    x0col = spec.x0.values[:, j]
    scale = 1.0 / (K + 1)

    def forward(own):
        pre = np.empty((K + 1, horizon, n))
        post = np.empty((K, horizon, n))
        sig = np.empty((K, horizon, n))
        state = np.broadcast_to(x0col, (horizon, n)).copy()
        for k in range(1, K + 2):
            state = state @ gaps[k - 1].T
            pre[k - 1] = state
            if k <= K:
                sig[k - 1] = opp_sigma[:, k - 1, :] + own[k - 1]
                state = (state + own[k - 1]) / (1.0 + sig[k - 1])
                post[k - 1] = state
        return pre, post, sig

    def value(flat):
        own = flat.reshape(K, n)
        pre, _, _ = forward(own)
        total = 0.0
        for k in range(1, K + 2):
            opinion_term = sign * float((pre[k - 1] @ rho[k - 1]).sum())
            if utility.kind == "linear-complement":
                opinion_term += horizon * float(rho[k - 1].sum())
            total += opinion_term
            if k <= K:
                total -= horizon * lam * float(own[k - 1].sum())
        return scale * total

    def grad(flat):
        own = flat.reshape(K, n)
        _, post, sig = forward(own)
        out = np.zeros((K, n))
        v = np.broadcast_to(scale * sign * rho[K], (horizon, n)).copy()
        for k in range(K, 0, -1):
            w = v @ gaps[k]
            damp = 1.0 / (1.0 + sig[k - 1])
            sensitivity = damp * (1.0 - post[k - 1])
            out[k - 1] = -scale * lam * horizon + (sensitivity * w).sum(axis=0)
            v = scale * sign * np.broadcast_to(rho[k - 1], (horizon, n)) + damp * w
        return out.ravel()

    return value, grad


def regret(trace: LearningTrace, j: int, horizon: int | None = None) -> float:
    """Realized regret of player j: best fixed strategy in hindsight versus the
    payoffs actually collected over the first ``horizon`` iterations."""
    spec = trace.spec
    T = trace.iterations if horizon is None else int(horizon)
    if not 1 <= T <= trace.iterations:
        raise ValueError("horizon must lie within the recorded iterations")
    _require_own_concave(spec, j)
    value, grad = _hindsight_objective(spec, trace, j, T)
    project = _projections(spec)[j if spec.m > 1 else 0]
    start = trace.averages[T - 1, j].ravel()
    point, residual, converged = _maximize_concave(
        value, grad, project, start, max_iters=30_000, tol=1e-9 * T
    )
    if not converged:
        raise ConvergenceError(
            "hindsight optimization did not converge", residual=residual
        )
    played = float(trace.payoffs[:T, j].sum())
    return float(value(point) - played)


def solve_equilibrium(spec: GameSpec, T: int, step_schedule=None, seed: int = 0):
    """Run the learning dynamics and package the averaged profile with its
    diagnostics; returns (trace, result)."""
    trace = run_no_regret(spec, T, step_schedule=step_schedule, seed=seed)
    averaged = trace.averages[-1]
    result = EquilibriumResult(
        profile=averaged,
        exploitability=exploitability(spec, averaged),
        regrets=np.array([regret(trace, j) for j in range(spec.m)]),
        iterations=T,
    )
    return trace, result


def trace_to_csv(trace: LearningTrace) -> str:
    """Render a trace as CSV with one row per (iteration, player, stage, individual)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["iteration", "player", "stage", "individual", "iterate_value", "average_value", "payoff"]
    )
    T, m, K, n = trace.iterates.shape
    for tau in range(T):
        for j in range(m):
            payoff = repr(float(trace.payoffs[tau, j]))
            for k in range(K):
                for i in range(n):
                    writer.writerow(
                        [
                            tau + 1,
                            j,
                            k + 1,
                            i,
                            repr(float(trace.iterates[tau, j, k, i])),
                            repr(float(trace.averages[tau, j, k, i])),
                            payoff,
                        ]
                    )
    return buffer.getvalue()


def write_trace_csv(trace: LearningTrace, path):
    atomic_write_text(path, trace_to_csv(trace))


def result_to_json(result: EquilibriumResult) -> str:
    document = {
        "iterations": result.iterations,
        "exploitability": result.exploitability,
        "regrets": [float(r) for r in result.regrets],
        "profile": [
            [[float(v) for v in stage] for stage in player] for player in result.profile
        ],
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_result_json(result: EquilibriumResult, path):
    atomic_write_text(path, result_to_json(result))
