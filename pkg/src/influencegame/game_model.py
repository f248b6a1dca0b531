"""Game data model: budget plans, stage utilities, payoffs, and exact payoff gradients.

A game couples a network, a campaign schedule, initial opinions, and one
stage-utility/budget pair per player.  Player j's payoff is the average of its
stage utilities evaluated at the pre-jump campaign-time opinions of its own
opinion column, with the terminal stage charged no investment.

Campaign-time opinions admit a closed form: with adjacent-gap propagators
A_k and damping matrices D(k) = diag(1 / (1 + total budget on individual i)),
the pre-jump state at t_k is the sum over earlier stages s of
(A_k D(k-1) ... A_{s+1} D(s)) B(s), seeded with D(0) = I and B(0) = x0.
Both the stage recursion and that summation are implemented; they agree to
round-off and the recursion is the default evaluation path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import HypothesisCheckError, InfeasiblePlanError
from .opinion_dynamics import (
    FEASIBILITY_TOL,
    CampaignSchedule,
    Network,
    OpinionState,
    interval_propagators,
    jump_multi,
    jump_single,
    _readonly,
)

UTILITY_KINDS = ("linear-favor", "linear-complement", "custom")


@dataclass(frozen=True)
class StageUtility:
    """Per-stage utility u(x, b, k) of one player.

    ``linear-favor`` scores rho(k)'x - lambda 1'b, ``linear-complement``
    scores rho(k)'(1 - x) - lambda 1'b.  Custom utilities supply a value and
    both partial gradients; to participate in a multiplayer game they must
    additionally be declared increasing and convex in the opinion argument,
    and to act as a best-response objective, concave in the own budget.
    """

    kind: str
    rho: np.ndarray | None = None
    cost_coefficient: float = 0.0
    value_fn: Callable | None = None
    opinion_grad_fn: Callable | None = None
    budget_grad_fn: Callable | None = None
    declared_increasing_convex: bool = False
    declared_own_concave: bool = False

    def __post_init__(self):
        if self.kind not in UTILITY_KINDS:
            raise ValueError(f"unknown stage-utility kind {self.kind!r}")
        if self.cost_coefficient < 0:
            raise ValueError("cost coefficient must be nonnegative")
        if self.kind == "custom":
            if not (self.value_fn and self.opinion_grad_fn and self.budget_grad_fn):
                raise ValueError("custom utilities need value, opinion-gradient and "
                                 "budget-gradient callables")
        else:
            if self.rho is None:
                raise ValueError("linear utilities need per-stage weights rho")
            rho = np.atleast_2d(np.asarray(self.rho, dtype=float))
            if np.any(rho < 0):
                raise ValueError("stage weights rho must be nonnegative")
            object.__setattr__(self, "rho", _readonly(rho))

    @property
    def is_linear(self) -> bool:
        return self.kind in ("linear-favor", "linear-complement")

    def value(self, x: np.ndarray, b: np.ndarray, k: int) -> float:
        if self.kind == "linear-favor":
            return float(self.rho[k - 1] @ x - self.cost_coefficient * b.sum())
        if self.kind == "linear-complement":
            return float(self.rho[k - 1] @ (1.0 - x) - self.cost_coefficient * b.sum())
        return float(self.value_fn(x, b, k))

    def opinion_gradient(self, x: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
        if self.kind == "linear-favor":
            return self.rho[k - 1]
        if self.kind == "linear-complement":
            return -self.rho[k - 1]
        return np.asarray(self.opinion_grad_fn(x, b, k), dtype=float)

    def budget_gradient(self, x: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
        if self.is_linear:
            return np.full(x.shape, -self.cost_coefficient)
        return np.asarray(self.budget_grad_fn(x, b, k), dtype=float)


@dataclass(frozen=True)
class BudgetPlan:
    """One player's K x n investment matrix under a total-budget cap.

    Row k holds the per-individual investments at campaign time t_k; the
    implicit terminal-stage action is zero.
    """

    player: int
    entries: np.ndarray
    budget_cap: float

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if np.min(entries) < -FEASIBILITY_TOL:
            raise InfeasiblePlanError(
                f"plan for player {self.player} has a negative investment"
            )
        entries = np.maximum(entries, 0.0)
        if entries.sum() > self.budget_cap + FEASIBILITY_TOL:
            raise InfeasiblePlanError(
                f"plan for player {self.player} spends {entries.sum():.6g} "
                f"over its cap {self.budget_cap:.6g}"
            )
        object.__setattr__(self, "entries", _readonly(entries))

    @classmethod
    def zero(cls, player: int, K: int, n: int, budget_cap: float) -> "BudgetPlan":
        return cls(player=player, entries=np.zeros((K, n)), budget_cap=budget_cap)

    @property
    def total_spend(self) -> float:
        return float(self.entries.sum())


@dataclass(frozen=True)
class DampingMatrix:
    """Diagonal of the multiplayer normalization: entry i is 1/(1 + budget on i)."""

    diagonal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diagonal", _readonly(self.diagonal))
        d = self.diagonal
        if np.any(d <= 0) or np.any(d > 1 + 1e-12):
            raise ValueError("damping entries must lie in (0, 1]")


def damping_matrix(budgets: np.ndarray) -> DampingMatrix:
    """Damping diagonal for one campaign's n x m joint budget matrix."""
    budgets = np.atleast_2d(np.asarray(budgets, dtype=float))
    if np.min(budgets) < 0:
        raise InfeasiblePlanError("negative budget entry")
    return DampingMatrix(diagonal=1.0 / (1.0 + budgets.sum(axis=1)))


@dataclass(frozen=True)
class GameSpec:
    """Immutable description of one game instance."""

    network: Network
    schedule: CampaignSchedule
    x0: OpinionState
    budgets: np.ndarray
    utilities: tuple[StageUtility, ...]

    def __post_init__(self):
        object.__setattr__(self, "budgets", _readonly(np.atleast_1d(self.budgets)))
        object.__setattr__(self, "utilities", tuple(self.utilities))
        if self.x0.n != self.network.n:
            raise ValueError("initial opinions and network disagree on n")
        m = self.x0.m
        if len(self.budgets) != m or len(self.utilities) != m:
            raise ValueError("budgets, utilities and opinion columns must all count m")
        if np.any(self.budgets < 0):
            raise ValueError("budgets must be nonnegative")
        stages = self.schedule.K + 1
        for utility in self.utilities:
            if utility.is_linear and utility.rho.shape != (stages, self.network.n):
                raise ValueError(
                    f"rho must supply all {stages} stages for {self.network.n} individuals"
                )
        if m >= 2:
            for j, utility in enumerate(self.utilities):
                if utility.kind == "custom":
                    _check_increasing_convex(utility, self.network.n, stages, player=j)

    @property
    def m(self) -> int:
        return self.x0.m

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def K(self) -> int:
        return self.schedule.K

    @property
    def has_simplex_rows(self) -> bool:
        return bool(np.max(np.abs(self.x0.values.sum(axis=1) - 1.0)) <= 1e-9)


def _check_increasing_convex(utility: StageUtility, n: int, stages: int, player: int):
    """Spot-check a custom utility's declared shape on registration."""
    from .verification import ConvexityProbe, midpoint_convexity_check

    if not utility.declared_increasing_convex:
        raise HypothesisCheckError(
            f"custom utility of player {player} must be declared increasing and "
            "convex in the opinion argument to join a multiplayer game"
        )
    rng = np.random.default_rng(0)
    for k in (1, stages):
        b = rng.random(n) * 0.5
        probe = ConvexityProbe(
            function=lambda x, b=b, k=k: utility.value(x, b, k),
            sampler=lambda r: r.random(n),
            samples=32,
            tolerance=1e-9,
        )
        report = midpoint_convexity_check(probe, seed=7)
        if not report.passed:
            raise HypothesisCheckError(
                f"custom utility of player {player} failed the convexity midpoint "
                f"check (worst violation {report.worst_violation:.3e})",
                report=report,
            )
        x = rng.random(n) * 0.8
        step = 0.1 * np.eye(n)
        base = utility.value(x, b, k)
        for i in range(n):
            if utility.value(x + step[i], b, k) < base - 1e-9:
                raise HypothesisCheckError(
                    f"custom utility of player {player} is not increasing in opinions"
                )


def validate_plans(spec: GameSpec, plans) -> list[BudgetPlan]:
    """Check a joint plan list against the spec; returns it for chaining."""
    plans = list(plans)
    if len(plans) != spec.m:
        raise InfeasiblePlanError(f"expected {spec.m} plans, got {len(plans)}")
    for j, plan in enumerate(plans):
        if plan.player != j:
            raise InfeasiblePlanError(f"plan at position {j} is labeled player {plan.player}")
        if plan.entries.shape != (spec.K, spec.n):
            raise InfeasiblePlanError(
                f"plan for player {j} must be shaped ({spec.K}, {spec.n})"
            )
        if plan.total_spend > spec.budgets[j] + FEASIBILITY_TOL:
            raise InfeasiblePlanError(
                f"player {j} spends {plan.total_spend:.6g} over budget {spec.budgets[j]:.6g}"
            )
    return plans


def plans_from_array(spec: GameSpec, profile: np.ndarray) -> list[BudgetPlan]:
    """Wrap an (m, K, n) array as a validated plan list."""
    profile = np.asarray(profile, dtype=float)
    plans = [
        BudgetPlan(player=j, entries=profile[j], budget_cap=float(spec.budgets[j]))
        for j in range(spec.m)
    ]
    return validate_plans(spec, plans)


def profile_array(plans) -> np.ndarray:
    """Stack a plan list into an (m, K, n) array."""
    return np.stack([plan.entries for plan in plans])


def _stage_matrix(entries: list[np.ndarray], k: int) -> np.ndarray:
    """Joint n x m budget matrix invested at campaign k (1-based)."""
    return np.column_stack([e[k - 1] for e in entries])


def _forward_states(spec: GameSpec, entries: list[np.ndarray]):
    """Run the stage recursion; returns pre-jump states, post-jump states and
    per-stage budget row sums."""
    gaps = interval_propagators(spec.network, spec.schedule)
    K, n, m = spec.K, spec.n, spec.m
    pre = np.empty((K + 1, n, m))
    post = np.empty((K, n, m))
    sigma = np.empty((K, n))
    state = np.array(spec.x0.values)
    for k in range(1, K + 2):
        state = gaps[k - 1] @ state
        pre[k - 1] = state
        if k <= K:
            stage = _stage_matrix(entries, k)
            sigma[k - 1] = stage.sum(axis=1)
            if m == 1:
                state = jump_single(state[:, 0], stage[:, 0])[:, None]
            else:
                state = jump_multi(state, stage)
            post[k - 1] = state
    return pre, post, sigma


def opinions_at_campaigns(spec: GameSpec, plans) -> np.ndarray:
    """Pre-jump opinion states at t_1..t_{K+1}, shaped (K+1, n, m).

    Evaluated by the stage recursion: diffuse across each gap, then apply the
    jump for the budgets invested at that campaign."""
    plans = validate_plans(spec, plans)
    entries = [plan.entries for plan in plans]
    pre, _, _ = _forward_states(spec, entries)
    return pre


def opinions_at_campaigns_closed_form(spec: GameSpec, plans) -> np.ndarray:
    """Same states via the explicit summation over investment stages.

    Exists as an independent evaluation route; agrees with the recursion to
    round-off.  Single-player games have no damping, so every D(r) is the
    identity there."""
    plans = validate_plans(spec, plans)
    entries = [plan.entries for plan in plans]
    gaps = interval_propagators(spec.network, spec.schedule)
    K, n, m = spec.K, spec.n, spec.m

    def damping_diag(r: int) -> np.ndarray:
        if r == 0 or m == 1:
            return np.ones(n)
        return 1.0 / (1.0 + _stage_matrix(entries, r).sum(axis=1))

    out = np.zeros((K + 1, n, m))
    for k in range(1, K + 2):
        total = np.zeros((n, m))
        for s in range(0, k):
            block = _stage_matrix(entries, s) if s >= 1 else np.array(spec.x0.values)
            # apply A_{r+1} D(r) factors from the inside out, leftmost last
            term = damping_diag(s)[:, None] * block
            for r in range(s, k):
                term = gaps[r] @ term
                if r + 1 < k:
                    term = damping_diag(r + 1)[:, None] * term
            total += term
        out[k - 1] = total
    return out


def total_payoff(spec: GameSpec, plans, j: int) -> float:
    """Average of player j's stage utilities over t_1..t_{K+1}."""
    plans = validate_plans(spec, plans)
    pre = opinions_at_campaigns(spec, plans)
    utility = spec.utilities[j]
    K, n = spec.K, spec.n
    total = 0.0
    for k in range(1, K + 2):
        b_k = plans[j].entries[k - 1] if k <= K else np.zeros(n)
        total += utility.value(pre[k - 1][:, j], b_k, k)
    return total / (K + 1)


def payoff_gradient(spec: GameSpec, plans, j: int) -> np.ndarray:
    """Exact gradient of total_payoff with respect to player j's own entries.

    Own investments enter the campaign-time opinions both linearly and
    through the damping denominators of every stage they touch; the gradient
    propagates stage sensitivities through the same recursion used by the
    payoff, so it is exact rather than approximate.
    """
    plans = validate_plans(spec, plans)
    entries = [plan.entries for plan in plans]
    pre, post, sigma = _forward_states(spec, entries)
    gaps = interval_propagators(spec.network, spec.schedule)
    utility = spec.utilities[j]
    K, n, m = spec.K, spec.n, spec.m
    scale = 1.0 / (K + 1)

    own = entries[j]
    grad = np.empty((K, n))
    v = scale * utility.opinion_gradient(pre[K][:, j], np.zeros(n), K + 1)
    for k in range(K, 0, -1):
        w = gaps[k].T @ v
        if m == 1:
            damp = np.ones(n)
            sensitivity = np.ones(n)
        else:
            damp = 1.0 / (1.0 + sigma[k - 1])
            sensitivity = damp * (1.0 - post[k - 1][:, j])
        x_k = pre[k - 1][:, j]
        grad[k - 1] = scale * utility.budget_gradient(x_k, own[k - 1], k) + sensitivity * w
        v = scale * utility.opinion_gradient(x_k, own[k - 1], k) + damp * w
    return grad
