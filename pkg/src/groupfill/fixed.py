"""Closed-form optimal power allocation for the fixed orthogonal channel.

The allocation is p_i = ((mu + lambda_j)^{-1} - 1/g_i)_+ where mu prices the
total budget and lambda_j the cap of the group containing antenna i.  Both
dual variables solve monotone scalar equations and are found by bisection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotReached
from .problem import (
    DualSolution,
    GainVector,
    PowerAllocation,
    ValidatedProblem,
)

DEFAULT_TOL = 1e-10
MAX_BISECT_ITERS = 200


@dataclass(frozen=True, eq=False)
class FixedSolveReport:
    allocation: PowerAllocation
    duals: DualSolution
    capacity_nats: float
    group_budgets: tuple[float, ...]
    active_tpc: bool
    active_groups: tuple[bool, ...]


@dataclass(frozen=True)
class KktResiduals:
    """Max absolute violations of the optimality conditions."""

    stationarity: float
    complementary_slackness: float
    primal_feasibility: float
    dual_feasibility: float

    @property
    def max_violation(self) -> float:
        return max(
            self.stationarity,
            self.complementary_slackness,
            self.primal_feasibility,
            self.dual_feasibility,
        )


def waterfill_tpc(gains: GainVector, budget: float) -> PowerAllocation:
    """Water-filling against a single total budget, p_i = (w - 1/g_i)_+.

    The water level is solved in closed form so the budget is met exactly.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    g = gains.gains
    inv = np.sort(1.0 / g)
    # Largest k with water level above the k-th inverse gain.
    csum = np.cumsum(inv)
    k = inv.size
    while k > 1:
        level = (budget + csum[k - 1]) / k
        if level > inv[k - 1]:
            break
        k -= 1
    level = (budget + csum[k - 1]) / k
    p = np.maximum(level - 1.0 / g, 0.0)
    return PowerAllocation.for_total(p, budget)


def _waterfill_sum(inv_gains: np.ndarray, inv_level: float) -> float:
    """sum_i (inv_level - 1/g_i)_+ for one group."""
    return float(np.maximum(inv_level - inv_gains, 0.0).sum())


def group_budget(problem: ValidatedProblem, j: int, mu: float) -> float:
    """Optimal total power of group j: min{P_j, sum_{i in I(j)} (1/mu - 1/g_i)_+}.

    mu = 0 makes the water-filling term unbounded, so the cap is returned.
    """
    cap = problem.partition.caps[j - 1]
    if mu <= 0:
        return cap
    idx = [i - 1 for i in problem.partition.groups[j - 1]]
    inv = 1.0 / problem.gains.gains[idx]
    return min(cap, _waterfill_sum(inv, 1.0 / mu))


def _mu_equation(problem: ValidatedProblem, mu: float) -> float:
    total = 0.0
    for j in range(1, problem.num_groups + 1):
        total += group_budget(problem, j, mu)
    return total - problem.partition.total


def solve_mu(problem: ValidatedProblem, tol: float = DEFAULT_TOL) -> float:
    """Dual variable of the total budget, by bisection on [0, max g_i]."""
    caps_sum = sum(problem.partition.caps)
    if caps_sum <= problem.partition.total:
        return 0.0
    lo, hi = 0.0, float(problem.gains.gains.max())
    # The equation's left side is monotone non-increasing in mu; the bracket
    # must straddle zero.
    assert caps_sum - problem.partition.total > 0
    assert _mu_equation(problem, hi) <= 0
    residual = np.inf
    mid = hi
    for _ in range(MAX_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        residual = _mu_equation(problem, mid)
        if abs(residual) <= tol:
            return mid
        if residual > 0:
            lo = mid
        else:
            hi = mid
    raise ToleranceNotReached("mu bisection hit the iteration cap", abs(residual))


def solve_lambda(
    problem: ValidatedProblem,
    j: int,
    mu: float,
    b_j: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """Dual variable of group j's cap given mu and the group budget b_j.

    Groups are not coupled, so each lambda_j solves its own monotone scalar
    equation sum_{i in I(j)} ((mu + lambda_j)^{-1} - 1/g_i)_+ = b_j.
    """
    g_all_max = float(problem.gains.gains.max())
    if b_j <= 0:
        return g_all_max
    idx = [i - 1 for i in problem.partition.groups[j - 1]]
    inv = 1.0 / problem.gains.gains[idx]
    # Fast path: the cap is slack, the plain water-fill already sums to b_j.
    if mu > 0 and _waterfill_sum(inv, 1.0 / mu) <= problem.partition.caps[j - 1]:
        return 0.0
    lo = 0.0
    hi = max(float(problem.gains.gains[idx].max()) - mu, 0.0)
    residual = np.inf
    for _ in range(MAX_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        residual = _waterfill_sum(inv, 1.0 / (mu + mid)) - b_j
        if abs(residual) <= tol:
            return mid
        if residual > 0:
            lo = mid
        else:
            hi = mid
    raise ToleranceNotReached(f"lambda bisection for group {j} hit the iteration cap", abs(residual))


def capacity_fixed(gains: GainVector, allocation: PowerAllocation) -> float:
    """Channel capacity sum_i ln(1 + g_i p_i) in nats."""
    return float(np.log1p(gains.gains * allocation.powers).sum())


def opa_fixed(problem: ValidatedProblem, tol: float = DEFAULT_TOL) -> FixedSolveReport:
    """Optimal allocation and capacity under joint total and per-group budgets."""
    part = problem.partition
    g = problem.gains.gains
    mu = solve_mu(problem, tol)
    caps_sum = sum(part.caps)

    budgets, lambdas, lam_residuals = [], [], []
    p = np.empty(problem.num_antennas)
    for j in range(1, problem.num_groups + 1):
        b_j = group_budget(problem, j, mu)
        # A dead group (mu alone shuts off all its antennas, cap strictly
        # slack) has multiplier 0; solve_lambda's max-gain convention is an
        # equally valid bisection bound but breaks complementary slackness.
        lam = 0.0 if b_j <= 0 else solve_lambda(problem, j, mu, b_j, tol)
        idx = [i - 1 for i in part.groups[j - 1]]
        p[idx] = np.maximum(1.0 / (mu + lam) - 1.0 / g[idx], 0.0)
        budgets.append(b_j)
        lambdas.append(lam)
        lam_residuals.append(abs(float(p[idx].sum()) - b_j))

    mu_residual = abs(_mu_equation(problem, mu)) if mu > 0 else 0.0
    duals = DualSolution(mu, tuple(lambdas), (mu_residual, *lam_residuals))
    allocation = PowerAllocation.for_partition(p, part)
    active_groups = tuple(
        b >= cap for b, cap in zip(budgets, part.caps)
    )
    return FixedSolveReport(
        allocation=allocation,
        duals=duals,
        capacity_nats=capacity_fixed(problem.gains, allocation),
        group_budgets=tuple(budgets),
        active_tpc=caps_sum > part.total,
        active_groups=active_groups,
    )


def kkt_residuals(problem: ValidatedProblem, report: FixedSolveReport) -> KktResiduals:
    """Max absolute violation of stationarity, complementary slackness and
    primal/dual feasibility for a candidate allocation with duals.

    Reports, never raises: intended both as a self-check on solver output and
    as a detector for perturbed allocations.
    """
    part = problem.partition
    g = problem.gains.gains
    p = report.allocation.powers
    mu = report.duals.mu
    gid = problem.group_ids()
    lam = np.asarray(report.duals.lambdas)[gid]

    eta = np.where(p > 0, 0.0, np.maximum(mu + lam - g, 0.0))
    stationarity = float(np.abs(g / (1.0 + g * p) - (mu + lam - eta)).max())

    total_gap = p.sum() - part.total
    slack = [abs(mu * total_gap)]
    for j, (grp, cap) in enumerate(zip(part.groups, part.caps)):
        s = p[[i - 1 for i in grp]].sum() - cap
        slack.append(abs(report.duals.lambdas[j] * s))
    slack.append(float(np.abs(eta * p).max()) if p.size else 0.0)
    complementary = max(slack)

    primal = max(
        float(np.maximum(-p, 0.0).max()),
        max(0.0, float(total_gap)),
        max(
            max(0.0, float(p[[i - 1 for i in grp]].sum() - cap))
            for grp, cap in zip(part.groups, part.caps)
        ),
    )
    dual = max(0.0, -mu, *(-l for l in report.duals.lambdas))
    return KktResiduals(stationarity, complementary, primal, dual)
