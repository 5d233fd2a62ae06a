"""Independent ground-truth machinery for the solvers.

A majorization predicate, an exact greedy linear maximizer over the laminar
budget polytope, a Frank-Wolfe concave maximizer built on it, an exhaustive
grid search for tiny problems, and a sample-average (SAA) oracle for the
fading objective.  None of these share code paths with the solvers they
check.

Frank-Wolfe was chosen over projected gradient because exact linear
optimization over this polytope is a short greedy, whereas Euclidean
projection onto it is itself a nontrivial solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LengthMismatch, NonFiniteGradient, ProblemTooLarge
from .problem import GroupPartition, PowerAllocation, ValidatedProblem

FW_MAX_ITERS = 200_000
FW_GAP_TOL_FIXED = 1e-8
FW_GAP_TOL_SAA = 1e-6
GRID_RESOLUTION = 1e-3
SAA_SAMPLES = 20_000


@dataclass(frozen=True, eq=False)
class LaminarPolytope:
    """Feasible set {p >= 0, sum p <= total, per-group sums <= caps}."""

    partition: GroupPartition

    def __post_init__(self):
        gid = self.partition.group_index_array()
        caps = np.asarray(self.partition.caps, dtype=float)
        gid.setflags(write=False)
        caps.setflags(write=False)
        object.__setattr__(self, "_gid", gid)
        object.__setattr__(self, "_caps", caps)

    @property
    def dim(self) -> int:
        return self.partition.num_antennas

    def arrays(self):
        return self._gid, self._caps, self.partition.total


@dataclass(frozen=True, eq=False)
class OracleResult:
    allocation: PowerAllocation
    objective: float
    iterations: int
    certified_gap: float


def majorizes(x, y, tol: float = 1e-9) -> bool:
    """Whether x is majorized by y (x < y): sorting both descending, every
    prefix sum of y dominates x's and the totals agree within tol."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("majorization needs two equal-length vectors")
    xs = np.cumsum(np.sort(x)[::-1])
    ys = np.cumsum(np.sort(y)[::-1])
    if abs(xs[-1] - ys[-1]) > tol:
        return False
    return bool(np.all(ys[:-1] >= xs[:-1] - tol))


def lp_greedy(c, polytope: LaminarPolytope) -> PowerAllocation:
    """Exact maximizer of sum c_i p_i over the polytope (an optimal vertex)."""
    c = np.asarray(c, dtype=float)
    if c.size != polytope.dim:
        raise LengthMismatch("objective vector does not match polytope dimension")
    gid, caps, total = polytope.arrays()
    p = _kernels.greedy_vertex(c, gid, caps, total)
    return PowerAllocation.for_partition(p, polytope.partition)


def frank_wolfe(
    gradient,
    polytope: LaminarPolytope,
    max_iters: int = FW_MAX_ITERS,
    gap_tol: float = FW_GAP_TOL_FIXED,
    objective=None,
) -> OracleResult:
    """Maximize a concave differentiable objective given only its gradient.

    Iterates x += (2/(k+2))(v - x) with v the greedy vertex for the current
    gradient; stops when the duality gap <grad, v - x> certifies optimality
    within gap_tol.  The step rule is fixed (no line search) so runs are
    reproducible.
    """
    gid, caps, total = polytope.arrays()
    x = np.zeros(polytope.dim)
    gap = np.inf
    iterations = max_iters
    for k in range(max_iters):
        grad = np.asarray(gradient(x), dtype=float)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient("gradient returned a non-finite value")
        v = _kernels.greedy_vertex(grad, gid, caps, total)
        gap = float(np.dot(grad, v - x))
        if gap <= gap_tol:
            iterations = k
            break
        x += (2.0 / (k + 2.0)) * (v - x)
    else:
        grad = np.asarray(gradient(x), dtype=float)
        v = _kernels.greedy_vertex(grad, gid, caps, total)
        gap = float(np.dot(grad, v - x))
    return OracleResult(
        allocation=PowerAllocation.for_partition(x, polytope.partition),
        objective=float(objective(x)) if objective is not None else float("nan"),
        iterations=iterations,
        certified_gap=gap,
    )


def oracle_fixed(
    problem: ValidatedProblem,
    gap_tol: float = FW_GAP_TOL_FIXED,
    max_iters: int = FW_MAX_ITERS,
) -> OracleResult:
    """Frank-Wolfe on sum_i ln(1 + g_i p_i); independent of the closed-form
    solver's code path (compiled twin of the generic loop)."""
    polytope = LaminarPolytope(problem.partition)
    gid, caps, total = polytope.arrays()
    g = problem.gains.gains
    x, gap, iters = _kernels.fw_log(g, gid, caps, total, max_iters, gap_tol)
    return OracleResult(
        allocation=PowerAllocation.for_partition(x, problem.partition),
        objective=float(np.log1p(g * x).sum()),
        iterations=int(iters),
        certified_gap=float(gap),
    )


def grid_oracle(problem: ValidatedProblem, resolution: float = GRID_RESOLUTION) -> OracleResult:
    """Exhaustive feasible-grid search for m <= 3.

    The certified gap is the Lipschitz bound m * resolution * max g on the
    distance to the true optimum.
    """
    m = problem.num_antennas
    if m > 3:
        raise ProblemTooLarge("grid oracle supports at most 3 antennas")
    polytope = LaminarPolytope(problem.partition)
    gid, caps, total = polytope.arrays()
    g = problem.gains.gains
    p, best, evals = _kernels.grid_search(g, gid, caps, total, resolution)
    return OracleResult(
        allocation=PowerAllocation.for_partition(p, problem.partition),
        objective=float(best),
        iterations=int(evals),
        certified_gap=float(m * resolution * g.max()),
    )


def saa_gain_samples(m: int, n_samples: int = SAA_SAMPLES, seed: int = 0) -> np.ndarray:
    """The fixed unit-mean exponential draws (m, n_samples) used by the SAA
    objective; seeded and reused so comparisons share the same sample set.

    The same scalar draws are shared by every antenna (common random
    numbers): the gains are i.i.d., so this changes nothing in expectation
    but keeps the sample objective exactly permutation-symmetric, removing
    the O(1/sqrt(N)) noise that independent per-antenna draws would inject
    into the sample argmax.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    row = rng.exponential(size=n_samples)
    return np.ascontiguousarray(np.broadcast_to(row, (m, n_samples)))


def shave_and_spread(
    partition: GroupPartition,
    optimal: PowerAllocation,
    active_groups,
    rng: np.random.Generator,
    max_fraction: float = 0.5,
):
    """A feasible equal-sum competitor that majorizes the optimal fading
    allocation.

    Shaves a random amount off each capped ("active") group and spreads the
    shaved power uniformly over the antennas of the uncapped groups, staying
    inside their caps.  Any such move can only concentrate power, so the
    optimal allocation is majorized by the result.  Returns None when the
    move is impossible (no capped group, or no uncapped antenna).
    """
    active = set(active_groups)
    inactive = [j for j in range(1, partition.num_groups + 1) if j not in active]
    if not active or not inactive:
        return None
    p = optimal.powers
    share = float(p[partition.groups[inactive[0] - 1][0] - 1])
    q = sum(len(partition.groups[j - 1]) for j in inactive)
    headroom = q * min(
        partition.caps[j - 1] / len(partition.groups[j - 1]) - share for j in inactive
    )
    if headroom <= 0:
        return None
    eps = rng.uniform(0, max_fraction, size=len(active)) * np.array(
        [partition.caps[j - 1] for j in sorted(active)]
    )
    if eps.sum() > 0.999 * headroom:
        eps *= 0.999 * headroom / eps.sum()
    out = np.array(p)
    for e, j in zip(eps, sorted(active)):
        idx = [i - 1 for i in partition.groups[j - 1]]
        out[idx] = (partition.caps[j - 1] - e) / len(idx)
    spread = eps.sum() / q
    for j in inactive:
        idx = [i - 1 for i in partition.groups[j - 1]]
        out[idx] = p[idx] + spread
    return PowerAllocation.for_partition(out, partition)


def saa_objective(samples: np.ndarray, powers) -> float:
    """Sample-average of sum_i ln(1 + g_i p_i) over fixed draws."""
    p = np.asarray(powers, dtype=float)
    if p.size != samples.shape[0]:
        raise LengthMismatch("powers do not match sample dimension")
    return float(_kernels.saa_objective(samples, p))


def saa_mean_se(samples: np.ndarray, powers) -> tuple[float, float]:
    """Sample mean and standard error of sum_i ln(1 + g_i p_i) over the draws."""
    p = np.asarray(powers, dtype=float)
    if p.size != samples.shape[0]:
        raise LengthMismatch("powers do not match sample dimension")
    values = np.log1p(samples * p[:, None]).sum(axis=0)
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


def oracle_fading_saa(
    partition: GroupPartition,
    n_samples: int = SAA_SAMPLES,
    seed: int = 0,
    gap_tol: float = FW_GAP_TOL_SAA,
    max_iters: int = FW_MAX_ITERS,
) -> OracleResult:
    """Frank-Wolfe on the fixed-sample-set average fading objective."""
    polytope = LaminarPolytope(partition)
    gid, caps, total = polytope.arrays()
    samples = saa_gain_samples(partition.num_antennas, n_samples, seed)
    x, gap, iters = _kernels.fw_saa(samples, gid, caps, total, max_iters, gap_tol)
    return OracleResult(
        allocation=PowerAllocation.for_partition(x, partition),
        objective=saa_objective(samples, x),
        iterations=int(iters),
        certified_gap=float(gap),
    )
