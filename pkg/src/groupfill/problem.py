"""Problem inputs (gains, groups, budgets) and the shared allocation types.

All types are immutable after construction; numpy arrays held by them are
marked read-only so instances can be shared freely between threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyProblem,
    IndexOutOfRange,
    NegativeGain,
    NonFiniteInput,
    NonPositiveBudget,
    OverlappingGroups,
    UncoveredAntenna,
    ValidationError,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

#: Absolute slack tolerance (power units) accepted on budget constraints.
#: Allocations produced by bisection are only approximately tight.
EPS_FEAS = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GainVector:
    """Per-antenna channel power gains (diagonal of the channel Gram matrix)."""

    gains: np.ndarray

    def __post_init__(self):
        g = _frozen(self.gains)
        object.__setattr__(self, "gains", g)
        if g.ndim != 1 or g.size < 1:
            raise ValidationError("gains must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(g)):
            raise NonFiniteInput("gains contain non-finite values")
        if np.any(g <= 0):
            raise NegativeGain("validated gains must be strictly positive")

    def __len__(self) -> int:
        return self.gains.size


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint antenna groups with per-group caps and a total budget.

    Groups use 1-based antenna indices and are stored sorted by smallest
    member; the caps list follows the stored group order.
    """

    groups: tuple[tuple[int, ...], ...]
    caps: tuple[float, ...]
    total: float

    def __post_init__(self):
        if len(self.groups) < 1 or len(self.groups) != len(self.caps):
            raise ValidationError("need one cap per group and at least one group")
        groups = tuple(tuple(sorted(int(i) for i in grp)) for grp in self.groups)
        caps = tuple(float(c) for c in self.caps)
        order = sorted(range(len(groups)), key=lambda j: groups[j][0] if groups[j] else 0)
        groups = tuple(groups[j] for j in order)
        caps = tuple(caps[j] for j in order)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "total", float(self.total))

        for c in caps + (self.total,):
            if not math.isfinite(c):
                raise NonFiniteInput("budgets must be finite")
            if c <= 0:
                raise NonPositiveBudget("budgets must be strictly positive")
        m = sum(len(grp) for grp in groups)
        # A bitmap over 1..m filled exactly once checks disjointness and cover.
        seen = np.zeros(m, dtype=bool)
        for grp in groups:
            if not grp:
                raise ValidationError("groups must be non-empty")
            for i in grp:
                if not 1 <= i <= m:
                    raise UncoveredAntenna(f"antenna index {i} outside 1..{m}")
                if seen[i - 1]:
                    raise OverlappingGroups(f"antenna {i} appears in two groups")
                seen[i - 1] = True
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0]) + 1
            raise UncoveredAntenna(f"antenna {missing} belongs to no group")

    @property
    def num_antennas(self) -> int:
        return sum(len(grp) for grp in self.groups)

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    def group_index_array(self) -> np.ndarray:
        """0-based group id for each antenna (0-based positions)."""
        gid = np.empty(self.num_antennas, dtype=np.int64)
        for j, grp in enumerate(self.groups):
            for i in grp:
                gid[i - 1] = j
        return gid


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-antenna powers with feasibility slack metadata."""

    powers: np.ndarray
    slack_total: float = math.inf
    slack_groups: tuple[float, ...] = ()

    def __post_init__(self):
        p = _frozen(self.powers)
        object.__setattr__(self, "powers", p)
        if np.any(p < 0):
            raise ValidationError("powers must be non-negative")
        if self.slack_total < -EPS_FEAS or any(s < -EPS_FEAS for s in self.slack_groups):
            raise ValidationError("allocation violates a budget beyond tolerance")

    @classmethod
    def for_partition(cls, powers, partition: GroupPartition) -> "PowerAllocation":
        p = np.asarray(powers, dtype=float)
        slack_groups = tuple(
            cap - float(p[[i - 1 for i in grp]].sum())
            for grp, cap in zip(partition.groups, partition.caps)
        )
        return cls(p, partition.total - float(p.sum()), slack_groups)

    @classmethod
    def for_total(cls, powers, total: float) -> "PowerAllocation":
        p = np.asarray(powers, dtype=float)
        return cls(p, float(total) - float(p.sum()))

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())


@dataclass(frozen=True)
class DualSolution:
    """Lagrange multipliers with the residuals of their defining equations."""

    mu: float
    lambdas: tuple[float, ...]
    residuals: tuple[float, ...]

    def __post_init__(self):
        if self.mu < 0 or any(l < 0 for l in self.lambdas):
            raise ValidationError("dual variables must be non-negative")

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


@dataclass(frozen=True, eq=False)
class ValidatedProblem:
    """Gains plus partition with consistent dimensions.

    ``index_map[i]`` is the original 1-based antenna index of internal
    antenna ``i + 1``; zero-gain antennas are absent.
    """

    gains: GainVector
    partition: GroupPartition
    index_map: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = len(self.gains)
        if self.partition.num_antennas != m:
            raise ValidationError("gains and partition dimensions differ")
        if not self.index_map:
            object.__setattr__(self, "index_map", tuple(range(1, m + 1)))
        if len(set(self.index_map)) != m:
            raise ValidationError("index_map must be a bijection")
        gid = self.partition.group_index_array()
        gid.setflags(write=False)
        object.__setattr__(self, "_group_ids", gid)

    @property
    def num_antennas(self) -> int:
        return len(self.gains)

    @property
    def num_groups(self) -> int:
        return self.partition.num_groups

    def group_ids(self) -> np.ndarray:
        return self._group_ids


def validate(gains, groups, caps, total_power) -> ValidatedProblem:
    """Validate raw inputs into a ValidatedProblem.

    Zero-gain antennas are stripped (they carry no rate) and recorded in
    the index map; a group that becomes empty loses its cap as well.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValidationError("gains must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(g)):
        raise NonFiniteInput("gains contain non-finite values")
    if np.any(g < 0):
        raise NegativeGain("gains must be non-negative")

    # Validate the partition on the original indexing first.
    original = GroupPartition(tuple(tuple(grp) for grp in groups), tuple(caps), total_power)
    if original.num_antennas != g.size:
        raise ValidationError("partition does not cover the same antenna count as gains")

    keep = np.flatnonzero(g > 0)
    if keep.size == 0:
        raise EmptyProblem("every antenna has zero gain")
    new_index = {int(orig) + 1: new + 1 for new, orig in enumerate(keep)}

    new_groups, new_caps = [], []
    for grp, cap in zip(original.groups, original.caps):
        remapped = tuple(new_index[i] for i in grp if i in new_index)
        if remapped:
            new_groups.append(remapped)
            new_caps.append(cap)
    partition = GroupPartition(tuple(new_groups), tuple(new_caps), original.total)
    return ValidatedProblem(
        GainVector(g[keep]),
        partition,
        tuple(int(i) + 1 for i in keep),
    )


def group_of(problem: ValidatedProblem, i: int) -> int:
    """1-based group index of internal antenna ``i`` (1-based)."""
    if not 1 <= i <= problem.num_antennas:
        raise IndexOutOfRange(f"antenna index {i} outside 1..{problem.num_antennas}")
    return int(problem.group_ids()[i - 1]) + 1


def expand_allocation(problem: ValidatedProblem, powers) -> np.ndarray:
    """Re-expand an internal allocation to original antenna indexing (p=0 for
    stripped antennas)."""
    p = np.asarray(powers, dtype=float)
    out = np.zeros(max(problem.index_map), dtype=float)
    for internal, original in enumerate(problem.index_map):
        out[original - 1] = p[internal]
    return out


def problem_from_dict(doc: dict) -> ValidatedProblem:
    """Build a problem from the file schema: gains / groups / caps / total_power."""
    try:
        return validate(doc["gains"], doc["groups"], doc["caps"], doc["total_power"])
    except KeyError as exc:
        raise ValidationError(f"problem file missing key {exc}") from exc


def load_document(path) -> dict:
    """Read a problem file (.json or .toml, identical schema) as a raw dict."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    elif path.suffix.lower() == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        raise ValidationError(f"unsupported problem file extension: {path.suffix!r}")
    if not isinstance(doc, dict):
        raise ValidationError("problem file must contain a single document/object")
    return doc


def load_problem(path) -> ValidatedProblem:
    """Read and validate a problem file (.json or .toml, identical schema)."""
    return problem_from_dict(load_document(path))


def partition_from_dict(doc: dict) -> GroupPartition:
    """Build just the partition from the file schema (gains not consulted)."""
    try:
        return GroupPartition(
            tuple(tuple(grp) for grp in doc["groups"]),
            tuple(doc["caps"]),
            doc["total_power"],
        )
    except KeyError as exc:
        raise ValidationError(f"problem file missing key {exc}") from exc


def random_problem(rng: np.random.Generator, max_m: int = 12, max_s: int = 4) -> ValidatedProblem:
    """Random problem for verification suites: log-uniform gains in [0.1, 10],
    budgets uniform in (0, 2m]."""
    m = int(rng.integers(1, max_m + 1))
    s = int(rng.integers(1, min(max_s, m) + 1))
    gains = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=m))
    # Assign each antenna a group, forcing every group non-empty.
    labels = np.concatenate([np.arange(s), rng.integers(0, s, size=m - s)])
    rng.shuffle(labels)
    groups = tuple(
        tuple(int(i) + 1 for i in np.flatnonzero(labels == j)) for j in range(s)
    )
    caps = tuple(float(rng.uniform(0, 2 * m)) or 1e-6 for _ in range(s))
    total = float(rng.uniform(0, 2 * m)) or 1e-6
    return ValidatedProblem(GainVector(gains), GroupPartition(groups, caps, total))


def random_partition(rng: np.random.Generator, max_m: int = 10, max_s: int = 4) -> GroupPartition:
    """Random partition only (fading problems do not use gains)."""
    return random_problem(rng, max_m, max_s).partition
