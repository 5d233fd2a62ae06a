"""Finite-step optimal allocation for i.i.d. fading orthogonal channels.

With i.i.d. gains the optimum depends only on the partition: groups whose
per-antenna cap average falls below the running total-power average are
"active" and pinned at their caps; the residual power spreads uniformly over
everything else.  Gains are deliberately not an input.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problem import GroupPartition, PowerAllocation

#: Absolute tie tolerance on the activation comparison; at an exact tie both
#: branches yield the same allocation, this only guards float noise.
TIE_TOL = 1e-12


class AllocationCase(Enum):
    """Shortcut regimes for the fading allocation."""

    UNIFORM = "Case 1"       # total budget dominates: uniform P_T/m is optimal
    ALL_CAPPED = "Case 2"    # caps dominate: every group pinned at its cap
    GENERAL = "General"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class FadingSolveReport:
    allocation: PowerAllocation
    active_groups: tuple[int, ...]   # 1-based group indices, discovery order
    rounds: int
    residual_power: float
    residual_count: int


def detect_case(partition: GroupPartition) -> AllocationCase:
    """Classify the partition; at a simultaneous tie Case 2 is reported."""
    caps = np.asarray(partition.caps)
    sizes = np.asarray([len(g) for g in partition.groups], dtype=float)
    if partition.total >= caps.sum():
        return AllocationCase.ALL_CAPPED
    if np.all(partition.total / partition.num_antennas <= caps / sizes):
        return AllocationCase.UNIFORM
    return AllocationCase.GENERAL


def opa_fading(partition: GroupPartition) -> FadingSolveReport:
    """Exact optimal allocation via the active-group passes.

    Each pass compares the remaining per-antenna average P/L against every
    remaining group's cap average; all groups qualifying under the pass-start
    snapshot are activated before P/L is recomputed.  Terminates in at most
    one pass per group.
    """
    m = partition.num_antennas
    p = np.zeros(m)
    remaining = list(range(partition.num_groups))
    power_left = partition.total
    count_left = m
    active_order: list[int] = []
    rounds = 0

    while remaining:
        snapshot = power_left / count_left
        newly = [
            j
            for j in remaining
            if snapshot >= partition.caps[j] / len(partition.groups[j]) - TIE_TOL
        ]
        if not newly:
            break
        rounds += 1
        for j in newly:
            grp = partition.groups[j]
            p[[i - 1 for i in grp]] = partition.caps[j] / len(grp)
            power_left -= partition.caps[j]
            count_left -= len(grp)
            remaining.remove(j)
            active_order.append(j + 1)
        # The running average only grows when active groups are removed.
        if count_left > 0:
            assert power_left / count_left >= snapshot - TIE_TOL

    if count_left > 0:
        share = power_left / count_left
        for j in remaining:
            p[[i - 1 for i in partition.groups[j]]] = share
        residual_power = power_left
    else:
        residual_power = partition.total - sum(partition.caps)

    return FadingSolveReport(
        allocation=PowerAllocation.for_partition(p, partition),
        active_groups=tuple(active_order),
        rounds=rounds,
        residual_power=residual_power,
        residual_count=count_left,
    )
