"""RB allocation policies over per-ED utility reports, plus a DP oracle.

The hybrid rule sorts by utility-per-RB and fills the budget greedily; the two
benchmark policies order by channel gain and by raw utility. The exact DP
solver certifies the greedy suboptimality gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence

import numpy as np

DEFAULT_ORACLE_BOUND = 10**5


class OracleScaleError(ValueError):
    """Knapsack DP instance exceeds the configured item*capacity bound."""


class OracleViolationError(ValueError):
    """A heuristic value exceeded the certified optimum: allocator bug."""


@dataclass(frozen=True)
class UtilityReport:
    """One knapsack item: marginal utility gain delta and RB demand w."""

    ed_id: int
    delta: float
    w: int

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if self.w < 0:
            raise ValueError(f"w must be non-negative, got {self.w}")


@dataclass(frozen=True)
class Allocation:
    """Selected EDs with their granted RB counts."""

    selected: FrozenSet[int]
    rb_counts: Dict[int, int]
    capacity_used: int

    def __contains__(self, ed_id: int) -> bool:
        return ed_id in self.selected


def _make_allocation(picked: Iterable[UtilityReport]) -> Allocation:
    picked = list(picked)
    counts = {r.ed_id: r.w for r in picked}
    return Allocation(
        selected=frozenset(r.ed_id for r in picked),
        rb_counts=counts,
        capacity_used=sum(counts.values()),
    )


def allocation_value(allocation: Allocation, reports: Sequence[UtilityReport]) -> float:
    """Total utility gain an allocation collects from the given reports."""
    return sum(r.delta for r in reports if r.ed_id in allocation.selected)


def _sorted_candidates(reports, key) -> List[UtilityReport]:
    # Zero-delta EDs consume budget for no gain and are never selected.
    candidates = [r for r in reports if r.delta > 0]
    return sorted(candidates, key=key)


def _fill_budget(ordered, capacity, halt_on_overflow) -> Allocation:
    picked = [r for r in ordered if r.w == 0]
    remaining = capacity
    for report in (r for r in ordered if r.w > 0):
        if report.w > remaining:
            if halt_on_overflow:
                break
            continue
        picked.append(report)
        remaining -= report.w
    return _make_allocation(picked)


def greedy_allocate(
    reports: Sequence[UtilityReport],
    capacity: int,
    *,
    skip_mode: bool = False,
) -> Allocation:
    """Hybrid rule: pick EDs by descending delta/w until the budget is used up.

    Default halts at the first ED that does not fit; skip_mode continues past
    non-fitting EDs instead. Ties broken by ascending ed_id.
    """
    if capacity < 0:
        raise ValueError(f"capacity must be non-negative, got {capacity}")
    ordered = _sorted_candidates(
        reports, key=lambda r: (-(r.delta / r.w) if r.w > 0 else -np.inf, r.ed_id)
    )
    return _fill_budget(ordered, capacity, halt_on_overflow=not skip_mode)


def channel_policy(
    gains: Sequence[float],
    reports: Sequence[UtilityReport],
    capacity: int,
) -> Allocation:
    """Throughput benchmark: grant w_j RBs in descending channel-gain order.

    gains is indexable by ed_id. Non-fitting EDs are skipped so the budget
    serves as many EDs as the ordering allows.
    """
    if capacity < 0:
        raise ValueError(f"capacity must be non-negative, got {capacity}")
    ordered = _sorted_candidates(reports, key=lambda r: (-gains[r.ed_id], r.ed_id))
    return _fill_budget(ordered, capacity, halt_on_overflow=False)


def utility_policy(reports: Sequence[UtilityReport], capacity: int) -> Allocation:
    """Utility benchmark: grant w_j RBs in descending raw-delta order."""
    if capacity < 0:
        raise ValueError(f"capacity must be non-negative, got {capacity}")
    ordered = _sorted_candidates(reports, key=lambda r: (-r.delta, r.ed_id))
    return _fill_budget(ordered, capacity, halt_on_overflow=False)


def exact_knapsack(
    reports: Sequence[UtilityReport],
    capacity: int,
    *,
    oracle_bound: int = DEFAULT_ORACLE_BOUND,
) -> Allocation:
    """Maximum-value selection via dynamic programming over capacity.

    Tractability guard: the item*capacity product must stay within
    oracle_bound. Zero-weight items with positive delta are always taken.
    """
    if capacity < 0:
        raise ValueError(f"capacity must be non-negative, got {capacity}")
    free = [r for r in reports if r.w == 0 and r.delta > 0]
    items = [r for r in reports if r.w > 0 and r.delta > 0 and r.w <= capacity]
    if len(items) * (capacity + 1) > oracle_bound:
        raise OracleScaleError(
            f"oracle scale: {len(items)} items x capacity {capacity} exceeds "
            f"bound {oracle_bound}"
        )
    value = np.zeros(capacity + 1)
    take = np.zeros((len(items), capacity + 1), dtype=bool)
    for idx, item in enumerate(items):
        improved = value.copy()
        gain = value[: capacity + 1 - item.w] + item.delta
        window = improved[item.w :]
        better = gain > window
        window[better] = gain[better]
        take[idx, item.w :] = better
        value = improved
    picked = list(free)
    c = capacity
    for idx in range(len(items) - 1, -1, -1):
        if take[idx, c]:
            picked.append(items[idx])
            c -= items[idx].w
    return _make_allocation(picked)


def suboptimality_ratio(greedy_value: float, opt_value: float) -> float:
    """greedy/opt in [0, 1], with the 0/0 empty-instance convention of 1."""
    if greedy_value < 0 or opt_value < 0:
        raise ValueError("values must be non-negative")
    if greedy_value > opt_value * (1 + 1e-12) + 1e-12:
        raise OracleViolationError(
            f"oracle violation: greedy {greedy_value} exceeds optimum {opt_value}"
        )
    if opt_value == 0:
        return 1.0
    return min(greedy_value / opt_value, 1.0)
