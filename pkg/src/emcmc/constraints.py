"""Feasibility predicates: non-empty contiguous zones, weight balance, optional extras."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .graph import Partition, SpatialGraph, is_connected

RANGE_OVER_SUM = "range_over_sum"
MAX_DEVIATION = "max_deviation"
BALANCE_MODES = (RANGE_OVER_SUM, MAX_DEVIATION)

# (graph, assignment) -> bool; assignment is the raw label tuple
ExtraPredicate = Callable[[SpatialGraph, Sequence[int]], bool]


@dataclass(frozen=True)
class ConstraintConfig:
    epsilon: float = math.inf
    balance_mode: str = RANGE_OVER_SUM
    extra: tuple[tuple[str, ExtraPredicate], ...] = field(default=())

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if self.balance_mode not in BALANCE_MODES:
            raise ValueError(f"unknown balance mode {self.balance_mode!r}")

    @property
    def checks_balance(self) -> bool:
        return not math.isinf(self.epsilon)


@dataclass(frozen=True)
class ZoneWeights:
    w: tuple[float, ...]
    total: float


def zone_weight_list(graph: SpatialGraph, assignment: Sequence[int], k: int) -> list[float]:
    w = [0.0] * k
    for i, z in enumerate(assignment):  # ascending unit id: fixed summation order
        w[z - 1] += graph.weights[i]
    return w


def zone_weights(graph: SpatialGraph, partition: Partition) -> ZoneWeights:
    w = zone_weight_list(graph, partition.assignment, partition.k)
    return ZoneWeights(tuple(w), math.fsum(w))


def balance_value(w: Sequence[float], total: float, mode: str = RANGE_OVER_SUM) -> float:
    if total <= 0:
        raise ValueError("balance is undefined when the total weight is zero")
    if mode == RANGE_OVER_SUM:
        return (max(w) - min(w)) / total
    if mode == MAX_DEVIATION:
        mu = total / len(w)
        return max(abs(x - mu) for x in w) / mu
    raise ValueError(f"unknown balance mode {mode!r}")


def balance_score(weights: ZoneWeights, mode: str = RANGE_OVER_SUM) -> float:
    """``(max - min) / total`` or ``max |w_i - mean| / mean`` depending on ``mode``."""
    return balance_value(weights.w, weights.total, mode)


def is_feasible(graph: SpatialGraph, partition: Partition | Sequence[int], config: ConstraintConfig, k: int | None = None) -> bool:
    """Check, in order: non-empty zones, contiguity, balance (strict), extras.

    Accepts either a :class:`Partition` or a raw label sequence plus ``k``;
    the raw form lets callers test candidate states that may have an empty zone.
    """
    if isinstance(partition, Partition):
        assignment, k = partition.assignment, partition.k
    else:
        assignment = partition
        if k is None:
            raise TypeError("k is required for a raw assignment")
    if len(assignment) != graph.n:
        raise ValueError("assignment length does not match the graph")
    zones: list[list[int]] = [[] for _ in range(k)]
    for i, z in enumerate(assignment):
        zones[z - 1].append(i)
    if any(not members for members in zones):
        return False
    if not all(is_connected(graph, members) for members in zones):
        return False
    if config.checks_balance:
        w = zone_weight_list(graph, assignment, k)
        if not balance_value(w, math.fsum(w), config.balance_mode) < config.epsilon:
            return False
    return all(pred(graph, assignment) for _, pred in config.extra)
