"""Energy H defining the target density exp(-H) on feasible states, and the f(X) summary metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .constraints import RANGE_OVER_SUM, balance_value, zone_weight_list
from .graph import Partition, SpatialGraph

UNIFORM = "uniform"
WEIGHTED = "weighted_objectives"


class DissimilarityUndefined(ValueError):
    """The overall characteristic share R is 0 or 1, so f(X) has a zero denominator."""


@dataclass(frozen=True)
class EnergyConfig:
    mode: str = UNIFORM
    terms: tuple[tuple[str, float], ...] = ()
    balance_mode: str = RANGE_OVER_SUM

    def __post_init__(self):
        if self.mode not in (UNIFORM, WEIGHTED):
            raise ValueError(f"unknown energy mode {self.mode!r}")
        object.__setattr__(self, "terms", tuple((str(n), float(w)) for n, w in self.terms))
        for name, _ in self.terms:
            if name not in OBJECTIVES:
                raise ValueError(f"unknown objective {name!r}; known: {sorted(OBJECTIVES)}")


def dissimilarity_raw(graph: SpatialGraph, assignment: Sequence[int], k: int) -> float:
    w = [0.0] * k
    c = [0.0] * k
    for i, z in enumerate(assignment):
        w[z - 1] += graph.weights[i]
        c[z - 1] += graph.characteristics[i]
    total_w = math.fsum(w)
    total_c = math.fsum(c)
    if total_w <= 0:
        raise DissimilarityUndefined("total weight is zero")
    big_r = total_c / total_w
    if big_r <= 0.0 or big_r >= 1.0:
        raise DissimilarityUndefined(f"overall characteristic share R={big_r} must lie strictly in (0, 1)")
    acc = 0.0
    for wi, ci in zip(w, c):
        if wi > 0:  # zero-weight zones carry zero share
            acc += (wi / total_w) * abs(ci / wi - big_r)
    return 0.5 * acc / (big_r * (1.0 - big_r))


def dissimilarity(graph: SpatialGraph, partition: Partition) -> float:
    """Weighted dissimilarity index of the characteristic across zones, in [0, 1].

    0 means every zone carries the overall characteristic share; 1 means
    complete separation.
    """
    return dissimilarity_raw(graph, partition.assignment, partition.k)


def _balance_objective(graph, assignment, k, config: EnergyConfig) -> float:
    w = zone_weight_list(graph, assignment, k)
    return balance_value(w, math.fsum(w), config.balance_mode)


def _dissimilarity_objective(graph, assignment, k, config) -> float:
    return dissimilarity_raw(graph, assignment, k)


def _cut_edges_objective(graph, assignment, k, config) -> float:
    return float(sum(1 for a, b in graph.edges if assignment[a] != assignment[b]))


# every objective must depend on zone contents only, never on the labels
OBJECTIVES: dict[str, Callable] = {
    "balance_score": _balance_objective,
    "dissimilarity": _dissimilarity_objective,
    "cut_edges": _cut_edges_objective,
}


def energy_raw(graph: SpatialGraph, assignment: Sequence[int], k: int, config: EnergyConfig) -> float:
    if config.mode == UNIFORM:
        return 0.0
    return math.fsum(weight * OBJECTIVES[name](graph, assignment, k, config) for name, weight in config.terms)


def energy(graph: SpatialGraph, partition: Partition, config: EnergyConfig) -> float:
    return energy_raw(graph, partition.assignment, partition.k, config)
