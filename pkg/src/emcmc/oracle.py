"""Exhaustive ground truth for small instances: counts, catalogs, reachability, TV distance."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import networkx as nx

from .constraints import ConstraintConfig, is_feasible
from .graph import SpatialGraph, connected_components, is_connected
from .model import PartitionModel, canonical_id

DEFAULT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    pass


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind by the row recurrence S(n,k) = k S(n-1,k) + S(n-1,k-1)."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    row = [1] + [0] * k  # S(0, j)
    for i in range(1, n + 1):
        for j in range(min(i, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def stirling2_explicit(n: int, k: int) -> int:
    total = sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1))
    return total // math.factorial(k)


def _connected_sets_with(graph: SpatialGraph, root: int, allowed: frozenset, counter: list):
    """Every connected subset of ``allowed`` that contains ``root``, each exactly once.

    Binary branching on the next frontier unit (take it / forbid it); a set is
    emitted when its frontier is exhausted.
    """
    nbrs = graph.neighbors

    def grow(members: list, frontier: list, forbidden: set):
        counter[0] += 1
        if counter[0] > counter[1]:
            raise BudgetExceeded(f"enumeration exceeded {counter[1]} expansions")
        if not frontier:
            yield members
            return
        v = frontier[0]
        rest = frontier[1:]
        seen = set(members) | set(rest) | forbidden | {v}
        extra = [w for w in nbrs[v] if w in allowed and w not in seen]
        yield from grow(members + [v], rest + extra, forbidden)
        forbidden.add(v)
        yield from grow(members, rest, forbidden)
        forbidden.discard(v)

    start = [w for w in nbrs[root] if w in allowed]
    yield from grow([root], start, set())


def enumerate_contiguous(graph: SpatialGraph, k: int, budget: int = DEFAULT_BUDGET) -> list[tuple[int, ...]]:
    """All partitions into ``k`` non-empty connected zones, in canonical labelling.

    Zone j always holds the smallest unit not covered by zones 1..j-1, which
    is exactly first-appearance labelling, so each grouping appears once.
    """
    if not 1 <= k <= graph.n:
        raise ValueError(f"k={k} must lie in [1, n={graph.n}]")
    n = graph.n
    assignment = [0] * n
    out: list[tuple[int, ...]] = []
    counter = [0, budget]

    def place(label: int, remaining: frozenset):
        if label == k:
            if is_connected(graph, remaining):
                for u in remaining:
                    assignment[u] = label
                out.append(tuple(assignment))
            return
        root = min(remaining)
        zones_left = k - label
        for members in _connected_sets_with(graph, root, remaining, counter):
            rest = remaining.difference(members)
            if len(rest) < zones_left:
                continue
            # each leftover component must host at least one whole zone
            if len(connected_components(graph, rest)) > zones_left:
                continue
            for u in members:
                assignment[u] = label
            place(label + 1, rest)

    place(1, frozenset(range(n)))
    out.sort()
    return out


def enumerate_naive(graph: SpatialGraph, k: int) -> list[tuple[int, ...]]:
    """Reference enumerator: scan all k**n label strings, keep canonical contiguous ones."""
    import itertools

    out = []
    for labels in itertools.product(range(1, k + 1), repeat=graph.n):
        highest = 0
        ok = True
        for z in labels:
            if z > highest + 1:
                ok = False
                break
            highest = max(highest, z)
        if not ok or highest != k:
            continue
        if is_feasible(graph, labels, ConstraintConfig(), k=k):
            out.append(labels)
    return out


@dataclass
class FeasibleCatalog:
    k: int
    entries: list[tuple[int, ...]]
    unconstrained: int
    contiguous: int

    @property
    def feasible(self) -> int:
        return len(self.entries)

    @property
    def counts(self) -> dict:
        return {"unconstrained": self.unconstrained, "contiguous": self.contiguous, "feasible": self.feasible}

    def ids(self) -> list[str]:
        return [canonical_id(e) for e in self.entries]

    def __len__(self):
        return len(self.entries)


def enumerate_feasible(graph: SpatialGraph, k: int, config: ConstraintConfig, budget: int = DEFAULT_BUDGET) -> FeasibleCatalog:
    contiguous = enumerate_contiguous(graph, k, budget)
    entries = [a for a in contiguous if is_feasible(graph, a, config, k=k)]
    return FeasibleCatalog(k, entries, stirling2(graph.n, k), len(contiguous))


def ecmut_reachability(catalog: FeasibleCatalog, graph: SpatialGraph, config: ConstraintConfig) -> list[set[str]]:
    """Components of the feasible set under single feasible boundary moves, largest first."""
    model = PartitionModel(graph, catalog.k, config)
    g = nx.Graph()
    for entry in catalog.entries:
        src = canonical_id(entry)
        g.add_node(src)
        for u, z in model.feasible_moves(entry):
            nxt = list(entry)
            nxt[u] = z
            g.add_edge(src, canonical_id(nxt))
    comps = [set(c) for c in nx.connected_components(g)]
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


def tv_distance(observed: Mapping[str, int] | Counter, catalog: FeasibleCatalog | list[str]) -> float:
    """Total variation distance between observed frequencies and uniform over the catalog."""
    ids = catalog.ids() if isinstance(catalog, FeasibleCatalog) else list(catalog)
    if not ids:
        raise ValueError("catalog is empty")
    total = sum(observed.values())
    if total <= 0:
        raise ValueError("no observations")
    known = set(ids)
    unknown = [i for i in observed if i not in known and observed[i]]
    if unknown:
        raise ValueError(f"{len(unknown)} observed ids are not in the catalog, e.g. {unknown[0]}")
    u = 1.0 / len(known)
    return 0.5 * math.fsum(abs(observed.get(i, 0) / total - u) for i in known)
