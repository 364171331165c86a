"""Unit-adjacency graph, partitions, and the connectivity primitives the kernels use."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Raised when an instance document or graph construction is invalid."""


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialGraph:
    """Immutable undirected graph over ``n`` spatial units.

    ``weights[i]`` and ``characteristics[i]`` are the per-unit attributes;
    ``neighbors[i]`` is the ascending tuple of units adjacent to ``i``.
    """

    n: int
    weights: tuple[float, ...]
    characteristics: tuple[float, ...]
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[Sequence[int]],
        weights: Sequence[float] | None = None,
        characteristics: Sequence[float] | None = None,
    ) -> "SpatialGraph":
        if n < 1:
            raise GraphError("graph must have at least one unit")
        weights = tuple(float(w) for w in (weights if weights is not None else [1.0] * n))
        if characteristics is None:
            characteristics = [0.0] * n
        characteristics = tuple(float(c) for c in characteristics)
        if len(weights) != n or len(characteristics) != n:
            raise GraphError("per-unit attribute count does not match n")
        for i, (w, c) in enumerate(zip(weights, characteristics)):
            if w < 0:
                raise GraphError(f"negative weight on unit {i}")
            if c < 0:
                raise GraphError(f"negative characteristic on unit {i}")
            if c > w:
                raise GraphError(f"characteristic exceeds weight on unit {i}")

        pairs = set()
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"malformed edge {e!r}")
            a, b = int(e[0]), int(e[1])
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"unit id out of range in edge ({a}, {b})")
            if a == b:
                raise GraphError(f"self-loop on unit {a}")
            pairs.add((min(a, b), max(a, b)))
        edge_list = tuple(sorted(pairs))
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for a, b in edge_list:
            nbrs[a].append(b)
            nbrs[b].append(a)
        graph = cls(
            n=n,
            weights=weights,
            characteristics=characteristics,
            edges=edge_list,
            neighbors=tuple(tuple(sorted(x)) for x in nbrs),
        )
        if len(connected_components(graph, range(n))) != 1:
            raise GraphError("graph is disconnected")
        return graph

    @property
    def total_weight(self) -> float:
        return sum(self.weights)

    def to_document(self) -> dict:
        return {
            "n": self.n,
            "units": [
                {"id": i, "weight": w, "characteristic": c}
                for i, (w, c) in enumerate(zip(self.weights, self.characteristics))
            ],
            "edges": [list(e) for e in self.edges],
        }


def load_graph(document: Mapping) -> SpatialGraph:
    """Validate an instance document (see ``emcmc.io``) and build the graph."""
    try:
        n = int(document["n"])
        units = list(document["units"])
        edges = [list(e) for e in document["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed document: {exc}") from exc
    if len(units) != n:
        raise GraphError(f"expected {n} unit records, found {len(units)}")
    weights = [0.0] * n
    chars = [0.0] * n
    seen = set()
    for rec in units:
        try:
            i = int(rec["id"])
            w = float(rec.get("weight", 1.0))
            c = float(rec.get("characteristic", 0.0))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise GraphError(f"malformed unit record {rec!r}") from exc
        if not 0 <= i < n:
            raise GraphError(f"unit id out of range: {i}")
        if i in seen:
            raise GraphError(f"duplicate unit id {i}")
        seen.add(i)
        weights[i] = w
        chars[i] = c
    return SpatialGraph.build(n, edges, weights, chars)


@dataclass(frozen=True)
class Partition:
    """Assignment of each unit to a zone label in ``1..k``; no zone may be empty."""

    assignment: tuple[int, ...]
    k: int

    def __post_init__(self):
        a = tuple(int(z) for z in self.assignment)
        object.__setattr__(self, "assignment", a)
        if self.k < 1:
            raise PartitionError("k must be positive")
        if any(z < 1 or z > self.k for z in a):
            raise PartitionError(f"zone label outside [1, {self.k}]")
        if len(set(a)) != self.k:
            raise PartitionError("every zone must contain at least one unit")

    @property
    def n(self) -> int:
        return len(self.assignment)

    def zone(self, z: int) -> list[int]:
        return [i for i, a in enumerate(self.assignment) if a == z]

    def zones(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, z in enumerate(self.assignment):
            out[z - 1].append(i)
        return out

    def moved(self, unit: int, zone: int) -> "Partition":
        a = list(self.assignment)
        a[unit] = zone
        return Partition(tuple(a), self.k)


def _bfs(neighbors, start: int, members) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in neighbors[u]:
            if v in members and v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_connected(graph: SpatialGraph, subset: Iterable[int]) -> bool:
    members = set(subset)
    if not members:
        raise ValueError("connectivity of an empty subset is undefined")
    start = next(iter(members))
    return len(_bfs(graph.neighbors, start, members)) == len(members)


def connected_components(graph: SpatialGraph, subset: Iterable[int]) -> list[set[int]]:
    """Maximal connected pieces of ``subset``, ordered by smallest member."""
    remaining = set(subset)
    members = frozenset(remaining)
    comps = []
    for u in sorted(members):
        if u in remaining:
            comp = _bfs(graph.neighbors, u, members)
            remaining -= comp
            comps.append(comp)
    return comps


def boundary_moves(graph: SpatialGraph, partition: Partition) -> list[tuple[int, int]]:
    """All (unit, zone) pairs where the unit touches ``zone`` but does not belong to it."""
    a = partition.assignment
    moves = []
    for u in range(graph.n):
        here = a[u]
        targets = {a[v] for v in graph.neighbors[u]}
        targets.discard(here)
        moves.extend((u, z) for z in sorted(targets))
    return moves


def articulation_points(neighbors, members: Iterable[int]) -> set[int]:
    """Cut vertices of the subgraph induced by ``members`` (iterative Tarjan).

    Removing a unit that is not returned here leaves its component connected.
    """
    member_set = set(members)
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    cut: set[int] = set()
    clock = 0
    for root in sorted(member_set):
        if root in disc:
            continue
        disc[root] = low[root] = clock
        clock += 1
        root_children = 0
        stack = [(root, -1, iter(neighbors[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if v not in member_set:
                    continue
                if v not in disc:
                    disc[v] = low[v] = clock
                    clock += 1
                    if u == root:
                        root_children += 1
                    stack.append((v, u, iter(neighbors[v])))
                    advanced = True
                    break
                if v != parent:
                    low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if parent >= 0:
                low[parent] = min(low[parent], low[u])
                if parent != root and low[u] >= disc[parent]:
                    cut.add(parent)
        if root_children > 1:
            cut.add(root)
    return cut
