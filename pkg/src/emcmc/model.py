"""Memoized evaluation of one sampling problem (graph + k + constraints + energy).

Kernels call into a :class:`PartitionModel` with raw label tuples. Every cached
quantity is a pure function of the assignment, so memoization never changes
results, only speed.
"""

from __future__ import annotations

import hashlib
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .constraints import ConstraintConfig, is_feasible, zone_weight_list, balance_value
from .energy import DissimilarityUndefined, EnergyConfig, dissimilarity_raw, energy_raw
from .graph import Partition, SpatialGraph, articulation_points

Assignment = tuple[int, ...]


def canonical_assignment(assignment: Sequence[int]) -> Assignment:
    """Relabel zones 1, 2, ... in order of first appearance over ascending unit ids."""
    mapping: dict[int, int] = {}
    out = []
    for z in assignment:
        label = mapping.get(z)
        if label is None:
            label = mapping[z] = len(mapping) + 1
        out.append(label)
    return tuple(out)


def canonical_id(partition: Partition | Sequence[int]) -> str:
    """Zone-label-invariant identifier of the grouping induced by a partition."""
    assignment = partition.assignment if isinstance(partition, Partition) else partition
    text = ",".join(map(str, canonical_assignment(assignment)))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


class PartitionModel:
    def __init__(
        self,
        graph: SpatialGraph,
        k: int,
        constraints: ConstraintConfig | None = None,
        energy: EnergyConfig | None = None,
        cache_size: int = 1 << 17,
    ):
        if not 1 <= k <= graph.n:
            raise ValueError(f"k={k} must lie in [1, n={graph.n}]")
        self.graph = graph
        self.k = k
        self.constraints = constraints or ConstraintConfig()
        self.energy_config = energy or EnergyConfig()
        self.cache_size = cache_size
        self._install_caches()
        try:
            dissimilarity_raw(graph, [1] * graph.n, 1)
            self.dissimilarity_defined = True
        except DissimilarityUndefined:
            self.dissimilarity_defined = False

    def _install_caches(self):
        size = self.cache_size
        self.feasible_moves = lru_cache(maxsize=size)(self._feasible_moves)
        self.is_feasible = lru_cache(maxsize=size)(self._is_feasible)
        self.energy = lru_cache(maxsize=size)(self._energy)
        self.canonical_id = lru_cache(maxsize=size)(canonical_id)
        self.dissimilarity = lru_cache(maxsize=size)(self._dissimilarity)

    def __getstate__(self):
        state = self.__dict__.copy()
        for name in ("feasible_moves", "is_feasible", "energy", "canonical_id", "dissimilarity"):
            state.pop(name, None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._install_caches()

    def log_density(self, assignment: Assignment) -> float:
        return -self.energy(assignment)

    def _is_feasible(self, assignment: Assignment) -> bool:
        return is_feasible(self.graph, assignment, self.constraints, k=self.k)

    def _energy(self, assignment: Assignment) -> float:
        return energy_raw(self.graph, assignment, self.k, self.energy_config)

    def _dissimilarity(self, assignment: Assignment) -> float:
        if not self.dissimilarity_defined:
            return math.nan
        return dissimilarity_raw(self.graph, assignment, self.k)

    def _feasible_moves(self, assignment: Assignment) -> tuple[tuple[int, int], ...]:
        # assumes `assignment` is itself feasible
        graph, k, cfg = self.graph, self.k, self.constraints
        nbrs = graph.neighbors
        zones: list[list[int]] = [[] for _ in range(k)]
        for i, z in enumerate(assignment):
            zones[z - 1].append(i)
        cuts = [articulation_points(nbrs, m) if len(m) > 2 else set() for m in zones]
        check_balance = cfg.checks_balance
        if check_balance:
            w = zone_weight_list(graph, assignment, k)
            total = math.fsum(w)
        moves = []
        for u in range(graph.n):
            here = assignment[u]
            if len(zones[here - 1]) == 1 or u in cuts[here - 1]:
                continue
            targets = {assignment[v] for v in nbrs[u]}
            targets.discard(here)
            for z in sorted(targets):
                if check_balance:
                    nw = list(w)
                    nw[here - 1] -= graph.weights[u]
                    nw[z - 1] += graph.weights[u]
                    if not balance_value(nw, total, cfg.balance_mode) < cfg.epsilon:
                        continue
                if cfg.extra:
                    trial = list(assignment)
                    trial[u] = z
                    if not all(pred(graph, trial) for _, pred in cfg.extra):
                        continue
                moves.append((u, z))
        return tuple(moves)


class ChainRng:
    """Per-chain random stream backed by a numpy ``Generator``.

    Uniforms are drawn in blocks so scalar draws in the inner loop stay cheap;
    the stream is fully determined by the seed sequence it was built from.
    """

    def __init__(self, seed_seq: np.random.SeedSequence, block: int = 4096):
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    @classmethod
    def for_chain(cls, seed: int, chain: int, stream: int = 0) -> "ChainRng":
        return cls(np.random.SeedSequence(entropy=seed, spawn_key=(chain, stream)))

    def random(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("empty range")
        i = int(self.random() * n)
        return i if i < n else n - 1

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def weighted_index(self, weights: Sequence[float]) -> int:
        total = math.fsum(weights)
        if total <= 0:
            raise ValueError("weights sum to zero")
        target = self.random() * total
        acc = 0.0
        last = 0
        for i, w in enumerate(weights):
            if w > 0:
                acc += w
                last = i
                if target < acc:
                    return i
        return last

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]
