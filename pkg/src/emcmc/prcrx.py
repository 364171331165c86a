"""Spatial path-relinking crossover (PRCRX) as a Multiple-Try Metropolis kernel.

The units on which a current and a target partition disagree are split into
overlap groups: connected pieces sharing one (current zone, target zone) pair.
A relinking walk moves those groups one at a time to their target zone, only
ever choosing groups whose move keeps every zone connected and non-empty.
States along the walk form the proposal set.

Selection weights follow the standard multiple-try form
``w(y | x) = pi(y) * T(y -> x) * lambda`` with ``lambda = 1``. With the default
"probability" semantics T is the probability of an ordered group sequence
leading from y back to x; "paper_count" semantics uses the falling factorial
C (C-1) ... (C-c+1) of the forward walk instead.

The forward set walks toward the partner while the reference set walks from
y back toward x, and all candidates share one walk, so the acceptance ratio
does not make the kernel exactly pi-invariant. Oracle runs show a measurable
occupancy bias when crossover is active (see the README).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Partition, SpatialGraph
from .model import ChainRng, PartitionModel

log = logging.getLogger(__name__)

PROBABILITY = "probability"
PAPER_COUNT = "paper_count"
T_SEMANTICS = (PROBABILITY, PAPER_COUNT)
_BRUTE_FORCE_K = 5


@dataclass(frozen=True)
class OverlapGroup:
    units: tuple[int, ...]
    source_zone: int
    target_zone: int

    @property
    def movable(self) -> bool:
        return self.source_zone != self.target_zone


@dataclass(frozen=True)
class OverlapDecomposition:
    groups: tuple[OverlapGroup, ...]

    @property
    def movable(self) -> tuple[OverlapGroup, ...]:
        return tuple(g for g in self.groups if g.movable)

    @property
    def C(self) -> int:
        return sum(1 for g in self.groups if g.movable)

    @property
    def d(self) -> int:
        return sum(len(g.units) for g in self.groups if g.movable)


def _labels(p) -> tuple[int, ...]:
    return p.assignment if isinstance(p, Partition) else tuple(p)


def overlap_decompose(graph: SpatialGraph, source, target) -> OverlapDecomposition:
    """Split units into connected groups sharing a (source zone, target zone) pair."""
    src, tgt = _labels(source), _labels(target)
    if len(src) != graph.n or len(tgt) != graph.n:
        raise ValueError("partition length does not match the graph")
    nbrs = graph.neighbors
    seen = [False] * graph.n
    groups = []
    for start in range(graph.n):
        if seen[start]:
            continue
        key = (src[start], tgt[start])
        seen[start] = True
        comp = [start]
        stack = [start]
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if not seen[v] and src[v] == key[0] and tgt[v] == key[1]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        groups.append(OverlapGroup(tuple(sorted(comp)), key[0], key[1]))
    return OverlapDecomposition(tuple(groups))


def seed_groups(decomposition: OverlapDecomposition, k: int) -> list[OverlapGroup]:
    """One anchor group per target zone, ``result[z - 1]`` for zone ``z``.

    Prefers the largest group already carrying its target label; otherwise the
    largest group headed for that zone. Ties go to the smallest leading unit.
    """
    seeds = []
    for z in range(1, k + 1):
        headed = [g for g in decomposition.groups if g.target_zone == z]
        assert headed, f"no group targets zone {z}"
        stay = [g for g in headed if g.source_zone == z]
        pool = stay or headed
        seeds.append(min(pool, key=lambda g: (-len(g.units), g.units[0])))
    return seeds


def align_labels(source, target, k: int) -> tuple[int, ...]:
    """Relabel ``target`` zones to maximise unit overlap with ``source``.

    Labels are arbitrary, so the relabelled target is the same grouping; this
    keeps relinking walks from rewriting zones that already coincide.
    """
    src, tgt = _labels(source), _labels(target)
    n = len(src)
    pairs = Counter(zip(src, tgt))
    if all(a == b for a, b in pairs):
        return tgt
    if k <= _BRUTE_FORCE_K:
        best, best_perm = None, None
        for perm in permutations(range(1, k + 1)):
            # perm[b - 1] is the new label of target zone b; identity wins ties
            score = sum(cnt for (a, b), cnt in pairs.items() if perm[b - 1] == a) * (n + 1)
            score += sum(1 for b in range(1, k + 1) if perm[b - 1] == b)
            if best is None or score > best:
                best, best_perm = score, perm
        return tuple(best_perm[b - 1] for b in tgt)
    overlap = np.zeros((k, k), dtype=np.int64)
    for (a, b), cnt in pairs.items():
        overlap[a - 1, b - 1] = cnt
    score = overlap * (n + 1) + np.eye(k, dtype=np.int64)
    rows, cols = linear_sum_assignment(score, maximize=True)
    relabel = {int(c) + 1: int(r) + 1 for r, c in zip(rows, cols)}
    return tuple(relabel[b] for b in tgt)


# --- relinking walks -----------------------------------------------------------------


def _zone_sets(assignment, k) -> list[set[int]]:
    zones = [set() for _ in range(k)]
    for i, z in enumerate(assignment):
        zones[z - 1].add(i)
    return zones


def _connected(nbrs, members: set[int]) -> bool:
    start = next(iter(members))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v in members and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(members)


def _can_move(nbrs, state, zones, group: OverlapGroup, gset: frozenset) -> bool:
    rest = zones[group.source_zone - 1] - gset
    if not rest:
        return False
    b = group.target_zone
    if not any(state[v] == b for u in group.units for v in nbrs[u]):
        return False
    return _connected(nbrs, rest)


def _apply(state, zones, group: OverlapGroup, gset: frozenset):
    for u in group.units:
        state[u] = group.target_zone
    zones[group.source_zone - 1] -= gset
    zones[group.target_zone - 1] |= gset


@dataclass
class Walk:
    """A realised relinking walk: the state after each group move."""

    states: list[tuple[int, ...]]
    feasible: list[bool]
    choice_counts: list[int]
    total_groups: int
    complete: bool
    target: tuple[int, ...]

    def __len__(self):
        return len(self.states)

    def steps(self, k: int) -> list[tuple[Partition, bool]]:
        return [(Partition(s, k), f) for s, f in zip(self.states, self.feasible)]


def walk_path(model: PartitionModel, source, target, rng: ChainRng, aligned: bool = False) -> Walk:
    """Random relinking walk from ``source`` toward ``target``.

    Each step picks uniformly among the not-yet-moved groups whose move keeps
    every zone connected and non-empty. Stops at the target or at a dead end.
    """
    src = _labels(source)
    tgt = _labels(target) if aligned else align_labels(src, target, model.k)
    nbrs = model.graph.neighbors
    remaining = [(g, frozenset(g.units)) for g in overlap_decompose(model.graph, src, tgt).movable]
    total = len(remaining)
    state = list(src)
    zones = _zone_sets(src, model.k)
    states, flags, counts = [], [], []
    while remaining:
        options = [i for i, (g, gs) in enumerate(remaining) if _can_move(nbrs, state, zones, g, gs)]
        if not options:
            break
        counts.append(len(options))
        g, gs = remaining.pop(options[rng.randrange(len(options))])
        _apply(state, zones, g, gs)
        snap = tuple(state)
        states.append(snap)
        flags.append(model.is_feasible(snap))
    return Walk(states, flags, counts, total, not remaining, tgt)


def transition_prob(c: int, step_choice_counts: Sequence[int], semantics: str = PROBABILITY, total_groups: int | None = None) -> float:
    """Transition weight for a state reached after ``c`` group moves.

    ``probability``: product of 1/count over the first ``c`` steps, i.e. the
    probability of that ordered group sequence. ``paper_count``: the falling
    factorial C (C-1) ... (C-c+1) with C = ``total_groups`` (default: the
    first step's choice count).
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    if c > len(step_choice_counts):
        raise ValueError(f"c={c} exceeds recorded path length {len(step_choice_counts)}")
    if semantics == PROBABILITY:
        prod = 1
        for x in step_choice_counts[:c]:
            if x <= 0:
                raise ValueError("choice counts must be positive")
            prod *= x
        return 1.0 / prod
    if semantics == PAPER_COUNT:
        big_c = step_choice_counts[0] if total_groups is None else total_groups
        return float(math.perm(big_c, c))
    raise ValueError(f"unknown T semantics {semantics!r}")


def _ordered_counts(model: PartitionModel, source: tuple, target: tuple, budget: int = 5000):
    """Choice counts along the first completing group order (depth-first, lowest unit first).

    Returns ``(counts, complete)``. A completing order exists whenever
    ``source`` was itself reached from ``target`` by a walk; if the search
    budget runs out the greedy prefix is returned with ``complete=False``.
    """
    nbrs = model.graph.neighbors
    groups = [(g, frozenset(g.units)) for g in overlap_decompose(model.graph, source, target).movable]
    if not groups:
        return [], True
    state = list(source)
    zones = _zone_sets(source, model.k)
    counts: list[int] = []
    best: list[int] = []
    work = 0

    def dfs(remaining: list[int]) -> bool:
        nonlocal work, best
        if not remaining:
            return True
        options = [i for i in remaining if _can_move(nbrs, state, zones, *groups[i])]
        work += 1
        if not options or work > budget:
            if len(counts) > len(best):
                best = list(counts)
            return False
        counts.append(len(options))
        for i in options:
            g, gs = groups[i]
            saved = [set(zones[g.source_zone - 1]), set(zones[g.target_zone - 1])]
            _apply(state, zones, g, gs)
            if dfs([j for j in remaining if j != i]):
                return True
            for u in g.units:
                state[u] = g.source_zone
            zones[g.source_zone - 1], zones[g.target_zone - 1] = saved
            if work > budget:
                break
        counts.pop()
        return False

    if dfs(list(range(len(groups)))):
        return counts, True
    return best, False


class ReverseWeights:
    """Cache of T(a -> b) under probability semantics, keyed by the two assignments."""

    def __init__(self, model: PartitionModel, maxsize: int = 1 << 17):
        self.model = model
        self.incomplete = 0
        self._cached = lru_cache(maxsize=maxsize)(self._compute)

    def __call__(self, a: tuple, b: tuple) -> float:
        return self._cached(a, b)

    def _compute(self, a: tuple, b: tuple) -> float:
        counts, complete = _ordered_counts(self.model, a, align_labels(a, b, self.model.k))
        if not complete:
            self.incomplete += 1
            log.debug("reverse order search incomplete; using realised counts %s", counts)
        if not counts:
            return 0.0 if not complete else 1.0
        return transition_prob(len(counts), counts)


# --- proposal sets and the acceptance ratio ---------------------------------------------


@dataclass
class Candidate:
    state: tuple[int, ...]
    c: int
    weight: float


@dataclass
class ProposalSet:
    candidates: list[Candidate]
    walk: Walk | None = None
    chosen_index: int | None = None

    @property
    def total_weight(self) -> float:
        return math.fsum(c.weight for c in self.candidates)


def _weight(model, reverse: ReverseWeights, semantics, state, flag, c, walk, anchor, base_energy) -> float:
    if not flag:
        return 0.0
    density = math.exp(-(model.energy(state) - base_energy))
    if semantics == PROBABILITY:
        return density * reverse(state, anchor)
    return density * transition_prob(c, walk.choice_counts, PAPER_COUNT, walk.total_groups)


def generate_proposals(
    model: PartitionModel,
    current,
    target,
    m: int,
    rng: ChainRng,
    semantics: str = PROBABILITY,
    reverse: ReverseWeights | None = None,
    base_energy: float | None = None,
) -> ProposalSet:
    """One walk toward ``target``; ``m`` uniform draws (with replacement) of a step index.

    Candidate weight is ``pi(y) T(y -> current)`` (``lambda = 1``); zero when
    ``y`` is infeasible. Densities are taken relative to ``base_energy``
    (default: the current state's energy) so the constant cancels in ratios.
    """
    cur = _labels(current)
    reverse = reverse or ReverseWeights(model)
    if base_energy is None:
        base_energy = model.energy(cur)
    walk = walk_path(model, cur, target, rng)
    if not walk.states:
        return ProposalSet([Candidate(cur, 0, 0.0) for _ in range(m)], walk)
    cands = []
    for _ in range(m):
        c = 1 + rng.randrange(len(walk.states))
        state = walk.states[c - 1]
        w = _weight(model, reverse, semantics, state, walk.feasible[c - 1], c, walk, cur, base_energy)
        cands.append(Candidate(state, c, w))
    return ProposalSet(cands, walk)


def mtm_ratio(forward: ProposalSet | Sequence[float], reverse: ProposalSet | Sequence[float], current_weight: float) -> float:
    """min(1, sum of forward weights / (current state's reverse weight + sum of reverse weights))."""
    fw = forward.total_weight if isinstance(forward, ProposalSet) else math.fsum(forward)
    rw = reverse.total_weight if isinstance(reverse, ProposalSet) else math.fsum(reverse)
    num = fw
    den = current_weight + rw
    if num <= 0:
        return 0.0
    if den <= 0:
        log.warning("multiple-try denominator is zero with positive numerator; rejecting")
        return 0.0
    return min(1.0, num / den)


@dataclass
class CrossoverOutcome:
    state: tuple[int, ...]
    accepted: bool
    ratio: float = 0.0
    dead_end: bool = False
    forward: ProposalSet | None = field(default=None, repr=False)


def step_assignment(
    model: PartitionModel,
    current: tuple,
    target: tuple,
    m: int,
    rng: ChainRng,
    semantics: str = PROBABILITY,
    reverse: ReverseWeights | None = None,
) -> CrossoverOutcome:
    if semantics not in T_SEMANTICS:
        raise ValueError(f"unknown T semantics {semantics!r}")
    reverse = reverse or ReverseWeights(model)
    base = model.energy(current)
    fwd = generate_proposals(model, current, target, m, rng, semantics, reverse, base)
    if fwd.walk is None or not fwd.walk.states:
        return CrossoverOutcome(current, False, dead_end=fwd.walk is not None and fwd.walk.total_groups > 0)
    weights = [c.weight for c in fwd.candidates]
    if math.fsum(weights) <= 0:
        return CrossoverOutcome(current, False, forward=fwd)
    idx = rng.weighted_index(weights)
    fwd.chosen_index = idx
    y = fwd.candidates[idx].state

    # reference set: m - 1 states on a walk from y back toward the current state
    back = generate_proposals(model, y, current, m - 1, rng, semantics, reverse, base) if m > 1 else ProposalSet([])
    if semantics == PROBABILITY:
        own = reverse(current, y)
    else:
        bw = back.walk if back.walk is not None else walk_path(model, y, current, rng)
        own = float(math.factorial(bw.total_groups))
    ratio = mtm_ratio(fwd, back, own)
    if ratio >= 1.0 or (ratio > 0.0 and rng.random() < ratio):
        return CrossoverOutcome(y, True, ratio, forward=fwd)
    return CrossoverOutcome(current, False, ratio, forward=fwd)


def step_prcrx(
    model: PartitionModel,
    current: Partition,
    target: Partition,
    m: int,
    rng: ChainRng,
    semantics: str = PROBABILITY,
    reverse: ReverseWeights | None = None,
) -> tuple[Partition, bool]:
    out = step_assignment(model, current.assignment, target.assignment, m, rng, semantics, reverse)
    return (Partition(out.state, current.k) if out.accepted else current), out.accepted
