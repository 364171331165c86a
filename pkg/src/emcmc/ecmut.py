"""Ejection-chain mutation (ECMUT-p) as a Metropolis-Hastings kernel.

A proposal is an ordered chain of ``p`` single-unit boundary reassignments,
each drawn uniformly from the feasible (unit, zone) moves of the state it
starts from. Because every move is reversible inside the feasible set, the
reverse chain retraces the same states backwards, and the acceptance ratio is
the ratio of the two chain probabilities times exp(-dH). For p = 1 this is
M_x / M_y * exp(-dH), with M the number of feasible moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constraints import ConstraintConfig, is_feasible
from .graph import Partition, SpatialGraph, boundary_moves
from .model import ChainRng, PartitionModel

Move = tuple[int, int, int]  # unit, from-zone, to-zone


@dataclass(frozen=True)
class MutationProposal:
    moves: tuple[Move, ...]
    result: Partition
    forward_log_prob: float
    reverse_log_prob: float


def feasible_moves(graph: SpatialGraph, partition: Partition, config: ConstraintConfig) -> list[tuple[int, int]]:
    """Boundary moves whose result is still feasible, by direct re-checking.

    This is the slow reference; samplers use ``PartitionModel.feasible_moves``,
    which derives the same list from articulation points.
    """
    out = []
    for u, z in boundary_moves(graph, partition):
        trial = list(partition.assignment)
        trial[u] = z
        if is_feasible(graph, trial, config, k=partition.k):
            out.append((u, z))
    return out


def _propose(model: PartitionModel, x: tuple, p: int, rng: ChainRng):
    state = x
    moves = []
    fwd = 0.0
    for _ in range(p):
        options = model.feasible_moves(state)
        if not options:
            return None
        u, z = options[rng.randrange(len(options))]
        fwd -= math.log(len(options))
        moves.append((u, state[u], z))
        nxt = list(state)
        nxt[u] = z
        state = tuple(nxt)
    # reverse chain visits the same intermediates backwards: y, ..., s_1
    rev = 0.0
    cur = state
    for u, src, _dst in reversed(moves):
        rev -= math.log(len(model.feasible_moves(cur)))
        nxt = list(cur)
        nxt[u] = src
        cur = tuple(nxt)
    return moves, state, fwd, rev


def propose_ecmut(model: PartitionModel, state: Partition, p: int, rng: ChainRng) -> MutationProposal | None:
    """Draw an ECMUT-p proposal from a feasible state; ``None`` means no move exists."""
    if p < 1:
        raise ValueError("p must be at least 1")
    out = _propose(model, state.assignment, p, rng)
    if out is None:
        return None
    moves, y, fwd, rev = out
    return MutationProposal(tuple(moves), Partition(y, state.k), fwd, rev)


def mh_ratio_ecmut(x_energy: float, y_energy: float, forward_log_prob: float, reverse_log_prob: float) -> float:
    return math.exp(reverse_log_prob - forward_log_prob - (y_energy - x_energy))


def step_assignment(model: PartitionModel, x: tuple, p: int, rng: ChainRng) -> tuple[tuple, bool]:
    out = _propose(model, x, p, rng)
    if out is None:
        return x, False
    _, y, fwd, rev = out
    log_r = rev - fwd - (model.energy(y) - model.energy(x))
    if log_r >= 0.0 or rng.random() < math.exp(log_r):
        return y, True
    return x, False


def step_ecmut(model: PartitionModel, state: Partition, p: int, rng: ChainRng) -> tuple[Partition, bool]:
    y, accepted = step_assignment(model, state.assignment, p, rng)
    return (Partition(y, state.k) if accepted else state), accepted
