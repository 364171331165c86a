"""Population of Markov chains mixing ECMUT and PRCRX steps.

Chains advance in synchronous epochs. At the start of each epoch the current
state of every chain is frozen into a snapshot; crossover partners are drawn
from the other chains' snapshots plus the chain's own target pool. Each chain
owns its random stream, so output depends only on the seed and the config,
never on how chains are spread over worker processes.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import time
from collections import deque
from dataclasses import asdict, dataclass, field

from . import ecmut, prcrx
from .constraints import ConstraintConfig, balance_value, zone_weight_list
from .graph import Partition
from .model import ChainRng, PartitionModel, canonical_assignment

log = logging.getLogger(__name__)

ECMUT = "ecmut"
PRCRX = "prcrx"
INIT_STREAM = 1
STEP_STREAM = 0


class InitializationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    q: int = 4
    iterations: int = 10_000
    p_m: float = 0.8
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    ecmut_p: int = 1
    mtm_m: int = 8
    t_semantics: str = prcrx.PROBABILITY
    target_pool_capacity: int = 64
    sync_every: int = 1
    chain_p_m: tuple[float, ...] | None = None
    init_retries: int = 200
    repair_moves: int | None = None

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0 <= self.burn_in <= self.iterations:
            raise ValueError("burn_in must lie in [0, iterations]")
        if self.ecmut_p < 1 or self.mtm_m < 1 or self.sync_every < 1:
            raise ValueError("ecmut_p, mtm_m and sync_every must be positive")
        if self.t_semantics not in prcrx.T_SEMANTICS:
            raise ValueError(f"unknown t_semantics {self.t_semantics!r}")
        if self.chain_p_m is not None:
            object.__setattr__(self, "chain_p_m", tuple(float(p) for p in self.chain_p_m))
            if len(self.chain_p_m) != self.q:
                raise ValueError("chain_p_m needs one entry per chain")
        for p in self.mutation_probs():
            if not 0.0 <= p <= 1.0:
                raise ValueError("p_m must lie in [0, 1]")
            if p < 1.0 and self.q < 2:
                raise ValueError("crossover (p_m < 1) needs at least two chains")

    def mutation_probs(self) -> tuple[float, ...]:
        return self.chain_p_m if self.chain_p_m is not None else (self.p_m,) * self.q


@dataclass
class KernelStats:
    attempts: int = 0
    accepts: int = 0

    @property
    def rate(self) -> float:
        return self.accepts / self.attempts if self.attempts else 0.0


@dataclass
class ChainState:
    id: int
    current: tuple[int, ...]
    target_pool: deque
    rng: ChainRng
    stats: dict[str, KernelStats] = field(default_factory=lambda: {ECMUT: KernelStats(), PRCRX: KernelStats()})
    dead_ends: int = 0
    reverse_incomplete: int = 0


@dataclass(frozen=True)
class SampleRecord:
    iteration: int
    chain: int
    canonical_id: str
    dissimilarity: float
    energy: float
    kernel: str
    accepted: bool

    def to_line(self) -> str:
        return (
            f"{self.iteration},{self.chain},{self.canonical_id},{self.dissimilarity!r},"
            f"{self.energy!r},{self.kernel},{int(self.accepted)}"
        )


STREAM_HEADER = "iteration,chain,canonical_id,dissimilarity,energy,kernel,accepted"


@dataclass
class RunResult:
    records: list[SampleRecord]
    chains: list[ChainState]
    report: dict


# --- initial states ---------------------------------------------------------------


def grow_partition(model: PartitionModel, rng: ChainRng) -> tuple[int, ...]:
    """Random contiguous k-partition by seeded region growing toward the lightest zone."""
    graph, k = model.graph, model.k
    n = graph.n
    units = list(range(n))
    rng.shuffle(units)
    a = [0] * n
    w = [0.0] * k
    frontier: list[set[int]] = [set() for _ in range(k)]
    for z, s in enumerate(units[:k], start=1):
        a[s] = z
        w[z - 1] += graph.weights[s]
    for z, s in enumerate(units[:k], start=1):
        frontier[z - 1].update(v for v in graph.neighbors[s] if a[v] == 0)
    left = n - k
    while left:
        order = sorted(range(k), key=lambda i: (w[i], rng.random()))
        zi = next(i for i in order if frontier[i])
        u = rng.choice(sorted(frontier[zi]))
        a[u] = zi + 1
        w[zi] += graph.weights[u]
        left -= 1
        for f in frontier:
            f.discard(u)
        frontier[zi].update(v for v in graph.neighbors[u] if a[v] == 0)
    return tuple(a)


def repair_balance(model: PartitionModel, state: tuple, budget: int, rng: ChainRng, relaxed: PartitionModel) -> tuple:
    cfg = model.constraints
    if not cfg.checks_balance:
        return state
    graph, k = model.graph, model.k
    total = graph.total_weight
    score = lambda s: balance_value(zone_weight_list(graph, s, k), total, cfg.balance_mode)
    current = score(state)
    for _ in range(budget):
        if current < cfg.epsilon:
            break
        best, best_moves = current, []
        for u, z in relaxed.feasible_moves(state):
            trial = list(state)
            trial[u] = z
            s = score(trial)
            if s < best - 1e-15:
                best, best_moves = s, [(u, z)]
            elif best_moves and abs(s - best) <= 1e-15:
                best_moves.append((u, z))
        if not best_moves:
            break
        u, z = rng.choice(best_moves)
        nxt = list(state)
        nxt[u] = z
        state, current = tuple(nxt), best
    return state


def init_population(model: PartitionModel, config: EngineConfig, initial=None) -> list[ChainState]:
    """Feasible starting states: given explicitly, or region-grown with balance repair.

    Each chain tries to start in a grouping no earlier chain uses; duplicates
    are accepted once the retry budget for distinctness is spent.
    """
    chains = []
    if initial is not None:
        if len(initial) != config.q:
            raise ValueError("need one initial state per chain")
        for cid, s in enumerate(initial):
            a = s.assignment if isinstance(s, Partition) else tuple(s)
            if not model.is_feasible(a):
                raise InitializationError(f"initial state for chain {cid} is infeasible")
            chains.append(_new_chain(cid, a, config))
        return chains

    relaxed = PartitionModel(model.graph, model.k, ConstraintConfig())
    budget = config.repair_moves if config.repair_moves is not None else 4 * model.graph.n
    used: set = set()
    best_score = math.inf
    extras_failed: dict[str, int] = {}
    for cid in range(config.q):
        rng = ChainRng.for_chain(config.seed, cid, INIT_STREAM)
        fallback = None
        for attempt in range(config.init_retries):
            s = grow_partition(model, rng)
            s = repair_balance(model, s, budget, rng, relaxed)
            if model.is_feasible(s):
                if canonical_assignment(s) not in used:
                    break
                fallback = fallback or s
            else:
                if model.constraints.checks_balance:
                    w = zone_weight_list(model.graph, s, model.k)
                    best_score = min(best_score, balance_value(w, sum(w), model.constraints.balance_mode))
                for name, pred in model.constraints.extra:
                    if not pred(model.graph, s):
                        extras_failed[name] = extras_failed.get(name, 0) + 1
            if attempt >= config.init_retries // 4 and fallback is not None:
                s = fallback
                break
        else:
            if fallback is None:
                raise InitializationError(_tightest(model, best_score, extras_failed))
            s = fallback
        used.add(canonical_assignment(s))
        chains.append(_new_chain(cid, s, config))
    return chains


def _tightest(model: PartitionModel, best_score: float, extras_failed: dict) -> str:
    cfg = model.constraints
    if cfg.checks_balance and best_score >= cfg.epsilon:
        return (
            f"no feasible start found: balance constraint ({cfg.balance_mode} < {cfg.epsilon}) "
            f"unmet, best score reached {best_score:.6g}"
        )
    if extras_failed:
        name = max(extras_failed, key=extras_failed.get)
        return f"no feasible start found: extra constraint {name!r} failed most often"
    return "no feasible start found: contiguity"


def _new_chain(cid: int, state: tuple, config: EngineConfig) -> ChainState:
    return ChainState(
        id=cid,
        current=tuple(state),
        target_pool=deque(maxlen=config.target_pool_capacity),
        rng=ChainRng.for_chain(config.seed, cid, STEP_STREAM),
    )


# --- stepping -----------------------------------------------------------------------


def _advance(model, config, reverse, chain: ChainState, snapshot, start: int, span: int):
    p_m = config.mutation_probs()[chain.id]
    others = [s for j, s in enumerate(snapshot) if j != chain.id]
    rng = chain.rng
    records = []
    for it in range(start + 1, start + span + 1):
        x = chain.current
        if p_m >= 1.0 or rng.random() < p_m:
            kernel = ECMUT
            y, accepted = ecmut.step_assignment(model, x, config.ecmut_p, rng)
        else:
            kernel = PRCRX
            partners = others + list(chain.target_pool)
            target = partners[rng.randrange(len(partners))]
            before = reverse.incomplete
            out = prcrx.step_assignment(model, x, target, config.mtm_m, rng, config.t_semantics, reverse)
            chain.reverse_incomplete += reverse.incomplete - before
            y, accepted = out.state, out.accepted
            chain.dead_ends += out.dead_end
            if accepted:
                chain.target_pool.append(x)
        st = chain.stats[kernel]
        st.attempts += 1
        st.accepts += accepted
        chain.current = y
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            records.append(
                SampleRecord(it, chain.id, model.canonical_id(y), model.dissimilarity(y), model.energy(y), kernel, accepted)
            )
    return chain, records


_WORKER: dict = {}


def _worker_init(model, config):
    _WORKER["model"] = model
    _WORKER["config"] = config
    _WORKER["reverse"] = prcrx.ReverseWeights(model)


def _worker_advance(args):
    chain, snapshot, start, span = args
    return _advance(_WORKER["model"], _WORKER["config"], _WORKER["reverse"], chain, snapshot, start, span)


def run(model: PartitionModel, config: EngineConfig, initial=None, workers: int = 1) -> RunResult:
    """Run ``config.iterations`` synchronous iterations of all chains.

    Records every ``thin``-th state after ``burn_in``, ordered by (iteration, chain).
    """
    t0 = time.perf_counter()
    chains = init_population(model, config, initial)
    reverse = prcrx.ReverseWeights(model)
    records: list[SampleRecord] = []
    workers = max(1, min(workers, config.q))
    pool = None
    if workers > 1:
        pool = multiprocessing.get_context("fork").Pool(workers, initializer=_worker_init, initargs=(model, config))
    try:
        t = 0
        chunk = -(-config.q // workers)
        while t < config.iterations:
            span = min(config.sync_every, config.iterations - t)
            snapshot = tuple(c.current for c in chains)
            if pool is None:
                results = [_advance(model, config, reverse, c, snapshot, t, span) for c in chains]
            else:
                results = pool.map(_worker_advance, [(c, snapshot, t, span) for c in chains], chunksize=chunk)
            chains = [c for c, _ in results]
            batch = [r for _, recs in results for r in recs]
            batch.sort(key=lambda r: (r.iteration, r.chain))
            records.extend(batch)
            t += span
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    elapsed = time.perf_counter() - t0
    incomplete = sum(c.reverse_incomplete for c in chains)
    return RunResult(records, chains, _report(config, chains, records, elapsed, incomplete, workers))


def _report(config, chains, records, elapsed, incomplete, workers) -> dict:
    steps = config.iterations * config.q
    return {
        "config": asdict(config),
        "workers": workers,
        "chains": [
            {
                "id": c.id,
                "ecmut_attempts": c.stats[ECMUT].attempts,
                "ecmut_acceptance": c.stats[ECMUT].rate,
                "prcrx_attempts": c.stats[PRCRX].attempts,
                "prcrx_acceptance": c.stats[PRCRX].rate,
                "prcrx_dead_ends": c.dead_ends,
            }
            for c in chains
        ],
        "records": len(records),
        "unique_states_recorded": len({r.canonical_id for r in records}),
        "reverse_order_incomplete": incomplete,
        "elapsed_seconds": elapsed,
        "steps_per_second": steps / elapsed if elapsed > 0 else math.inf,
        "records_per_second": len(records) / elapsed if elapsed > 0 else math.inf,
    }
