"""Instance and config documents, synthetic instance generators, and run file formats.

Instance document (JSON)::

    {"n": 4,
     "units": [{"id": 0, "weight": 1.0, "characteristic": 0.0}, ...],
     "edges": [[0, 1], [0, 2], ...]}

Config document (JSON), every field optional except ``k``::

    {"k": 2, "epsilon": null, "balance_mode": "range_over_sum",
     "energy_mode": "uniform", "energy_terms": [["balance_score", 2.0]],
     "ecmut_p": 1, "mtm_m": 8, "t_semantics": "probability",
     "target_pool_capacity": 64,
     "q": 4, "iterations": 10000, "burn_in": 0, "thin": 1, "p_m": 0.8, "seed": 0,
     "sync_every": 1}

``epsilon`` may be a number, ``null`` or ``"inf"``; the latter two disable balance.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .constraints import RANGE_OVER_SUM, ConstraintConfig, balance_value, zone_weight_list
from .energy import UNIFORM, EnergyConfig
from .engine import STREAM_HEADER, EngineConfig, SampleRecord
from .graph import SpatialGraph, load_graph
from .oracle import FeasibleCatalog, ecmut_reachability, enumerate_contiguous, stirling2

ENGINE_FIELDS = {
    "q", "iterations", "burn_in", "thin", "p_m", "seed", "ecmut_p", "mtm_m",
    "t_semantics", "target_pool_capacity", "sync_every", "chain_p_m",
}


class RetryExhausted(RuntimeError):
    pass


# --- documents ------------------------------------------------------------------------


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> SpatialGraph:
    return load_graph(read_json(path))


def instance_checksum(graph_or_doc) -> str:
    doc = graph_or_doc.to_document() if isinstance(graph_or_doc, SpatialGraph) else load_graph(graph_or_doc).to_document()
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _epsilon(value) -> float:
    if value is None:
        return math.inf
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"bad epsilon {value!r}")
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    k: int
    constraints: ConstraintConfig
    energy: EnergyConfig
    engine: EngineConfig

    def to_document(self) -> dict:
        eps = self.constraints.epsilon
        doc = {
            "k": self.k,
            "epsilon": None if math.isinf(eps) else eps,
            "balance_mode": self.constraints.balance_mode,
            "energy_mode": self.energy.mode,
            "energy_terms": [list(t) for t in self.energy.terms],
        }
        for name in sorted(ENGINE_FIELDS):
            value = getattr(self.engine, name)
            doc[name] = list(value) if isinstance(value, tuple) else value
        return doc


def parse_config(doc: dict, seed: int | None = None) -> RunConfig:
    if "k" not in doc:
        raise ValueError("config requires k")
    constraints = ConstraintConfig(
        epsilon=_epsilon(doc.get("epsilon")),
        balance_mode=doc.get("balance_mode", RANGE_OVER_SUM),
    )
    energy = EnergyConfig(
        mode=doc.get("energy_mode", UNIFORM),
        terms=tuple(tuple(t) for t in doc.get("energy_terms", ())),
        balance_mode=doc.get("balance_mode", RANGE_OVER_SUM),
    )
    engine_args = {name: doc[name] for name in ENGINE_FIELDS if name in doc}
    if seed is not None:
        engine_args["seed"] = seed
    return RunConfig(int(doc["k"]), constraints, energy, EngineConfig(**engine_args))


# --- generators -----------------------------------------------------------------------


def grid_document(rows: int, cols: int, weights=None, characteristics=None) -> dict:
    """r x c rook-adjacency lattice, units numbered row-major.

    Unit weights default to 1; the characteristic defaults to the full weight in
    the left ceil(c/2) columns and 0 elsewhere, so the f(X) metric is defined.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    n = rows * cols
    weights = [1.0] * n if weights is None else [float(w) for w in weights]
    if characteristics is None:
        half = -(-cols // 2)
        characteristics = [weights[i] if (i % cols) < half else 0.0 for i in range(n)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append([i, i + 1])
            if r + 1 < rows:
                edges.append([i, i + cols])
    doc = {
        "n": n,
        "units": [{"id": i, "weight": weights[i], "characteristic": float(characteristics[i])} for i in range(n)],
        "edges": edges,
    }
    load_graph(doc)
    return doc


def random_grid_document(rows: int, cols: int, seed: int, low: int = 1, high: int = 9) -> dict:
    rng = np.random.default_rng(seed)
    w = rng.integers(low, high + 1, size=rows * cols)
    c = rng.integers(0, w + 1)
    return grid_document(rows, cols, w.tolist(), c.tolist())


def disconnection_demo(
    seed: int = 0,
    rows: int = 3,
    cols: int = 3,
    k: int = 2,
    min_states: int = 6,
    max_states: int = 20,
    max_tries: int = 500,
) -> tuple[dict, dict]:
    """Small weighted grid plus balance tolerance whose feasible set splits under single moves.

    Weights are redrawn until the oracle confirms at least two components.
    Returns ``(instance_document, config_document)``.
    """
    seq = np.random.SeedSequence(seed)
    for attempt, child in enumerate(seq.spawn(max_tries)):
        doc = random_grid_document(rows, cols, int(child.generate_state(1)[0]))
        graph = load_graph(doc)
        contiguous = enumerate_contiguous(graph, k)
        total = graph.total_weight
        scores = sorted(
            {balance_value(zone_weight_list(graph, a, k), total, RANGE_OVER_SUM) for a in contiguous}
        )
        for lo, hi in zip(scores, scores[1:]):
            eps = (lo + hi) / 2
            config = ConstraintConfig(epsilon=eps)
            entries = [
                a for a in contiguous
                if balance_value(zone_weight_list(graph, a, k), total, RANGE_OVER_SUM) < eps
            ]
            if len(entries) < min_states:
                continue
            if len(entries) > max_states:
                break
            catalog = FeasibleCatalog(k, entries, stirling2(graph.n, k), len(contiguous))
            if len(ecmut_reachability(catalog, graph, config)) >= 2:
                cfg = {"k": k, "epsilon": eps, "balance_mode": RANGE_OVER_SUM}
                return doc, cfg
    raise RetryExhausted(f"no disconnected instance found in {max_tries} draws")


# --- catalogs and streams ---------------------------------------------------------------


def write_catalog(path, catalog: FeasibleCatalog) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in sorted(catalog.entries):
            fh.write(" ".join(map(str, entry)) + "\n")


def read_catalog(path) -> list[tuple[int, ...]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(tuple(int(x) for x in line.split()))
    return out


def write_stream(path, records: Iterable[SampleRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(STREAM_HEADER + "\n")
        for r in records:
            fh.write(r.to_line() + "\n")


def read_stream(path) -> Iterator[SampleRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line == STREAM_HEADER:
                continue
            it, chain, cid, diss, en, kernel, acc = line.split(",")
            yield SampleRecord(int(it), int(chain), cid, float(diss), float(en), kernel, acc == "1")
