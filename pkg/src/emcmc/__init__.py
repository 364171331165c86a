"""Evolutionary MCMC sampling of contiguous, weight-balanced graph partitions."""

from .constraints import ConstraintConfig, ZoneWeights, balance_score, is_feasible, zone_weights
from .energy import EnergyConfig, dissimilarity, energy
from .engine import EngineConfig, RunResult, SampleRecord, init_population, run
from .graph import Partition, SpatialGraph, load_graph
from .model import PartitionModel, canonical_id
from .oracle import FeasibleCatalog, enumerate_contiguous, enumerate_feasible, stirling2, tv_distance

__all__ = [
    "ConstraintConfig", "ZoneWeights", "balance_score", "is_feasible", "zone_weights",
    "EnergyConfig", "dissimilarity", "energy",
    "EngineConfig", "RunResult", "SampleRecord", "init_population", "run",
    "Partition", "SpatialGraph", "load_graph",
    "PartitionModel", "canonical_id",
    "FeasibleCatalog", "enumerate_contiguous", "enumerate_feasible", "stirling2", "tv_distance",
]
__version__ = "0.1.0"
