import pytest

from emcmc.energy import (
    DissimilarityUndefined,
    EnergyConfig,
    dissimilarity,
    dissimilarity_raw,
    energy,
    energy_raw,
)
from emcmc.graph import Partition
from emcmc.oracle import enumerate_contiguous

from conftest import grid


def test_uniform_energy_is_zero(grid4):
    assert energy(grid4, Partition((1,) * 8 + (2,) * 8, 2), EnergyConfig()) == 0.0


def test_weighted_balance_term(path3):
    cfg = EnergyConfig(mode="weighted_objectives", terms=(("balance_score", 2.0),))
    assert energy(path3, Partition((1, 1, 2), 2), cfg) == pytest.approx(2 / 3)


def test_energy_label_symmetric(path3):
    cfg = EnergyConfig(mode="weighted_objectives", terms=(("balance_score", 1.5), ("cut_edges", 0.5)))
    assert energy_raw(path3, (1, 1, 2), 2, cfg) == energy_raw(path3, (2, 2, 1), 2, cfg)


def test_unknown_objective():
    with pytest.raises(ValueError):
        EnergyConfig(mode="weighted_objectives", terms=(("nope", 1.0),))


def test_dissimilarity_perfect_mixing():
    # every zone has half its weight in the characteristic
    g = grid(1, 4, [2, 2, 2, 2], [1, 1, 1, 1])
    assert dissimilarity(g, Partition((1, 1, 2, 2), 2)) == pytest.approx(0.0)


def test_dissimilarity_full_segregation():
    g = grid(1, 2, [1, 1], [1, 0])
    assert dissimilarity(g, Partition((1, 2), 2)) == pytest.approx(1.0)


def test_dissimilarity_partial():
    g = grid(1, 2, [5, 5], [3, 2])
    assert dissimilarity(g, Partition((1, 2), 2)) == pytest.approx(0.2)


@pytest.mark.parametrize("chars", [[0, 0, 0], [1, 1, 1]])
def test_dissimilarity_undefined(chars):
    g = grid(1, 3, [1, 1, 1], chars)
    with pytest.raises(DissimilarityUndefined):
        dissimilarity_raw(g, (1, 1, 2), 2)


def test_dissimilarity_label_invariant():
    g = grid(2, 3, [1, 2, 3, 4, 5, 6], [1, 0, 3, 1, 0, 6])
    assert dissimilarity_raw(g, (1, 1, 2, 1, 2, 2), 2) == pytest.approx(dissimilarity_raw(g, (2, 2, 1, 2, 1, 1), 2))
