import math

import pytest
from hypothesis import given, settings, strategies as st

from emcmc.constraints import (
    MAX_DEVIATION,
    RANGE_OVER_SUM,
    ConstraintConfig,
    ZoneWeights,
    balance_score,
    balance_value,
    is_feasible,
    zone_weights,
)
from emcmc.graph import Partition
from emcmc.oracle import enumerate_contiguous

from conftest import grid

THREE_ZONE_WEIGHTS = [54_565, 61_711, 58_767]


def test_zone_weights_path(path3):
    zw = zone_weights(path3, Partition((1, 1, 2), 2))
    assert list(zw.w) == [2.0, 1.0]
    assert zw.total == 3.0


def test_zone_weights_single_zone(square):
    zw = zone_weights(square, Partition((1, 1, 1, 1), 1))
    assert list(zw.w) == [4.0]


def test_three_zone_total():
    zw = ZoneWeights(THREE_ZONE_WEIGHTS, sum(THREE_ZONE_WEIGHTS))
    assert zw.total == 175_043


@pytest.mark.parametrize("mode", [RANGE_OVER_SUM, MAX_DEVIATION])
def test_equal_weights_score_zero(mode):
    assert balance_score(ZoneWeights([3.0, 3.0, 3.0], 9.0), mode) == 0.0


def test_three_zone_scores():
    zw = ZoneWeights(THREE_ZONE_WEIGHTS, sum(THREE_ZONE_WEIGHTS))
    mu = 175_043 / 3
    # the lightest zone is furthest from the mean
    assert balance_score(zw, MAX_DEVIATION) == pytest.approx((mu - 54_565) / mu)
    assert balance_score(zw, RANGE_OVER_SUM) == pytest.approx(7_146 / 175_043)


def test_zero_total_rejected():
    with pytest.raises(ValueError):
        balance_value([0.0, 0.0], 0.0)


def test_feasibility_examples(path3):
    assert is_feasible(path3, Partition((1, 1, 2), 2), ConstraintConfig())
    assert not is_feasible(path3, (1, 2, 1), ConstraintConfig(), k=2)
    assert not is_feasible(path3, Partition((1, 1, 2), 2), ConstraintConfig(epsilon=0.2))


def test_strict_inequality(path3):
    # score is exactly 1/3
    assert not is_feasible(path3, (1, 1, 2), ConstraintConfig(epsilon=1 / 3), k=2)
    assert is_feasible(path3, (1, 1, 2), ConstraintConfig(epsilon=0.34), k=2)


def test_empty_zone_infeasible(path3):
    assert not is_feasible(path3, (1, 1, 1), ConstraintConfig(), k=2)


def test_extra_predicates_run_last(path3):
    calls = []

    def pred(graph, assignment):
        calls.append(tuple(assignment))
        return assignment[0] == 1

    cfg = ConstraintConfig(extra=(("first_is_one", pred),))
    assert is_feasible(path3, (1, 1, 2), cfg, k=2)
    assert not is_feasible(path3, (2, 1, 1), cfg, k=2)
    assert not is_feasible(path3, (1, 2, 1), cfg, k=2)  # contiguity fails first
    assert (1, 2, 1) not in calls


def test_negative_epsilon_rejected():
    with pytest.raises(ValueError):
        ConstraintConfig(epsilon=-0.1)


@settings(max_examples=60, deadline=None)
@given(
    weights=st.lists(st.integers(1, 9), min_size=9, max_size=9),
    e1=st.floats(0, 1),
    e2=st.floats(0, 1),
    mode=st.sampled_from([RANGE_OVER_SUM, MAX_DEVIATION]),
)
def test_monotone_in_epsilon(weights, e1, e2, mode):
    g = grid(3, 3, weights)
    lo, hi = sorted((e1, e2))
    for a in enumerate_contiguous(g, 3):
        if is_feasible(g, a, ConstraintConfig(lo, mode), k=3):
            assert is_feasible(g, a, ConstraintConfig(hi, mode), k=3)


def test_infinite_epsilon_is_contiguity(square):
    import itertools

    for labels in itertools.product((1, 2), repeat=4):
        zones = [[i for i, z in enumerate(labels) if z == j] for j in (1, 2)]
        expect = all(zones) and all(
            len(z) == 1 or all(any(abs(a // 2 - b // 2) + abs(a % 2 - b % 2) == 1 for b in z if b != a) for a in z)
            for z in zones
        )
        assert is_feasible(square, labels, ConstraintConfig(math.inf), k=2) == expect
