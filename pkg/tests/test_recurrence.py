from fractions import Fraction

import pytest

from cactuspile.analysis.engine import Configuration
from cactuspile.analysis.recurrence import (
    burn,
    chain_clusters,
    chain_factor,
    count_recurrent_bounds,
    count_recurrent_bruteforce,
    count_recurrent_via_decomposition,
    find_fsc,
    is_forbidden,
    is_recurrent,
    origin_factor,
    radical_at,
    stays_recurrent,
)
from cactuspile.analysis.topology import ClusterShape, build_ball
from cactuspile.errors import ShapeError, SizeGuardError

BALL1_RECURRENT = 25088


def test_maximal_configuration_is_recurrent(ball1):
    assert is_recurrent(ball1, Configuration.uniform(ball1, 3))
    assert find_fsc(ball1, Configuration.uniform(ball1, 3)) is None


def test_minimal_configuration_is_forbidden(ball1):
    config = Configuration.uniform(ball1, 1)
    assert not is_recurrent(ball1, config)
    assert find_fsc(ball1, config) == frozenset(range(ball1.vertex_count))


def test_forbidden_subconfiguration(ball0):
    config = Configuration((1, 1, 3))
    assert is_forbidden(ball0, config, {0, 1})
    assert not is_forbidden(ball0, config, {0, 1, 2})
    assert not is_forbidden(ball0, config, set())
    assert find_fsc(ball0, config) == frozenset({0, 1})


def test_burn_order_breaks_ties_by_vertex(ball0):
    result = burn(ball0.neighbors, (3, 3, 3))
    assert result.burned_order == (0, 1, 2)
    assert result.recurrent


def test_pendant_counts_as_unburnt_neighbor(ball0):
    assert burn(ball0.neighbors, (3, 1, 3)).recurrent
    assert not burn(ball0.neighbors, (3, 1, 3), extra={1: 1}).recurrent


def test_brute_force_counts(ball0):
    assert count_recurrent_bruteforce(ball0) == 16


def test_brute_force_count_on_ball1(ball1):
    assert count_recurrent_bruteforce(ball1) == BALL1_RECURRENT


@pytest.mark.slow
def test_brute_force_count_with_workers(ball1):
    assert count_recurrent_bruteforce(ball1, workers=2) == BALL1_RECURRENT


def test_brute_force_size_guard(ball2):
    with pytest.raises(SizeGuardError):
        count_recurrent_bruteforce(ball2)


def test_chain_decomposition_matches_brute_force(ball1):
    chains = chain_clusters(ball1)
    assert len(chains) > 1
    for chain in chains:
        assert count_recurrent_via_decomposition(ball1, chain) == BALL1_RECURRENT


def test_chain_decomposition_on_larger_ball(ball2):
    counts = {count_recurrent_via_decomposition(ball2, chain) for chain in chain_clusters(ball2, max_cells=3)}
    assert len(counts) == 1


def test_chain_decomposition_rejects_non_chains(ball1):
    with pytest.raises(ShapeError):
        count_recurrent_via_decomposition(ball1, ClusterShape.from_cells([(), (0,), (1,), (2,)]))
    with pytest.raises(ShapeError):
        count_recurrent_via_decomposition(build_ball(0), ClusterShape.from_cells([(), (1,)]))


def test_factors():
    assert origin_factor(Fraction(1), Fraction(1), Fraction(1)) == 49
    assert BALL1_RECURRENT == 49 * 8 ** 3
    assert chain_factor(Fraction(1), Fraction(1)) == 14
    assert origin_factor(Fraction(2), Fraction(2), Fraction(2)) == 100


def test_bounds():
    assert count_recurrent_bounds(1, Fraction(0)) == (100, 100)
    lower, upper = count_recurrent_bounds(3, Fraction(1, 10), strong_product=2)
    assert lower < upper == 2 * 100 * 20 ** 2
    with pytest.raises(ValueError):
        count_recurrent_bounds(0, Fraction(0))


def test_radical_at(ball1):
    assert radical_at(ball1, ((), 1)).cell_count == 1
    assert radical_at(ball1, ((1,), 1)).is_empty


def test_closure_under_addition(ball1, recurrent_sample, ball2):
    assert stays_recurrent(ball1, Configuration.uniform(ball1, 3))
    for config in recurrent_sample[::50]:
        assert is_recurrent(ball2, config)
        assert stays_recurrent(ball2, config, vertices=range(0, ball2.vertex_count, 7))
