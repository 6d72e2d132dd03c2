from fractions import Fraction

import pytest

from cactuspile.analysis.engine import Configuration
from cactuspile.analysis.radicals import (
    EMPTY_CENSUS,
    EMPTY_RADICAL,
    EXPECTED_TABLE3,
    Allowance,
    RadicalCensus,
    RadicalRatios,
    balanced_census,
    balanced_x,
    census_bruteforce,
    census_recursive,
    classify_heights,
    classify_radical,
    combine_origin,
    combine_pair,
    combine_ratios,
    compare_tables,
    derive_tables,
    ratios_recursive,
    stopper_fractions,
    transition_table,
    x_map,
    x_map_partial,
)
from cactuspile.analysis.sweep import configurations
from cactuspile.analysis.topology import EMPTY_SUBTREE, balanced_shape, build_rooted_subtree, shapes_with_cells

B0_CENSUS = RadicalCensus(n_strong=8, n_weak=8, n_stopper=8, n_strong_stopper=3)


def test_single_cell_census():
    assert census_bruteforce(build_rooted_subtree(balanced_shape(0))) == B0_CENSUS
    assert balanced_census(0) == B0_CENSUS
    assert combine_pair(EMPTY_CENSUS, EMPTY_CENSUS) == B0_CENSUS


def test_empty_radical():
    assert classify_radical(EMPTY_SUBTREE, None) == EMPTY_RADICAL
    assert census_bruteforce(EMPTY_SUBTREE) == EMPTY_CENSUS


def test_single_cell_classes():
    graph = build_rooted_subtree(balanced_shape(0)).graph
    assert classify_heights(graph, (3, 3, 3)).allowance is Allowance.STRONG
    assert classify_heights(graph, (1, 2, 3)).allowance is Allowance.WEAK
    assert classify_heights(graph, (1, 1, 3)).allowance is Allowance.FORBIDDEN
    assert not classify_heights(graph, (1, 1, 3)).stopper
    assert classify_heights(graph, (2, 3, 3)).stopper


@pytest.mark.parametrize("count", [1, 2])
def test_classifiers_agree(count):
    for shape in shapes_with_cells(count):
        subtree = build_rooted_subtree(shape)
        for heights in configurations(subtree.vertex_count):
            expected = classify_radical(subtree, Configuration(heights))
            assert classify_heights(subtree.graph, heights) == expected


@pytest.mark.parametrize("count", [1, 2, 3])
def test_recursive_census_matches_brute_force(count):
    for shape in shapes_with_cells(count):
        assert census_recursive(shape) == census_bruteforce(build_rooted_subtree(shape))


@pytest.mark.slow
def test_recursive_census_matches_brute_force_on_four_cells():
    for shape in shapes_with_cells(4):
        assert census_recursive(shape) == census_bruteforce(build_rooted_subtree(shape), workers=2)


def test_balanced_x():
    for n in range(21):
        assert balanced_x(n) == 2 - Fraction(1, 2 ** n)
    for n in range(14):
        assert balanced_census(n).x == balanced_x(n)


def test_x_map():
    assert x_map(Fraction(1), Fraction(1)) == Fraction(3, 2)
    assert x_map(Fraction(2), Fraction(2)) == 2
    assert x_map(Fraction(0), Fraction(0)) == 1
    assert x_map_partial(Fraction(1), Fraction(1)) == Fraction(1, 4)
    h = Fraction(1, 10 ** 6)
    slope = (x_map(Fraction(3, 2) + h, Fraction(1)) - x_map(Fraction(3, 2), Fraction(1))) / h
    assert abs(slope - x_map_partial(Fraction(3, 2), Fraction(1))) < Fraction(1, 10 ** 5)


GRID = [Fraction(k, 8) for k in range(16)]


def test_x_map_is_monotone_on_grid():
    for c in GRID:
        values = [x_map(a, c) for a in GRID]
        assert all(lo < hi for lo, hi in zip(values, values[1:]))
        for a in GRID:
            assert x_map(a, c) == x_map(c, a)
            assert x_map_partial(a, c) > 0
            assert 1 <= x_map(a, c) < 2


def full_depth(shape):
    """Largest n such that B_n sits at the root of `shape`; -1 for the empty shape."""
    if shape is None:
        return -1
    return 1 + min(full_depth(shape[0]), full_depth(shape[1]))


@pytest.mark.parametrize("count", range(1, 8))
def test_x_bounded_by_contained_balanced_subtree(count):
    for shape in shapes_with_cells(count):
        x = ratios_recursive(shape).x
        assert balanced_x(full_depth(shape)) <= x < 2, shape


def test_combine_ratios():
    single = combine_ratios(Fraction(0), Fraction(0))
    assert single == RadicalRatios(x=Fraction(1), stopper=Fraction(1), strong_stopper=Fraction(3, 8))
    assert single.x == B0_CENSUS.x
    for a in GRID[8:]:
        for b in GRID[8:]:
            ratios = combine_ratios(a, b)
            assert ratios.x == x_map(a, b)
            assert ratios.stopper == 1


def test_combine_ratios_matches_census():
    for shape in shapes_with_cells(4):
        left, right = shape
        combined = combine_ratios(ratios_recursive(left).x, ratios_recursive(right).x)
        assert combined == ratios_recursive(shape)


def test_ratios_match_census():
    for shape in shapes_with_cells(4):
        census = census_recursive(shape)
        ratios = ratios_recursive(shape)
        assert ratios.x == census.x
        assert ratios.stopper == Fraction(census.n_stopper, census.n_strong)
        assert ratios.strong_stopper == Fraction(census.n_strong_stopper, census.n_strong)


def test_stopper_fractions():
    assert stopper_fractions(0) == (1, Fraction(3, 8))
    _, strong = stopper_fractions(12)
    assert abs(float(strong) - 0.35) < 1e-3
    _, strong = stopper_fractions(40)
    assert abs(float(strong) - 0.35) < 1e-6
    with pytest.raises(ValueError):
        stopper_fractions(-1)


def test_tables_match_published():
    derived = derive_tables()
    assert compare_tables(derived) == []
    assert derived.table3 == EXPECTED_TABLE3
    assert len(derived.rows()) == 16
    assert len(transition_table()) == 27 * 4


def test_tamper_detected():
    derived = derive_tables()
    derived.table1["2-3-2"] = derived.table1["2-3-2"][:-1]
    mismatches = compare_tables(derived)
    assert [(m.table, m.row) for m in mismatches] == [("table1", "2-3-2")]


def test_origin_combination():
    assert combine_origin(B0_CENSUS, B0_CENSUS, B0_CENSUS) == 25088
    assert combine_origin(EMPTY_CENSUS, EMPTY_CENSUS, EMPTY_CENSUS) == 16


def test_stoppers_match_strongly_allowed():
    for count in range(1, 7):
        for shape in shapes_with_cells(count):
            census = census_recursive(shape)
            assert census.n_stopper == census.n_strong
