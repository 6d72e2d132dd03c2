from fractions import Fraction

import pytest

from cactuspile.analysis.filling import (
    PHI_LOWER_BOUND,
    REPAIR_FILLINGS,
    TERMINAL_FILLINGS,
    ZERO_LIBERTY_BOUND,
    effective_weight,
    extended_fill,
    fill_cluster,
    first_wave_histogram,
    generated_configurations,
    liberty_sum,
    phi_n,
    phi_of_cluster,
    repair_map,
    sample_first_wave_histogram,
    toppled_census,
    verify_filling_theorem,
    verify_first_wave_theorem,
    zero_liberty_fraction,
)
from cactuspile.analysis.recurrence import count_recurrent_bruteforce
from cactuspile.analysis.topology import (
    ClusterShape,
    build_rooted_subtree,
    clusters_in_graph,
    enumerate_clusters,
    shapes_with_cells,
    weighted_cluster_sum,
)
from cactuspile.errors import ShapeError, SizeGuardError

ORIGIN_ONLY = ClusterShape.from_cells([()])
ACROSS = ClusterShape.from_cells([(), (0,)])
CHAIN = ClusterShape.from_cells([(), (1,)])


@pytest.fixture(scope="module")
def first_wave_census(ball1):
    return toppled_census(ball1, first_wave=True)


def test_terminal_cell_fillings():
    fillings = fill_cluster(ORIGIN_ONLY)
    assert len(fillings) == len(TERMINAL_FILLINGS) == 8
    assert sum(f.weight for f in fillings) == 12
    assert len(REPAIR_FILLINGS) == 5


def test_filling_weights():
    assert sum(f.weight for f in fill_cluster(CHAIN)) == 48
    assert sum(f.weight for f in fill_cluster(ACROSS)) == 144
    for n in range(1, 5):
        clusters = enumerate_clusters(n)
        for cluster in clusters:
            assert sum(f.weight for f in fill_cluster(cluster)) == effective_weight(cluster)
            assert liberty_sum(cluster, Fraction(1)) == effective_weight(cluster)
        assert sum(effective_weight(c) for c in clusters) == weighted_cluster_sum(n)


def test_origin_stopper_requirement():
    for assignment, view in extended_fill(None, ORIGIN_ONLY):
        assert ((), 0) in assignment.slot_requirements
        assert ((), 0) in view.liberties
    for assignment, _ in extended_fill(None, ACROSS):
        assert ((), 0) not in assignment.slot_requirements


def test_extended_fill_checks_graph(ball0):
    with pytest.raises(ShapeError):
        extended_fill(ball0, CHAIN)


@pytest.mark.parametrize("count", [1, 2, 3])
def test_filling_rules_on_rooted_subtrees(count):
    for shape in shapes_with_cells(count):
        subtree = build_rooted_subtree(shape)
        census = toppled_census(subtree.graph, first_wave=False)
        for cluster in clusters_in_graph(subtree.graph):
            check = verify_filling_theorem(subtree, cluster, census)
            assert check.passed, check.examples


def test_filling_rules_single_cell():
    subtree = build_rooted_subtree((None, None))
    check = verify_filling_theorem(subtree, ORIGIN_ONLY)
    assert check.generated == check.brute_force == 8


def test_first_wave_rules_on_ball(ball1, first_wave_census):
    clusters = clusters_in_graph(ball1)
    assert len(clusters) == 8
    for cluster in clusters:
        check = verify_first_wave_theorem(ball1, cluster, first_wave_census)
        assert check.passed, check.examples


def test_first_wave_count_matches_phi(ball1, first_wave_census):
    generated = generated_configurations(ball1, ORIGIN_ONLY, liberty_rule=True)
    assert len(generated) == 2595
    assert Fraction(len(generated), 512 * 10) == phi_of_cluster(ORIGIN_ONLY, depth=0)


def test_liberty_rule_removes_configurations(ball1):
    with_rule = generated_configurations(ball1, ORIGIN_ONLY, liberty_rule=True)
    without_rule = generated_configurations(ball1, ORIGIN_ONLY, liberty_rule=False)
    assert with_rule < without_rule
    assert len(without_rule) == 512 * 10


def test_phi_values():
    assert phi_of_cluster(ORIGIN_ONLY) == Fraction(43883, 96000)
    assert phi_of_cluster(ORIGIN_ONLY, depth=0) == Fraction(519, 1024)
    assert phi_n(1) == Fraction(43883, 96000)


def test_phi_lower_bound():
    for n in range(1, 5):
        for cluster in enumerate_clusters(n):
            assert phi_of_cluster(cluster) >= PHI_LOWER_BOUND
        assert PHI_LOWER_BOUND <= phi_n(n) <= 1


def test_phi_size_guard():
    with pytest.raises(SizeGuardError):
        phi_n(7)


@pytest.mark.slow
@pytest.mark.parametrize("n", [5, 6])
def test_bounds_on_larger_clusters(n):
    for cluster in enumerate_clusters(n):
        assert phi_of_cluster(cluster) >= PHI_LOWER_BOUND
        assert zero_liberty_fraction(cluster) <= ZERO_LIBERTY_BOUND
    assert PHI_LOWER_BOUND <= phi_n(n) <= 1


def test_zero_liberty_fraction():
    assert zero_liberty_fraction(ORIGIN_ONLY) == 0
    assert zero_liberty_fraction(ACROSS) == Fraction(49, 144)
    for n in range(1, 5):
        for cluster in enumerate_clusters(n):
            assert zero_liberty_fraction(cluster) <= ZERO_LIBERTY_BOUND


def test_repair_map_across_origin():
    report = repair_map(ACROSS)
    assert report.zero_liberty_weight == 49
    assert report.positive_liberty_weight == 95
    assert report.image_weight == 35
    assert report.holds


def test_repair_map_holds():
    for n in range(1, 4):
        for cluster in enumerate_clusters(n):
            assert repair_map(cluster).holds, cluster


def test_sampled_histogram_is_reproducible(ball1):
    first = sample_first_wave_histogram(ball1, samples=200, seed=5)
    second = sample_first_wave_histogram(ball1, samples=200, seed=5)
    assert first.histogram == second.histogram
    assert first.accepted == sum(first.histogram.values()) == 200
    assert first.drawn >= first.accepted
    assert max(first.histogram) <= ball1.cell_count


def test_sampling_stops_at_draw_cap(ball1):
    result = sample_first_wave_histogram(ball1, samples=200, seed=5, max_draws=10)
    assert result.drawn == 10
    assert result.accepted < 200


@pytest.mark.slow
def test_exhaustive_histogram(ball1, first_wave_census):
    histogram = first_wave_histogram(ball1)
    recurrent = count_recurrent_bruteforce(ball1)
    assert sum(histogram.values()) == recurrent
    assert histogram[0] == recurrent - sum(len(configs) for configs in first_wave_census.values())
    for mass in range(1, ball1.cell_count + 1):
        expected = sum(
            len(configs) for cells, configs in first_wave_census.items() if len(cells) == mass
        )
        assert histogram.get(mass, 0) == expected
