import pytest

from cactuspile.analysis.engine import (
    Configuration,
    TopplingLog,
    add_and_relax,
    characterize_first_wave,
    first_wave_cells,
    hanging_subtree_topplings,
    induced_connected,
    late_topplers,
    search_multiwave_witness,
    find_multiwave_witness,
    transfer,
    transferable_pairs,
    validate_toppling_sequence,
    wave_decompose,
)
from cactuspile.analysis.sweep import configurations
from cactuspile.analysis.topology import build_rooted_subtree, shapes_with_cells
from cactuspile.config import settings
from cactuspile.errors import InputError, UnstableConfigurationError


def multiwave_config(graph):
    """Origin cell full, o' full, a 2 then a 3 on the roots hanging off locals 1 and 2."""
    heights = [1] * graph.vertex_count
    for v, h in ((0, 3), (1, 3), (2, 3), (3, 3), (6, 2), (9, 3)):
        heights[v] = h
    return Configuration(tuple(heights))


def test_configuration_validation(ball0):
    with pytest.raises(UnstableConfigurationError):
        Configuration((4, 1, 1))
    with pytest.raises(InputError):
        Configuration((0, 1, 1))
    assert Configuration((4, 1, 1), transient=True).heights == (4, 1, 1)
    with pytest.raises(InputError):
        Configuration.from_mapping(ball0, {"0:0": 3, "0:1": 3})
    config = Configuration.from_mapping(ball0, {"0:0": 3, "0:1": 2, "0:2": 1})
    assert config.to_mapping(ball0) == {"0:0": 3, "0:1": 2, "0:2": 1}


def test_no_toppling_below_threshold(ball1):
    report = add_and_relax(ball1, Configuration.uniform(ball1, 2), 0)
    assert report.log.sequence == ()
    assert report.final[0] == 3
    assert report.cell_mass == 0


def test_triangle_avalanche(ball0):
    report = add_and_relax(ball0, Configuration((3, 3, 3)), 0)
    assert report.log.toppled == {0, 1, 2}
    assert report.final.heights == (3, 2, 2)
    assert report.vertex_mass == 3
    assert report.cell_mass == 1


def test_unstable_input_rejected(ball0):
    with pytest.raises(UnstableConfigurationError):
        add_and_relax(ball0, Configuration((4, 1, 1), transient=True), 0)


def test_log_queries():
    log = TopplingLog(sequence=(0, 1, 2, 0, 4), wave_marks=(0, 3), per_vertex_counts={0: 2, 1: 1, 2: 1, 4: 1})
    assert log.waves() == [(0, 1, 2), (0, 4)]
    assert log.first_wave() == (0, 1, 2)
    assert log.toppled_cells() == {0, 1}
    assert log.max_count() == 2


def test_multiwave_hand_witness(ball2):
    config = multiwave_config(ball2)
    report = wave_decompose(ball2, config)
    assert len(report.log.wave_marks) == 2
    assert report.log.per_vertex_counts[0] == 2
    assert 6 in late_topplers(report)
    assert 6 not in report.log.first_wave()
    assert report.final == add_and_relax(ball2, config, 0).final


def test_wave_decompose_origin_only(ball1):
    with pytest.raises(InputError):
        wave_decompose(ball1, Configuration.uniform(ball1, 3), origin=1)


def test_first_wave_characterizations_agree(ball2, recurrent_sample):
    for config in recurrent_sample[:300]:
        assert characterize_first_wave(ball2, config) == wave_decompose(ball2, config).first_wave_cells
        first_wave_cells(ball2, config)


def test_first_wave_empty_below_three(ball1):
    config = Configuration((2,) + (3,) * 11)
    assert first_wave_cells(ball1, config) == frozenset()


def test_wave_decomposition_matches_relaxation(ball2, recurrent_sample):
    for config in recurrent_sample:
        assert wave_decompose(ball2, config).final == add_and_relax(ball2, config, 0).final


def test_first_repeat_is_origin(ball2, recurrent_sample):
    for config in recurrent_sample:
        seen = set()
        for v in add_and_relax(ball2, config, 0).log.sequence:
            if v in seen:
                assert v == 0
                break
            seen.add(v)


def test_toppled_prefixes_are_connected(ball2, recurrent_sample):
    for config in recurrent_sample[:100]:
        sequence = add_and_relax(ball2, config, 0).log.sequence
        for k in range(1, len(sequence) + 1):
            assert induced_connected(ball2, sequence[:k])


def test_degree_two_addition_topples_at_most_once(ball2, recurrent_sample):
    vertex = 3 * ball2.path_index[(0, 1)] + 1
    assert ball2.degree[vertex] == 2
    for config in recurrent_sample:
        assert add_and_relax(ball2, config, vertex).log.max_count() <= 1


def test_rooted_subtrees_topple_once():
    for count in (1, 2):
        for shape in shapes_with_cells(count):
            subtree = build_rooted_subtree(shape)
            graph = subtree.graph
            for config in (Configuration.uniform(graph, 3), Configuration.uniform(graph, 2).with_height(0, 3)):
                assert add_and_relax(graph, config, subtree.root_vertex).log.max_count() <= 1


def test_transfer_rule(ball2, recurrent_sample):
    checked = 0
    for config in recurrent_sample[:200]:
        log = add_and_relax(ball2, config, 0).log
        prefix = log.first_wave()
        assert validate_toppling_sequence(ball2, config, 0, prefix, require_stable=False)
        for i, j in list(transferable_pairs(ball2, prefix))[:20]:
            moved = transfer(ball2, prefix, i, j)
            assert sorted(moved) == sorted(prefix)
            assert validate_toppling_sequence(ball2, config, 0, moved, require_stable=False)
            checked += 1
    assert checked > 0


def test_transfer_rejects_adjacent(ball0):
    with pytest.raises(ValueError):
        transfer(ball0, (0, 1, 2), 0, 1)
    with pytest.raises(ValueError):
        transfer(ball0, (0, 1, 0), 0, 2)


def test_full_sequence_is_legal(ball2, recurrent_sample):
    for config in recurrent_sample[:100]:
        sequence = add_and_relax(ball2, config, 0).log.sequence
        assert validate_toppling_sequence(ball2, config, 0, sequence)
        if sequence:
            assert not validate_toppling_sequence(ball2, config, 0, sequence[:-1])


def test_hanging_subtree_recursion(ball2, recurrent_sample):
    for config in recurrent_sample[:200]:
        counts = add_and_relax(ball2, config, 0).log.per_vertex_counts
        for path in ((1,), (2,), (0, 1), (1, 2)):
            cell = ball2.path_index[path]
            attachment = ball2.partner[3 * cell]
            if counts.get(attachment, 0) != 1:
                continue
            inside, standalone = hanging_subtree_topplings(ball2, config, cell)
            assert inside == standalone


def test_witness_impossible_without_opposite(ball0):
    assert search_multiwave_witness(ball0).mode == "impossible"
    assert find_multiwave_witness(ball0) is None


def test_witness_zero_budget(ball1):
    search = search_multiwave_witness(ball1, budget=0)
    assert search.witness is None
    assert search.examined == 0


@pytest.mark.slow
def test_witness_found_exhaustively(ball1):
    search = search_multiwave_witness(ball1)
    assert search.mode == "exhaustive"
    assert search.witness is not None
    assert search.witness.vertex in late_topplers(search.witness.report)


def test_witness_impossible_on_rooted_subtrees():
    for count in (1, 2, 3):
        for shape in shapes_with_cells(count):
            graph = build_rooted_subtree(shape).graph
            assert search_multiwave_witness(graph).mode == "impossible"


def _assert_single_wave_everywhere(count):
    for shape in shapes_with_cells(count):
        subtree = build_rooted_subtree(shape)
        graph = subtree.graph
        for heights in configurations(graph.vertex_count):
            report = add_and_relax(graph, Configuration(heights), subtree.root_vertex)
            assert len(report.log.wave_marks) <= 1, (shape, heights)
            assert report.log.max_count() <= 1, (shape, heights)
            assert late_topplers(report) == frozenset()


@pytest.mark.parametrize("count", [1, 2])
def test_rooted_subtrees_have_one_wave(count):
    _assert_single_wave_everywhere(count)


@pytest.mark.slow
def test_three_cell_rooted_subtrees_have_one_wave():
    _assert_single_wave_everywhere(3)


def test_witness_found_by_sampling(ball2):
    assert ball2.vertex_count > settings.WITNESS_EXHAUSTIVE_MAX_VERTICES
    search = search_multiwave_witness(ball2, budget=20000, seed=7)
    assert search.mode == "sampled"
    assert search.seed == 7
    assert search.witness is not None
    assert search.examined <= 20000
    witness = search.witness
    assert witness.config[ball2.origin_vertex] == 3
    assert len(witness.report.log.wave_marks) >= 2
    assert witness.vertex in late_topplers(witness.report)

    again = search_multiwave_witness(ball2, budget=20000, seed=7)
    assert again.examined == search.examined
    assert again.witness.config == witness.config


def test_origin_report_carries_wave_first_wave(ball2, recurrent_sample):
    full = Configuration.uniform(ball2, 3)
    report = add_and_relax(ball2, full, ball2.origin_vertex)
    assert report.first_wave_cells == first_wave_cells(ball2, full)
    assert report.first_wave_cell_mass == ball2.cell_count
    for config in recurrent_sample[:200]:
        report = add_and_relax(ball2, config, ball2.origin_vertex)
        assert report.first_wave_cells == wave_decompose(ball2, config).first_wave_cells


def test_non_origin_report_has_no_first_wave(ball2):
    report = add_and_relax(ball2, Configuration.uniform(ball2, 3), 1)
    assert report.first_wave_cells is None
    assert report.first_wave_cell_mass is None
