from cactuspile.analysis.burning import burn, burns_completely
from cactuspile.analysis.sweep import configurations

EDGE = [[1], [0]]


def test_burn_spreads_along_an_edge():
    result = burn(EDGE, (2, 1))
    assert result.burned_order == (0, 1)
    assert result.recurrent


def test_unburnt_pair_is_reported():
    result = burn(EDGE, (1, 1))
    assert result.burned_order == ()
    assert result.unburned == frozenset({0, 1})
    assert not burns_completely(EDGE, (1, 1))


def test_partitions_agree_on_ball0(ball0):
    recurrent = 0
    for heights in configurations(ball0.vertex_count):
        assert burns_completely(ball0.neighbors, heights) == burn(ball0.neighbors, heights).recurrent
        extra = {0: 1}
        assert burns_completely(ball0.neighbors, heights, extra) == burn(ball0.neighbors, heights, extra).recurrent
        recurrent += burns_completely(ball0.neighbors, heights)
    assert recurrent == 16
