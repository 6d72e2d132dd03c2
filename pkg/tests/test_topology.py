import networkx as nx
import pytest

from cactuspile.analysis.topology import (
    OPPOSITE_PATH,
    ORIGIN_PATH,
    CactusGraph,
    CellClass,
    ClusterShape,
    balanced_shape,
    build_ball,
    build_rooted_subtree,
    classify_cells,
    cluster_from_graph_cells,
    clusters_in_graph,
    descendant_subtree,
    enumerate_clusters,
    rejoin_at_origin,
    shape_cell_count,
    shapes_with_cells,
    split_at_origin,
    weighted_cluster_sum,
)
from cactuspile.documents import GraphDocument, graph_from_document, graph_to_document
from cactuspile.errors import InputError, ShapeError, SizeGuardError


def test_ball_sizes(ball0, ball1, ball2):
    assert (ball0.cell_count, ball0.vertex_count) == (1, 3)
    assert (ball1.cell_count, ball1.vertex_count) == (4, 12)
    assert (ball2.cell_count, ball2.vertex_count) == (10, 30)
    assert ball0.edge_count == 3
    assert ball1.edge_count == 15
    assert ball2.edge_count == 30 + 9


def test_ball_cell_numbering(ball2):
    assert list(ball2.cell_paths) == [(), (0,), (1,), (2,), (0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert ball2.origin_vertex == 0
    assert ball2.partner[0] == 3


def test_degrees(ball0, ball1):
    assert ball0.degree == (2, 2, 2)
    assert ball1.degree[ball1.origin_vertex] == 3
    assert not ball0.has_opposite
    assert ball1.has_opposite


def test_contraction_is_tree(ball2):
    assert ball2.is_tree()
    assert nx.is_tree(ball2.contracted())
    assert nx.is_connected(ball2.to_networkx())


def test_cycle_of_cells_rejected():
    edges = [((0, 1), (1, 0)), ((1, 1), (2, 0)), ((2, 1), (0, 2))]
    with pytest.raises(ShapeError):
        CactusGraph(3, edges)


def test_wrong_orientation_rejected():
    with pytest.raises(ShapeError):
        CactusGraph(2, [((0, 1), (1, 2))])


def test_vertex_with_two_inter_cell_edges_rejected():
    with pytest.raises(ShapeError):
        CactusGraph(3, [((0, 1), (1, 0)), ((0, 1), (2, 0))])


def test_missing_vertex_rejected():
    with pytest.raises(ShapeError):
        CactusGraph(2, [((0, 1), (5, 0))])


def test_graph_document_round_trip(ball2):
    rebuilt = graph_from_document(graph_to_document(ball2))
    assert rebuilt.inter_edges == ball2.inter_edges
    assert rebuilt.cell_paths == ball2.cell_paths


def test_graph_document_rejects_bad_origin():
    document = GraphDocument(cells=[0], inter_edges=[], origin=[0, 1])
    with pytest.raises(InputError):
        graph_from_document(document)


def test_split_and_rejoin_is_isomorphic(ball1, ball2):
    for graph in (ball1, ball2):
        u1, u2 = split_at_origin(graph)
        assert u1.cell_count + u2.cell_count == graph.cell_count
        rejoined = rejoin_at_origin(u1, u2)
        assert nx.is_isomorphic(rejoined.to_networkx(), graph.to_networkx())


def test_split_without_opposite(ball0):
    u1, u2 = split_at_origin(ball0)
    assert u1.cell_count == 1
    assert u2.is_empty


def test_descendant_subtree_embedding(ball2):
    subtree = descendant_subtree(ball2, ball2.path_index[(1,)])
    assert subtree.cell_count == 3
    hosts = [subtree.host_vertex(v) for v in range(subtree.vertex_count)]
    assert hosts[:3] == [6, 7, 8]
    assert subtree.shape() == ((None, None), (None, None))


def test_rooted_subtree_shapes():
    assert len(shapes_with_cells(3)) == 5
    assert all(shape_cell_count(s) == 4 for s in shapes_with_cells(4))
    assert build_rooted_subtree(balanced_shape(2)).cell_count == 7
    assert build_rooted_subtree(None).is_empty
    with pytest.raises(ShapeError):
        build_rooted_subtree((None, None, None))


def test_cluster_counts_and_weights():
    assert len(enumerate_clusters(1)) == 1
    assert len(enumerate_clusters(2)) == 3
    assert weighted_cluster_sum(1) == 12
    assert weighted_cluster_sum(2) == 240


def test_cluster_classes():
    chain = ClusterShape.from_cells([(), (1,)])
    assert chain.cell_classes[ORIGIN_PATH] is CellClass.MEDIAL
    assert chain.cell_classes[(1,)] is CellClass.TERMINAL
    assert chain.class_counts() == (0, 1, 1)

    across = ClusterShape.from_cells([(), (0,)])
    assert across.origin_opposite_flag
    assert across.class_counts() == (0, 0, 2)

    star = ClusterShape.from_cells([(), (0,), (1,), (2,)])
    assert star.cell_classes[ORIGIN_PATH] is CellClass.INTERNAL
    assert not star.is_chain()


def test_classify_cells():
    path = ClusterShape.from_cells([(), (1,), (2,)])
    assert classify_cells(path) == {
        ORIGIN_PATH: CellClass.INTERNAL,
        (1,): CellClass.TERMINAL,
        (2,): CellClass.TERMINAL,
    }
    assert path.is_chain()
    bent = ClusterShape.from_cells([(), (1,), (1, 2)])
    assert classify_cells(bent) == {
        ORIGIN_PATH: CellClass.MEDIAL,
        (1,): CellClass.MEDIAL,
        (1, 2): CellClass.TERMINAL,
    }
    for n in range(1, 5):
        for cluster in enumerate_clusters(n):
            assert classify_cells(cluster) == cluster.cell_classes


def test_radical_slot_count():
    for n in range(1, 6):
        for cluster in enumerate_clusters(n):
            assert len(cluster.radical_slots) == n + 2


def test_invalid_clusters():
    with pytest.raises(ShapeError):
        ClusterShape.from_cells([(1,)])
    with pytest.raises(ShapeError):
        ClusterShape.from_cells([(), (1, 2)])


def test_cluster_size_guard():
    with pytest.raises(SizeGuardError):
        enumerate_clusters(13)


def test_chain_order():
    chain = ClusterShape.from_cells([(), (0,), (1,), (1, 2)])
    assert chain.is_chain()
    assert chain.chain_order() == [OPPOSITE_PATH, ORIGIN_PATH, (1,), (1, 2)]


def test_clusters_in_ball(ball1):
    clusters = clusters_in_graph(ball1)
    assert len(clusters) == 8
    assert cluster_from_graph_cells(ball1, [0, 2]) == ClusterShape.from_cells([(), (1,)])
    with pytest.raises(ShapeError):
        cluster_from_graph_cells(ball1, [0, 9])
