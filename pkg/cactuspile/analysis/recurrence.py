import logging
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from cactuspile.analysis import sweep
from cactuspile.analysis.burning import burn, burns_completely
from cactuspile.analysis.engine import Configuration, add_and_relax
from cactuspile.analysis.radicals import RadicalCensus, census_recursive, combine_origin, combine_pair
from cactuspile.analysis.topology import (
    ORIGIN_PATH,
    CactusGraph,
    ClusterShape,
    DecoratedRootedSubtree,
    EMPTY_SUBTREE,
    Slot,
    cluster_cells_in_graph,
    clusters_in_graph,
    descendant_subtree,
    slot_vertex,
)
from cactuspile.errors import InputError, ShapeError

logger = logging.getLogger(__name__)


def find_fsc(graph: CactusGraph, config: Configuration) -> Optional[FrozenSet[int]]:
    """The maximal forbidden subconfiguration, or None when the configuration is recurrent."""
    if len(config) != graph.vertex_count:
        raise InputError(f"configuration has {len(config)} heights, graph has {graph.vertex_count} vertices")
    result = burn(graph.neighbors, config.heights)
    return None if result.recurrent else result.unburned


def is_recurrent(graph: CactusGraph, config: Configuration) -> bool:
    return burns_completely(graph.neighbors, config.heights)


def is_forbidden(graph: CactusGraph, config: Configuration, vertices: Iterable[int]) -> bool:
    """Every member's height is at most its number of edges into the set."""
    members = frozenset(vertices)
    if not members:
        return False
    return all(
        config[v] <= sum(1 for w in graph.neighbors[v] if w in members)
        for v in members
    )


def stays_recurrent(graph: CactusGraph, config: Configuration, vertices: Optional[Iterable[int]] = None) -> bool:
    """Adding a grain anywhere to a recurrent configuration and relaxing gives a recurrent configuration."""
    targets = range(graph.vertex_count) if vertices is None else vertices
    return all(is_recurrent(graph, add_and_relax(graph, config, v).final) for v in targets)


# Exhaustive counts


def _count_block(graph: CactusGraph, prefix: Tuple[int, ...]) -> int:
    neighbors = graph.neighbors
    return sum(
        1 for heights in sweep.configurations(graph.vertex_count, prefix)
        if burns_completely(neighbors, heights)
    )


def count_recurrent_bruteforce(graph: CactusGraph, workers: int = 1, progress: bool = False) -> int:
    """Number of stable configurations without a forbidden subconfiguration."""
    sweep.check_size(graph.vertex_count)
    total = sweep.run_sweep(
        _count_block, graph, graph.vertex_count,
        combine=lambda a, b: a + b, initial=0,
        workers=workers, progress=progress, desc="recurrent count",
    )
    logger.info(f"{graph}: {total} recurrent of {3 ** graph.vertex_count} stable configurations")
    return total


# Counting through a chain of cells


def chain_factor(x_u: Fraction, x_t: Fraction) -> Fraction:
    """N_s of a cell with two subradicals, per N_s(U) N_s(T)."""
    return 8 + 3 * x_u + 3 * x_t


def origin_factor(x1: Fraction, x2: Fraction, x3: Fraction) -> Fraction:
    """Recurrent configurations of a cell carrying three radicals, per N_s(U1) N_s(U2) N_s(U3)."""
    return 16 + 8 * (x1 + x2 + x3) + 3 * (x1 * x2 + x1 * x3 + x2 * x3)


def count_recurrent_bounds(n: int, eps: Fraction, strong_product: int = 1) -> Tuple[Fraction, Fraction]:
    """
    Bounds on the recurrent count of a graph whose radicals all have x > 2 - eps
    around a chain of n cells: (20 - 6 eps)^(n-1) (100 - 60 eps + 9 eps^2) and 100 * 20^(n-1),
    both times the product of the radicals' N_s.
    """
    if n < 1:
        raise ValueError("a chain has at least one cell")
    eps = Fraction(eps)
    lower = (20 - 6 * eps) ** (n - 1) * (100 - 60 * eps + 9 * eps ** 2) * strong_product
    upper = Fraction(100 * 20 ** (n - 1) * strong_product)
    return lower, upper


def radical_at(graph: CactusGraph, slot: Slot) -> DecoratedRootedSubtree:
    """The radical hanging at a cluster slot of a finite graph, empty if nothing is attached."""
    v = slot_vertex(graph, slot)
    far = graph.partner[v]
    if far < 0:
        return EMPTY_SUBTREE
    return descendant_subtree(graph, far // 3)


def _slots_of(cluster: ClusterShape, path) -> List[Slot]:
    return [slot for slot in cluster.radical_slots if slot[0] == path]


def count_recurrent_via_decomposition(graph: CactusGraph, chain_cluster: ClusterShape) -> int:
    """
    Recurrent count from a chain of cells through the origin cell and the censuses of its radicals.

    T_1 joins the two radicals at one end of the chain; T_k joins the next cell's radical
    with T_(k-1); the far end cell combines T_(n-1) with its own two radicals.
    """
    if not chain_cluster.is_chain():
        raise ShapeError(f"{chain_cluster} is not a chain of cells")
    if ORIGIN_PATH not in chain_cluster.cells:
        raise ShapeError("the chain must contain the origin cell")
    cluster_cells_in_graph(graph, chain_cluster)

    order = chain_cluster.chain_order()
    censuses: Dict[Slot, RadicalCensus] = {
        slot: census_recursive(radical_at(graph, slot)) for slot in chain_cluster.radical_slots
    }
    if len(order) == 1:
        a, b, c = (censuses[slot] for slot in _slots_of(chain_cluster, order[0]))
        return combine_origin(a, b, c)

    carried = None
    for path in order[:-1]:
        parts = [censuses[slot] for slot in _slots_of(chain_cluster, path)]
        if carried is not None:
            parts.append(carried)
        first, second = parts
        carried = combine_pair(first, second)
        logger.debug(f"Chain cell {path}: N_s={carried.n_strong}, x={carried.x}")
    last_parts = [censuses[slot] for slot in _slots_of(chain_cluster, order[-1])]
    total = combine_origin(carried, *last_parts)
    logger.info(f"Chain decomposition over {len(order)} cells: {total} recurrent configurations")
    return total


def chain_clusters(graph: CactusGraph, max_cells: Optional[int] = None) -> List[ClusterShape]:
    """Chains through the origin cell that fit in the graph."""
    found = [c for c in clusters_in_graph(graph) if c.is_chain()]
    if max_cells is not None:
        found = [c for c in found if c.size <= max_cells]
    return found
