import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from cactuspile.analysis.topology import (
    CactusGraph,
    DecoratedRootedSubtree,
    descendant_subtree,
    split_at_origin,
)
from cactuspile.config import settings
from cactuspile.errors import InputError, UnstableConfigurationError, VerificationMismatch

logger = logging.getLogger(__name__)

THRESHOLD = 3


@dataclass(frozen=True)
class Configuration:
    """Grain heights indexed by flat vertex id. Heights above 3 are only allowed in transient mode."""

    heights: Tuple[int, ...]
    transient: bool = False

    def __post_init__(self):
        object.__setattr__(self, "heights", tuple(int(h) for h in self.heights))
        if any(h < 1 for h in self.heights):
            raise InputError("heights must be positive integers")
        if not self.transient and not self.is_stable:
            over = [v for v, h in enumerate(self.heights) if h > THRESHOLD]
            raise UnstableConfigurationError(f"configuration is unstable at vertices {over}")

    @property
    def is_stable(self) -> bool:
        return all(h <= THRESHOLD for h in self.heights)

    def __len__(self) -> int:
        return len(self.heights)

    def __getitem__(self, v: int) -> int:
        return self.heights[v]

    def with_height(self, v: int, h: int) -> "Configuration":
        heights = list(self.heights)
        heights[v] = h
        return Configuration(tuple(heights), transient=self.transient)

    def restrict(self, subtree: DecoratedRootedSubtree) -> "Configuration":
        """Heights on the subtree's own vertices."""
        return Configuration(tuple(self.heights[subtree.host_vertex(v)] for v in range(subtree.vertex_count)),
                             transient=self.transient)

    @classmethod
    def uniform(cls, graph: CactusGraph, height: int) -> "Configuration":
        return cls((height,) * graph.vertex_count)

    @classmethod
    def from_mapping(cls, graph: CactusGraph, heights: Mapping[str, int]) -> "Configuration":
        """Parse {"<cell>:<local>": h}; every vertex of the graph must be given."""
        values: List[Optional[int]] = [None] * graph.vertex_count
        for key, h in heights.items():
            values[graph.parse_label(key)] = h
        missing = [graph.label(v) for v, h in enumerate(values) if h is None]
        if missing:
            raise InputError(f"configuration is missing heights for {missing}")
        return cls(tuple(values))  # type: ignore[arg-type]

    def to_mapping(self, graph: CactusGraph) -> Dict[str, int]:
        return {graph.label(v): h for v, h in enumerate(self.heights)}


@dataclass(frozen=True)
class TopplingLog:
    sequence: Tuple[int, ...]
    wave_marks: Tuple[int, ...]
    per_vertex_counts: Dict[int, int] = field(hash=False)

    @property
    def toppled(self) -> FrozenSet[int]:
        return frozenset(self.sequence)

    def toppled_cells(self) -> FrozenSet[int]:
        return frozenset(v // 3 for v in self.sequence)

    def waves(self) -> List[Tuple[int, ...]]:
        bounds = list(self.wave_marks) + [len(self.sequence)]
        return [self.sequence[bounds[k]:bounds[k + 1]] for k in range(len(self.wave_marks))]

    def first_wave(self) -> Tuple[int, ...]:
        """Topplings before the origin's second toppling."""
        if len(self.wave_marks) < 2:
            return self.sequence
        return self.sequence[:self.wave_marks[1]]

    def max_count(self) -> int:
        return max(self.per_vertex_counts.values(), default=0)


@dataclass(frozen=True)
class AvalancheReport:
    final: Configuration
    log: TopplingLog
    vertex_mass: int
    cell_mass: int
    # None when the grain was not added at the origin
    first_wave_cells: Optional[FrozenSet[int]] = None

    @property
    def first_wave_cell_mass(self) -> Optional[int]:
        return None if self.first_wave_cells is None else len(self.first_wave_cells)


def relax(neighbors: Sequence[Sequence[int]], heights: List[int], start: int,
          sequence: List[int], counts: Dict[int, int]) -> None:
    """
    Topple over-full vertices in FIFO order after a grain landed on `start`.

    `heights` is updated in place. A vertex joins the queue when its height first
    reaches 4; grains sent along missing edges leave the graph.
    """
    if heights[start] <= THRESHOLD:
        return
    queue = deque([start])
    while queue:
        u = queue.popleft()
        heights[u] -= THRESHOLD
        sequence.append(u)
        counts[u] = counts.get(u, 0) + 1
        for w in neighbors[u]:
            heights[w] += 1
            if heights[w] == THRESHOLD + 1:
                queue.append(w)
        if heights[u] > THRESHOLD:
            queue.append(u)


def _report(final: List[int], sequence: List[int], marks: Sequence[int], counts: Dict[int, int],
            first_wave_cells: Optional[FrozenSet[int]] = None) -> AvalancheReport:
    log = TopplingLog(sequence=tuple(sequence), wave_marks=tuple(marks), per_vertex_counts=dict(counts))
    return AvalancheReport(
        final=Configuration(tuple(final)),
        log=log,
        vertex_mass=len(counts),
        cell_mass=len(log.toppled_cells()),
        first_wave_cells=first_wave_cells,
    )


def _check_input(graph: CactusGraph, config: Configuration) -> None:
    if len(config) != graph.vertex_count:
        raise InputError(f"configuration has {len(config)} heights, graph has {graph.vertex_count} vertices")
    if not config.is_stable:
        raise UnstableConfigurationError("add_and_relax needs a stable configuration")


def add_and_relax(graph: CactusGraph, config: Configuration, vertex: int) -> AvalancheReport:
    """
    Add one grain at `vertex` and relax with a FIFO queue.

    Log marks are the positions where `vertex` topples. In FIFO order the origin can
    topple again before deeper first-wave vertices do, so for a grain at the origin
    the first-wave cells come from `wave_decompose`; elsewhere they are left unset.
    """
    _check_input(graph, config)
    if not 0 <= vertex < graph.vertex_count:
        raise InputError(f"vertex {vertex} is not in the graph")
    heights = list(config.heights)
    heights[vertex] += 1
    sequence: List[int] = []
    counts: Dict[int, int] = {}
    relax(graph.neighbors, heights, vertex, sequence, counts)
    marks = [k for k, u in enumerate(sequence) if u == vertex]
    first_wave = None
    if vertex == graph.origin_vertex:
        first_wave = wave_decompose(graph, config).first_wave_cells
    return _report(heights, sequence, marks, counts, first_wave)


@lru_cache(maxsize=64)
def _cut_neighbors(graph: CactusGraph) -> Tuple[Tuple[int, ...], ...]:
    """Adjacency with the o-o' edge removed."""
    o = graph.origin_vertex
    o_prime = graph.partner[o]
    if o_prime < 0:
        return graph.neighbors
    return tuple(
        tuple(w for w in adj if {v, w} != {o, o_prime})
        for v, adj in enumerate(graph.neighbors)
    )


def wave_decompose(graph: CactusGraph, config: Configuration, origin: Optional[int] = None) -> AvalancheReport:
    """
    Relax the avalanche from adding a grain at the origin one wave at a time.

    The edge o-o' is cut. Each wave adds a grain at o and relaxes U1; if o toppled,
    the grain it owes o' is added and U2 is relaxed; if o' toppled, its grain for o
    starts the next wave. U2 is left unchanged whenever o does not topple.
    """
    _check_input(graph, config)
    o = graph.origin_vertex
    if origin is not None and origin != o:
        raise InputError(f"waves are defined for the origin vertex {graph.label(o)}, got {graph.label(origin)}")
    o_prime = graph.partner[o]
    neighbors = _cut_neighbors(graph)

    heights = list(config.heights)
    sequence: List[int] = []
    counts: Dict[int, int] = {}
    marks: List[int] = []
    while True:
        heights[o] += 1
        if heights[o] <= THRESHOLD:
            break
        marks.append(len(sequence))
        relax(neighbors, heights, o, sequence, counts)
        if o_prime < 0:
            break
        heights[o_prime] += 1
        if heights[o_prime] <= THRESHOLD:
            break
        relax(neighbors, heights, o_prime, sequence, counts)

    logger.debug(f"Wave decomposition: {len(marks)} waves, {len(sequence)} topplings")
    first_wave = sequence[:marks[1]] if len(marks) > 1 else sequence
    return _report(heights, sequence, marks, counts, frozenset(v // 3 for v in first_wave))


@lru_cache(maxsize=64)
def _split(graph: CactusGraph) -> Tuple[DecoratedRootedSubtree, DecoratedRootedSubtree]:
    return split_at_origin(graph)


def _standalone_toppled(subtree: DecoratedRootedSubtree, config: Configuration) -> Set[int]:
    """Host vertices that topple when a grain is added at the subtree's root inside the subtree alone."""
    if subtree.is_empty:
        return set()
    local = config.restrict(subtree)
    report = add_and_relax(subtree.graph, local, subtree.root_vertex)
    return {subtree.host_vertex(v) for v in report.log.toppled}


def characterize_first_wave(graph: CactusGraph, config: Configuration) -> FrozenSet[int]:
    """First-wave cells from the two standalone avalanches in U1 and U2."""
    _check_input(graph, config)
    o = graph.origin_vertex
    if config[o] < THRESHOLD:
        return frozenset()
    u1, u2 = _split(graph)
    toppled = _standalone_toppled(u1, config)
    o_prime = graph.partner[o]
    if o_prime >= 0 and config[o_prime] == THRESHOLD:
        toppled |= _standalone_toppled(u2, config)
    return frozenset(v // 3 for v in toppled)


def first_wave_cells(graph: CactusGraph, config: Configuration, origin: Optional[int] = None) -> FrozenSet[int]:
    """Cells toppling before the origin's second toppling, read from the waves and from the U1/U2 characterization."""
    from_waves = wave_decompose(graph, config, origin).first_wave_cells
    from_split = characterize_first_wave(graph, config)
    if from_waves != from_split:
        raise VerificationMismatch(
            f"first-wave cells disagree: waves give {sorted(from_waves)}, split gives {sorted(from_split)}"
        )
    return from_waves


@dataclass(frozen=True)
class Witness:
    config: Configuration
    vertex: int
    report: AvalancheReport


@dataclass(frozen=True)
class WitnessSearch:
    mode: str  # "impossible", "exhaustive" or "sampled"
    examined: int
    witness: Optional[Witness] = None
    seed: Optional[int] = None


def late_topplers(report: AvalancheReport) -> FrozenSet[int]:
    """Vertices that topple in the avalanche but not in its first wave."""
    return report.log.toppled - frozenset(report.log.first_wave())


def _check_candidate(graph: CactusGraph, heights: Tuple[int, ...]) -> Optional[Witness]:
    o = graph.origin_vertex
    trial = list(heights)
    trial[o] += 1
    counts: Dict[int, int] = {}
    relax(graph.neighbors, trial, o, [], counts)
    if counts.get(o, 0) < 2:
        return None
    config = Configuration(heights)
    report = wave_decompose(graph, config)
    late = late_topplers(report)
    if not late:
        return None
    return Witness(config=config, vertex=min(late), report=report)


def search_multiwave_witness(graph: CactusGraph, budget: Optional[int] = None,
                             seed: Optional[int] = None, progress: bool = False) -> WitnessSearch:
    """
    Look for a stable configuration in which some vertex topples only after the first wave.

    Configurations with origin height 3 are swept exhaustively when the graph has at most
    WITNESS_EXHAUSTIVE_MAX_VERTICES vertices, otherwise drawn uniformly with a seeded generator.
    """
    budget = settings.WITNESS_BUDGET if budget is None else budget
    o = graph.origin_vertex
    if graph.degree[o] < 3:
        return WitnessSearch(mode="impossible", examined=0)

    others = [v for v in range(graph.vertex_count) if v != o]
    examined = 0
    if graph.vertex_count <= settings.WITNESS_EXHAUSTIVE_MAX_VERTICES:
        heights = [THRESHOLD] * graph.vertex_count
        for tail in itertools.product((1, 2, 3), repeat=len(others)):
            if examined >= budget:
                break
            examined += 1
            for v, h in zip(others, tail):
                heights[v] = h
            found = _check_candidate(graph, tuple(heights))
            if found is not None:
                return WitnessSearch(mode="exhaustive", examined=examined, witness=found)
        return WitnessSearch(mode="exhaustive", examined=examined)

    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    batch = 4096
    while examined < budget:
        draws = rng.integers(1, 4, size=(min(batch, budget - examined), graph.vertex_count))
        draws[:, o] = THRESHOLD
        for row in draws:
            examined += 1
            found = _check_candidate(graph, tuple(int(h) for h in row))
            if found is not None:
                logger.info(f"Multi-wave witness found after {examined} samples (seed {seed})")
                return WitnessSearch(mode="sampled", examined=examined, witness=found, seed=seed)
    logger.info(f"No multi-wave witness in {examined} samples (seed {seed})")
    return WitnessSearch(mode="sampled", examined=examined, seed=seed)


def find_multiwave_witness(graph: CactusGraph, search_budget: Optional[int] = None,
                           seed: Optional[int] = None) -> Optional[Tuple[Configuration, int]]:
    found = search_multiwave_witness(graph, search_budget, seed).witness
    return None if found is None else (found.config, found.vertex)


# Toppling sequences


def validate_toppling_sequence(graph: CactusGraph, config: Configuration, vertex: int,
                               sequence: Iterable[int], require_stable: bool = True) -> bool:
    """Replay `sequence` after adding a grain at `vertex`; every toppler must be over-full at its turn."""
    heights = list(config.heights)
    heights[vertex] += 1
    for u in sequence:
        if heights[u] <= THRESHOLD:
            return False
        heights[u] -= THRESHOLD
        for w in graph.neighbors[u]:
            heights[w] += 1
    return not require_stable or all(h <= THRESHOLD for h in heights)


def transfer(graph: CactusGraph, sequence: Sequence[int], i: int, j: int) -> Tuple[int, ...]:
    """Move v_j to just before v_i; v_j must not neighbour any of v_i .. v_(j-1)."""
    if not 0 <= i < j < len(sequence):
        raise ValueError(f"need 0 <= i < j < {len(sequence)}, got i={i}, j={j}")
    if len(set(sequence)) != len(sequence):
        raise ValueError("transfer needs a sequence without repeated vertices")
    moved = sequence[j]
    if any(moved in graph.neighbors[u] for u in sequence[i:j]):
        raise ValueError(f"vertex {moved} neighbours a vertex between positions {i} and {j}")
    return tuple(sequence[:i]) + (moved,) + tuple(sequence[i:j]) + tuple(sequence[j + 1:])


def transferable_pairs(graph: CactusGraph, sequence: Sequence[int]) -> Iterable[Tuple[int, int]]:
    for j in range(1, len(sequence)):
        adjacent = set(graph.neighbors[sequence[j]])
        i = j
        while i > 0 and sequence[i - 1] not in adjacent:
            i -= 1
            yield i, j


def hanging_subtree_topplings(graph: CactusGraph, config: Configuration,
                              cell: int) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """
    Toppled host vertices of the subtree below `cell`: as seen in the avalanche from the origin,
    and in the standalone avalanche started at the cell's origin-facing vertex.
    """
    report = add_and_relax(graph, config, graph.origin_vertex)
    subtree = descendant_subtree(graph, cell)
    inside = frozenset(subtree.host_vertex(v) for v in range(subtree.vertex_count))
    return report.log.toppled & inside, frozenset(_standalone_toppled(subtree, config))


@lru_cache(maxsize=64)
def _vertex_graph(graph: CactusGraph) -> nx.Graph:
    return graph.to_networkx()


def induced_connected(graph: CactusGraph, vertices: Iterable[int]) -> bool:
    members = set(vertices)
    if not members:
        return True
    return nx.is_connected(_vertex_graph(graph).subgraph(members))
