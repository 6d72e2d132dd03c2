import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from cactuspile.analysis import sweep
from cactuspile.analysis.engine import Configuration, add_and_relax, first_wave_cells
from cactuspile.analysis.radicals import (
    EMPTY_RADICAL,
    Allowance,
    RadicalClass,
    balanced_x,
    classify_heights,
    stopper_fractions,
)
from cactuspile.analysis.burning import burns_completely
from cactuspile.analysis.recurrence import radical_at
from cactuspile.analysis.topology import (
    OPPOSITE_PATH,
    ORIGIN_PATH,
    CactusGraph,
    CellClass,
    CellPath,
    ClusterShape,
    DecoratedRootedSubtree,
    Slot,
    cluster_cells_in_graph,
    enumerate_clusters,
)
from cactuspile.config import settings
from cactuspile.errors import SizeGuardError

logger = logging.getLogger(__name__)

CellHeights = Tuple[int, int, int]

# Limiting share of strongly allowed radicals among stoppers, and radical
# multiplicity of a 3-2-2 terminal cell relative to the other fillings
LIMIT_STRONG_STOPPER = Fraction(7, 20)
LIMIT_PAIR_MULTIPLICITY = 5
PHI_LOWER_BOUND = Fraction(7, 48)
ZERO_LIBERTY_BOUND = Fraction(7, 12)


class SlotRequirement(str, Enum):
    MUST_BE_STOPPER = "MustBeStopper"
    MUST_BE_STRONG = "MustBeStrong"
    PAIR_RULE_322 = "PairRule322"


STOP = SlotRequirement.MUST_BE_STOPPER
STRONG = SlotRequirement.MUST_BE_STRONG
PAIR = SlotRequirement.PAIR_RULE_322

INTERNAL_FILLINGS: List[CellHeights] = [(3, 3, 3), (3, 3, 2), (3, 2, 3)]

# Terminal cell heights with the requirement on the radicals at local 1 and local 2
TERMINAL_FILLINGS: List[Tuple[CellHeights, SlotRequirement, SlotRequirement]] = [
    ((3, 3, 3), STOP, STOP),
    ((3, 3, 2), STOP, STOP),
    ((3, 2, 3), STOP, STOP),
    ((3, 3, 1), STOP, STRONG),
    ((3, 1, 3), STRONG, STOP),
    ((3, 2, 2), PAIR, PAIR),
    ((3, 2, 1), STRONG, STRONG),
    ((3, 1, 2), STRONG, STRONG),
]

# Terminal fillings that leave a slot of height 3, used to repair zero-liberty fillings
REPAIR_FILLINGS = [entry for entry in TERMINAL_FILLINGS if 3 in entry[0][1:]]


def _medial_fillings(child_local: int) -> List[Tuple[CellHeights, SlotRequirement]]:
    """Medial cell heights given which non-origin-facing vertex carries the next cluster cell."""
    slot_local = 3 - child_local

    def heights(child_h: int, slot_h: int) -> CellHeights:
        cell = [3, 0, 0]
        cell[child_local], cell[slot_local] = child_h, slot_h
        return tuple(cell)  # type: ignore[return-value]

    return [
        (heights(3, 3), STOP),
        (heights(3, 1), STRONG),
        (heights(3, 2), STOP),
        (heights(2, 3), STOP),
    ]


@dataclass(frozen=True)
class FillingAssignment:
    cell_configs: Dict[CellPath, CellHeights] = field(hash=False, compare=False)
    slot_requirements: Dict[Slot, SlotRequirement] = field(hash=False, compare=False)
    s: int = 0

    @property
    def key(self) -> Tuple[Tuple[CellPath, CellHeights], ...]:
        return tuple(sorted(self.cell_configs.items(), key=lambda item: (len(item[0]), item[0])))

    @property
    def weight(self) -> int:
        return LIMIT_PAIR_MULTIPLICITY ** self.s


@dataclass(frozen=True)
class LibertyView:
    liberties: FrozenSet[Slot]

    @property
    def ell(self) -> int:
        return len(self.liberties)


def _cell_children(cluster: ClusterShape, path: CellPath) -> List[int]:
    locals_out = (0, 1, 2) if path == ORIGIN_PATH else (1, 2)
    return [local for local in locals_out if path + (local,) in cluster.cells]


def cell_options(cluster: ClusterShape, path: CellPath) -> List[Tuple[CellHeights, Dict[Slot, SlotRequirement]]]:
    """Every filling of one cluster cell with the requirements it puts on its radicals."""
    kind = cluster.cell_classes[path]
    options: List[Tuple[CellHeights, Dict[Slot, SlotRequirement]]] = []
    if kind is CellClass.INTERNAL:
        options = [(h, {}) for h in INTERNAL_FILLINGS]
    elif kind is CellClass.MEDIAL:
        child_local = next(local for local in (1, 2) if path + (local,) in cluster.cells)
        slot_local = 3 - child_local
        options = [(h, {(path, slot_local): req}) for h, req in _medial_fillings(child_local)]
    else:
        options = [(h, {(path, 1): r1, (path, 2): r2}) for h, r1, r2 in TERMINAL_FILLINGS]

    if path == ORIGIN_PATH and OPPOSITE_PATH not in cluster.cells:
        options = [(h, {**reqs, (ORIGIN_PATH, 0): STOP}) for h, reqs in options]
    return options


def fill_cluster(cluster: ClusterShape) -> List[FillingAssignment]:
    """Cartesian product of the per-cell fillings."""
    paths = cluster.ordered_cells()
    per_cell = [cell_options(cluster, path) for path in paths]
    assignments = []
    for choice in itertools.product(*per_cell):
        configs = {}
        requirements: Dict[Slot, SlotRequirement] = {}
        for path, (heights, reqs) in zip(paths, choice):
            configs[path] = heights
            requirements.update(reqs)
        s = sum(1 for path, heights in configs.items()
                if cluster.cell_classes[path] is CellClass.TERMINAL and heights == (3, 2, 2))
        assignments.append(FillingAssignment(cell_configs=configs, slot_requirements=requirements, s=s))
    return assignments


def effective_weight(cluster: ClusterShape) -> int:
    internal, medial, terminal = cluster.class_counts()
    return 3 ** internal * 4 ** medial * 12 ** terminal


def reached_cells(cluster: ClusterShape, cell_configs: Dict[CellPath, CellHeights]) -> Set[CellPath]:
    """Cells whose origin-facing vertex is joined to o by a path of height-3 vertices."""
    reached = {ORIGIN_PATH}
    for path in cluster.ordered_cells():
        if path == ORIGIN_PATH:
            continue
        parent, local = path[:-1], path[-1]
        if parent in reached and cell_configs[parent][local] == 3 and cell_configs[path][0] == 3:
            reached.add(path)
    return reached


def liberties_of(cluster: ClusterShape, assignment: FillingAssignment) -> LibertyView:
    configs = assignment.cell_configs
    reached = reached_cells(cluster, configs)
    return LibertyView(liberties=frozenset(
        (path, local) for path, local in cluster.radical_slots
        if path in reached and configs[path][local] == 3
    ))


def extended_fill(graph: Optional[CactusGraph], cluster: ClusterShape) -> List[Tuple[FillingAssignment, LibertyView]]:
    """
    Fillings on both sides of the o-o' edge. Without the opposite cell the radical across o
    must be a stopper; with it, that cell is filled like an origin cell of its own side.
    Each filling carries the liberties of which at least one must be strongly allowed.
    """
    if graph is not None:
        cluster_cells_in_graph(graph, cluster)
    return [(assignment, liberties_of(cluster, assignment)) for assignment in fill_cluster(cluster)]


# Generating configurations from the rules


def _radical_options(graph: CactusGraph, slot: Slot) -> List[Tuple[Tuple[Tuple[int, int], ...], RadicalClass]]:
    radical = radical_at(graph, slot)
    if radical.is_empty:
        return [((), EMPTY_RADICAL)]
    options = []
    for heights in itertools.product((1, 2, 3), repeat=radical.vertex_count):
        cls = classify_heights(radical.graph, heights)
        if cls.allowance is Allowance.FORBIDDEN:
            continue
        options.append((tuple((radical.host_vertex(v), h) for v, h in enumerate(heights)), cls))
    return options


def _meets(requirement: SlotRequirement, cls: RadicalClass) -> bool:
    if requirement is STOP:
        return cls.stopper
    return cls.allowance is Allowance.STRONG


def generated_configurations(graph: CactusGraph, cluster: ClusterShape, liberty_rule: bool) -> Set[Tuple[int, ...]]:
    """Every configuration of `graph` the filling rules produce for `cluster` with real radicals."""
    cell_ids = {path: graph.path_index[path] for path in cluster.cells}
    options = {slot: _radical_options(graph, slot) for slot in cluster.radical_slots}
    found: Set[Tuple[int, ...]] = set()

    for assignment, view in extended_fill(graph, cluster):
        base = [0] * graph.vertex_count
        for path, heights in assignment.cell_configs.items():
            for local, h in enumerate(heights):
                base[3 * cell_ids[path] + local] = h

        groups = []
        paired: Dict[CellPath, List[Slot]] = {}
        for slot, requirement in assignment.slot_requirements.items():
            if requirement is PAIR:
                paired.setdefault(slot[0], []).append(slot)
                continue
            groups.append([(placed, {slot: cls}) for placed, cls in options[slot] if _meets(requirement, cls)])
        for first, second in (sorted(pair) for pair in paired.values()):
            groups.append([
                (p1 + p2, {first: c1, second: c2})
                for p1, c1 in options[first]
                for p2, c2 in options[second]
                if Allowance.STRONG in (c1.allowance, c2.allowance)
            ])

        for combo in itertools.product(*groups):
            if liberty_rule:
                classes = {}
                for _, chosen in combo:
                    classes.update(chosen)
                if not any(classes[slot].allowance is Allowance.STRONG for slot in view.liberties):
                    continue
            heights = list(base)
            for placed, _ in combo:
                for v, h in placed:
                    heights[v] = h
            found.add(tuple(heights))
    return found


# Brute-force side


def _toppled_block(payload: Tuple[CactusGraph, bool], prefix: Tuple[int, ...]) -> Dict[FrozenSet[int], List[Tuple[int, ...]]]:
    graph, first_wave = payload
    o = graph.origin_vertex
    buckets: Dict[FrozenSet[int], List[Tuple[int, ...]]] = {}
    for heights in sweep.configurations(graph.vertex_count, prefix):
        if heights[o] != 3 or not burns_completely(graph.neighbors, heights):
            continue
        config = Configuration(heights)
        if first_wave:
            cells = first_wave_cells(graph, config)
        else:
            cells = add_and_relax(graph, config, o).log.toppled_cells()
        buckets.setdefault(cells, []).append(heights)
    return buckets


def _merge_buckets(left: Dict, right: Dict) -> Dict:
    merged = {key: list(values) for key, values in left.items()}
    for key, values in right.items():
        merged.setdefault(key, []).extend(values)
    return merged


def toppled_census(graph: CactusGraph, first_wave: bool, workers: int = 1,
                   progress: bool = False) -> Dict[FrozenSet[int], Set[Tuple[int, ...]]]:
    """Recurrent configurations with origin height 3, grouped by the cells that topple (or topple in the first wave)."""
    sweep.check_size(graph.vertex_count)
    fixed = (3,) if graph.origin_vertex == 0 else ()
    buckets = sweep.run_sweep(
        _toppled_block, (graph, first_wave), graph.vertex_count,
        combine=_merge_buckets, initial={}, workers=workers, fixed=fixed,
        progress=progress, desc="first-wave census" if first_wave else "toppling census",
    )
    return {cells: set(configs) for cells, configs in buckets.items()}


@dataclass(frozen=True)
class TheoremCheck:
    cluster: ClusterShape
    generated: int
    brute_force: int
    only_generated: int
    only_brute_force: int
    examples: Tuple[Tuple[int, ...], ...] = ()

    @property
    def passed(self) -> bool:
        return self.only_generated == 0 and self.only_brute_force == 0


def _compare(cluster: ClusterShape, generated: Set[Tuple[int, ...]], brute: Set[Tuple[int, ...]]) -> TheoremCheck:
    only_generated = generated - brute
    only_brute = brute - generated
    examples = tuple(sorted(only_generated | only_brute)[:5])
    check = TheoremCheck(
        cluster=cluster,
        generated=len(generated),
        brute_force=len(brute),
        only_generated=len(only_generated),
        only_brute_force=len(only_brute),
        examples=examples,
    )
    if not check.passed:
        logger.warning(f"Filling rules and brute force disagree on {cluster}: "
                       f"{check.only_generated} only generated, {check.only_brute_force} only brute force")
    return check


def verify_filling_theorem(subtree: DecoratedRootedSubtree, cluster: ClusterShape,
                           census: Optional[Dict[FrozenSet[int], Set[Tuple[int, ...]]]] = None) -> TheoremCheck:
    """Rooted subtree: filling-rule configurations versus recurrent configurations toppling exactly the cluster."""
    graph = subtree.graph
    cells = cluster_cells_in_graph(graph, cluster)
    if census is None:
        census = toppled_census(graph, first_wave=False)
    generated = generated_configurations(graph, cluster, liberty_rule=False)
    return _compare(cluster, generated, census.get(cells, set()))


def verify_first_wave_theorem(graph: CactusGraph, cluster: ClusterShape,
                              census: Optional[Dict[FrozenSet[int], Set[Tuple[int, ...]]]] = None) -> TheoremCheck:
    """Whole graph: extended filling and liberty rules versus recurrent configurations whose first wave is the cluster."""
    cells = cluster_cells_in_graph(graph, cluster)
    if census is None:
        census = toppled_census(graph, first_wave=True)
    generated = generated_configurations(graph, cluster, liberty_rule=True)
    return _compare(cluster, generated, census.get(cells, set()))


# First-wave distribution


def _mass_block(graph: CactusGraph, prefix: Tuple[int, ...]) -> Counter:
    masses: Counter = Counter()
    for heights in sweep.configurations(graph.vertex_count, prefix):
        if burns_completely(graph.neighbors, heights):
            masses[len(first_wave_cells(graph, Configuration(heights)))] += 1
    return masses


def first_wave_histogram(graph: CactusGraph, workers: int = 1, progress: bool = False) -> Dict[int, int]:
    """First-wave cell mass over all recurrent configurations."""
    sweep.check_size(graph.vertex_count)
    masses = sweep.run_sweep(
        _mass_block, graph, graph.vertex_count,
        combine=lambda a, b: a + b, initial=Counter(),
        workers=workers, progress=progress, desc="first-wave masses",
    )
    return dict(sorted(masses.items()))


@dataclass(frozen=True)
class SampledHistogram:
    histogram: Dict[int, int] = field(hash=False)
    accepted: int
    drawn: int
    seed: int


def sample_first_wave_histogram(graph: CactusGraph, samples: Optional[int] = None,
                                seed: Optional[int] = None, max_draws: Optional[int] = None) -> SampledHistogram:
    """First-wave cell mass over recurrent configurations drawn by rejection from uniform stable ones."""
    samples = settings.SAMPLE_SIZE if samples is None else samples
    seed = settings.SEED if seed is None else seed
    max_draws = 1000 * samples if max_draws is None else max_draws
    rng = np.random.default_rng(seed)
    masses: Counter = Counter()
    accepted = drawn = 0
    while accepted < samples and drawn < max_draws:
        draws = rng.integers(1, 4, size=(min(4096, max_draws - drawn), graph.vertex_count))
        for row in draws:
            drawn += 1
            heights = tuple(int(h) for h in row)
            if not burns_completely(graph.neighbors, heights):
                continue
            masses[len(first_wave_cells(graph, Configuration(heights)))] += 1
            accepted += 1
            if accepted >= samples:
                break
    logger.info(f"Sampled {accepted} recurrent configurations from {drawn} draws (seed {seed})")
    return SampledHistogram(histogram=dict(sorted(masses.items())), accepted=accepted, drawn=drawn, seed=seed)


# Liberty accounting


def _limits(depth: Optional[int]) -> Tuple[Fraction, Fraction]:
    """(share of stoppers that are not strongly allowed, 3-2-2 radical multiplicity)."""
    if depth is None:
        return 1 - LIMIT_STRONG_STOPPER, Fraction(LIMIT_PAIR_MULTIPLICITY)
    x = balanced_x(depth)
    _, strong_stopper = stopper_fractions(depth)
    return 1 - strong_stopper, 1 + 2 * x


def liberty_sum(cluster: ClusterShape, y: Fraction, pair_multiplicity: Fraction = Fraction(5)) -> Fraction:
    """Sum over fillings of (3-2-2 multiplicity)^s * y^(liberties), one cell at a time."""
    paths = cluster.ordered_cells()
    children = {path: _cell_children(cluster, path) for path in paths}
    options = {path: cell_options(cluster, path) for path in paths}

    @lru_cache(maxsize=None)
    def total(path: CellPath, reached: bool) -> Fraction:
        value = Fraction(0)
        for heights, requirements in options[path]:
            term = Fraction(pair_multiplicity) if PAIR in requirements.values() else Fraction(1)
            if reached:
                term *= y ** sum(1 for (_, local) in requirements if heights[local] == 3)
            for local in children[path]:
                child = path + (local,)
                term *= total(child, reached and heights[local] == 3)
            value += term
        return value

    return total(ORIGIN_PATH, True)


def phi_of_cluster(cluster: ClusterShape, depth: Optional[int] = None) -> Fraction:
    """
    Share of filling weight compatible with the liberty rule. With `depth`, the
    limiting radical ratios are replaced by the exact ones of B_depth.
    """
    q, pair = _limits(depth)
    whole = liberty_sum(cluster, Fraction(1), pair)
    return (whole - liberty_sum(cluster, q, pair)) / whole


def zero_liberty_fraction(cluster: ClusterShape) -> Fraction:
    """Weighted share of fillings with no liberty."""
    return liberty_sum(cluster, Fraction(0)) / liberty_sum(cluster, Fraction(1))


def phi_n(n: int) -> Fraction:
    """Weighted average of phi over all clusters of n cells."""
    if n > settings.PHI_MAX_CELLS:
        raise SizeGuardError(f"phi_n is limited to {settings.PHI_MAX_CELLS} cells, asked for {n}")
    q, pair = _limits(None)
    compliant = whole = Fraction(0)
    for cluster in enumerate_clusters(n):
        total = liberty_sum(cluster, Fraction(1), pair)
        whole += total
        compliant += total - liberty_sum(cluster, q, pair)
    return compliant / whole


@dataclass(frozen=True)
class RepairReport:
    cluster: ClusterShape
    zero_liberty_weight: int
    positive_liberty_weight: int
    image_weight: int
    images_distinct: bool
    images_positive: bool

    @property
    def holds(self) -> bool:
        return (self.images_distinct and self.images_positive
                and 5 * self.zero_liberty_weight == 7 * self.image_weight
                and self.image_weight <= self.positive_liberty_weight)


def _reached_terminal(cluster: ClusterShape, configs: Dict[CellPath, CellHeights]) -> CellPath:
    """Walk from the origin cell through height-3 attachments until a terminal cell."""
    path = ORIGIN_PATH
    while cluster.cell_classes[path] is not CellClass.TERMINAL:
        path = next(path + (local,) for local in (1, 2)
                    if path + (local,) in cluster.cells and configs[path][local] == 3)
    return path


def repair_map(cluster: ClusterShape) -> RepairReport:
    """
    Send each zero-liberty filling to the five fillings that replace its reached terminal
    cell by one leaving a height-3 slot, and account for the weights.
    """
    assignments = fill_cluster(cluster)
    by_key = {a.key: a for a in assignments}
    zero_weight = positive_weight = 0
    image_keys: List[Tuple] = []
    groups = set()
    images_positive = True
    for assignment in assignments:
        view = liberties_of(cluster, assignment)
        if view.ell:
            positive_weight += assignment.weight
            continue
        zero_weight += assignment.weight
        terminal = _reached_terminal(cluster, assignment.cell_configs)
        rest = tuple(item for item in assignment.key if item[0] != terminal)
        if (terminal, rest) in groups:
            continue
        groups.add((terminal, rest))
        for heights, _, _ in REPAIR_FILLINGS:
            configs = dict(assignment.cell_configs)
            configs[terminal] = heights
            image = by_key[tuple(sorted(configs.items(), key=lambda item: (len(item[0]), item[0])))]
            image_keys.append(image.key)
            images_positive &= liberties_of(cluster, image).ell > 0
    image_weight = sum(by_key[key].weight for key in image_keys)
    return RepairReport(
        cluster=cluster,
        zero_liberty_weight=zero_weight,
        positive_liberty_weight=positive_weight,
        image_weight=image_weight,
        images_distinct=len(set(image_keys)) == len(image_keys),
        images_positive=images_positive,
    )
