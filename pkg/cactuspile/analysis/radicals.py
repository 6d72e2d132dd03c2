import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

from cactuspile.analysis import sweep
from cactuspile.analysis.burning import burn, burns_completely
from cactuspile.analysis.engine import Configuration
from cactuspile.analysis.topology import (
    CactusGraph,
    DecoratedRootedSubtree,
    Shape,
    balanced_shape,
    build_rooted_subtree,
)
from cactuspile.errors import InputError

logger = logging.getLogger(__name__)

CellHeights = Tuple[int, int, int]  # (origin-facing, local 1, local 2)


class Allowance(str, Enum):
    FORBIDDEN = "Forbidden"
    WEAK = "Weak"
    STRONG = "Strong"

    @property
    def letter(self) -> str:
        return self.value[0]


ALLOWED = (Allowance.WEAK, Allowance.STRONG)


@dataclass(frozen=True)
class RadicalClass:
    allowance: Allowance
    stopper: bool


EMPTY_RADICAL = RadicalClass(allowance=Allowance.STRONG, stopper=True)


@dataclass(frozen=True)
class RadicalCensus:
    n_strong: int
    n_weak: int
    n_stopper: int
    n_strong_stopper: int

    @property
    def x(self) -> Fraction:
        return Fraction(self.n_weak, self.n_strong)

    def count(self, allowance: Allowance) -> int:
        return self.n_strong if allowance is Allowance.STRONG else self.n_weak


EMPTY_CENSUS = RadicalCensus(n_strong=1, n_weak=0, n_stopper=1, n_strong_stopper=1)

# Single-cell radicals used as stand-ins for a weak and a strong subradical,
# heights given as (root, local 1, local 2)
WEAK_GADGET: CellHeights = (1, 2, 3)
STRONG_GADGET: CellHeights = (2, 3, 3)
GADGETS = {Allowance.WEAK: WEAK_GADGET, Allowance.STRONG: STRONG_GADGET}


def is_stopper_height(h: int) -> bool:
    return h in (1, 2)


# Classification


def _allowance(neighbors: Sequence[Sequence[int]], heights: Sequence[int], root: int) -> Allowance:
    if not burns_completely(neighbors, heights):
        return Allowance.FORBIDDEN
    if burns_completely(neighbors, heights, extra={root: 1}):
        return Allowance.STRONG
    return Allowance.WEAK


def classify_radical(subtree: DecoratedRootedSubtree, config: Optional[Configuration]) -> RadicalClass:
    """
    Forbidden when the radical alone has a forbidden subconfiguration. Otherwise Strong when a
    height-1 vertex hung on the root leaves no forbidden subconfiguration, else Weak.
    """
    if subtree.is_empty:
        return EMPTY_RADICAL
    if config is None or len(config) != subtree.vertex_count:
        raise InputError(f"radical needs {subtree.vertex_count} heights")
    graph = subtree.graph
    root = subtree.root_vertex
    stopper = is_stopper_height(config[root])
    if not burn(graph.neighbors, config.heights).recurrent:
        return RadicalClass(Allowance.FORBIDDEN, False)

    pendant = graph.vertex_count
    neighbors = [tuple(adj) + ((pendant,) if v == root else ()) for v, adj in enumerate(graph.neighbors)]
    neighbors.append((root,))
    attached = burn(neighbors, tuple(config.heights) + (1,))
    allowance = Allowance.STRONG if attached.recurrent else Allowance.WEAK
    return RadicalClass(allowance, stopper)


def classify_heights(graph: CactusGraph, heights: Sequence[int], root: int = 0) -> RadicalClass:
    """Same classes as classify_radical, with the pendant folded into the root's neighbour count."""
    allowance = _allowance(graph.neighbors, heights, root)
    return RadicalClass(allowance, allowance is not Allowance.FORBIDDEN and is_stopper_height(heights[root]))


# Gadget tables


@lru_cache(maxsize=1)
def _pair_graph() -> CactusGraph:
    return build_rooted_subtree(((None, None), (None, None))).graph


@lru_cache(maxsize=1)
def _origin_graph() -> CactusGraph:
    return CactusGraph.from_paths([(), (0,), (1,), (2,)])


def all_cell_heights() -> List[CellHeights]:
    return list(itertools.product((1, 2, 3), repeat=3))


@lru_cache(maxsize=1)
def transition_table() -> Dict[Tuple[CellHeights, Allowance, Allowance], Allowance]:
    """
    Whole-radical allowance for every root cell configuration and pair of subradical
    allowances (at local 1, local 2), found by hanging gadgets below the cell.
    """
    graph = _pair_graph()
    table = {}
    for cell in all_cell_heights():
        for first, second in itertools.product(ALLOWED, repeat=2):
            heights = cell + GADGETS[first] + GADGETS[second]
            table[(cell, first, second)] = _allowance(graph.neighbors, heights, 0)
    return table


@lru_cache(maxsize=1)
def origin_table() -> Dict[Tuple[CellHeights, Allowance, Allowance, Allowance], bool]:
    """Recurrence of a cell with a gadget radical on each of its three vertices."""
    graph = _origin_graph()
    table = {}
    for cell in all_cell_heights():
        for combo in itertools.product(ALLOWED, repeat=3):
            heights = cell + tuple(itertools.chain.from_iterable(GADGETS[a] for a in combo))
            table[(cell, *combo)] = burns_completely(graph.neighbors, heights)
    return table


@lru_cache(maxsize=1)
def aggregate_table() -> Dict[Tuple[Allowance, bool], Dict[Tuple[Allowance, Allowance], int]]:
    """Number of root cell configurations turning a subradical pair into each (allowance, stopper) class."""
    aggregates: Dict[Tuple[Allowance, bool], Dict[Tuple[Allowance, Allowance], int]] = {
        (allowance, stopper): Counter() for allowance in ALLOWED for stopper in (False, True)
    }
    for (cell, first, second), whole in transition_table().items():
        if whole is Allowance.FORBIDDEN:
            continue
        aggregates[(whole, is_stopper_height(cell[0]))][(first, second)] += 1
    return aggregates


def combine_pair(first: RadicalCensus, second: RadicalCensus) -> RadicalCensus:
    """Census of a root cell carrying two subradicals with the given censuses."""
    totals = {}
    for key, counts in aggregate_table().items():
        totals[key] = sum(
            k * first.count(a) * second.count(b)
            for (a, b), k in counts.items()
        )
    strong = totals[(Allowance.STRONG, False)] + totals[(Allowance.STRONG, True)]
    weak = totals[(Allowance.WEAK, False)] + totals[(Allowance.WEAK, True)]
    return RadicalCensus(
        n_strong=strong,
        n_weak=weak,
        n_stopper=totals[(Allowance.WEAK, True)] + totals[(Allowance.STRONG, True)],
        n_strong_stopper=totals[(Allowance.STRONG, True)],
    )


@lru_cache(maxsize=1)
def origin_aggregate() -> Dict[Tuple[Allowance, Allowance, Allowance], int]:
    """Number of cell configurations that are recurrent for each radical combination."""
    counts: Dict[Tuple[Allowance, Allowance, Allowance], int] = Counter()
    for (cell, *combo), recurrent in origin_table().items():
        if recurrent:
            counts[tuple(combo)] += 1
    return counts


def combine_origin(first: RadicalCensus, second: RadicalCensus, third: RadicalCensus) -> int:
    """Recurrent configurations of a cell carrying three radicals with the given censuses."""
    return sum(
        k * first.count(a) * second.count(b) * third.count(c)
        for (a, b, c), k in origin_aggregate().items()
    )


# Censuses


def _census_block(graph: CactusGraph, prefix: Tuple[int, ...]) -> Counter:
    found: Counter = Counter()
    neighbors = graph.neighbors
    for heights in sweep.configurations(graph.vertex_count, prefix):
        allowance = _allowance(neighbors, heights, 0)
        if allowance is not Allowance.FORBIDDEN:
            found[(allowance, is_stopper_height(heights[0]))] += 1
    return found


def _census_from_counts(found: Counter) -> RadicalCensus:
    return RadicalCensus(
        n_strong=found[(Allowance.STRONG, False)] + found[(Allowance.STRONG, True)],
        n_weak=found[(Allowance.WEAK, False)] + found[(Allowance.WEAK, True)],
        n_stopper=found[(Allowance.WEAK, True)] + found[(Allowance.STRONG, True)],
        n_strong_stopper=found[(Allowance.STRONG, True)],
    )


def census_bruteforce(subtree: DecoratedRootedSubtree, workers: int = 1, progress: bool = False) -> RadicalCensus:
    """Classify every stable radical on the subtree."""
    if subtree.is_empty:
        return EMPTY_CENSUS
    sweep.check_size(subtree.vertex_count)
    found = sweep.run_sweep(
        _census_block, subtree.graph, subtree.vertex_count,
        combine=lambda a, b: a + b, initial=Counter(),
        workers=workers, progress=progress, desc="radical census",
    )
    census = _census_from_counts(found)
    logger.info(f"Brute-force census on {subtree.cell_count} cells: N_s={census.n_strong}, N_w={census.n_weak}")
    return census


def census_recursive(subtree: Union[DecoratedRootedSubtree, Shape]) -> RadicalCensus:
    """Census through the root-cell recursion; accepts a subtree or a bare shape."""
    shape = subtree.shape() if isinstance(subtree, DecoratedRootedSubtree) else subtree
    memo: Dict[int, RadicalCensus] = {}

    def visit(node: Shape) -> RadicalCensus:
        if node is None:
            return EMPTY_CENSUS
        key = id(node)
        if key not in memo:
            memo[key] = combine_pair(visit(node[0]), visit(node[1]))
        return memo[key]

    return visit(shape)


def balanced_census(depth: int) -> RadicalCensus:
    """Exact census of B_depth, the balanced subtree of the given depth."""
    return census_recursive(balanced_shape(depth))


@dataclass(frozen=True)
class RadicalRatios:
    """A census divided through by its strongly allowed count."""

    x: Fraction
    stopper: Fraction
    strong_stopper: Fraction


EMPTY_RATIOS = RadicalRatios(x=Fraction(0), stopper=Fraction(1), strong_stopper=Fraction(1))


def combine_ratios(x1: Fraction, x2: Fraction) -> RadicalRatios:
    weights = {Allowance.WEAK: (Fraction(x1), Fraction(x2)), Allowance.STRONG: (Fraction(1), Fraction(1))}
    totals = {
        key: sum((k * weights[a][0] * weights[b][1] for (a, b), k in counts.items()), Fraction(0))
        for key, counts in aggregate_table().items()
    }
    strong = totals[(Allowance.STRONG, False)] + totals[(Allowance.STRONG, True)]
    weak = totals[(Allowance.WEAK, False)] + totals[(Allowance.WEAK, True)]
    return RadicalRatios(
        x=weak / strong,
        stopper=(totals[(Allowance.WEAK, True)] + totals[(Allowance.STRONG, True)]) / strong,
        strong_stopper=totals[(Allowance.STRONG, True)] / strong,
    )


def ratios_recursive(subtree: Union[DecoratedRootedSubtree, Shape]) -> RadicalRatios:
    """Same recursion as census_recursive on ratios only; stays small for deep subtrees."""
    shape = subtree.shape() if isinstance(subtree, DecoratedRootedSubtree) else subtree
    if shape is None:
        return EMPTY_RATIOS
    memo: Dict[int, Fraction] = {}

    def x_of(node: Shape) -> Fraction:
        if node is None:
            return Fraction(0)
        key = id(node)
        if key not in memo:
            memo[key] = combine_ratios(x_of(node[0]), x_of(node[1])).x
        return memo[key]

    return combine_ratios(x_of(shape[0]), x_of(shape[1]))


def balanced_x(depth: int) -> Fraction:
    return ratios_recursive(balanced_shape(depth)).x


def stopper_fractions(depth: int) -> Tuple[Fraction, Fraction]:
    """(stoppers, strong stoppers) per strongly allowed radical on B_depth."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    ratios = ratios_recursive(balanced_shape(depth))
    return ratios.stopper, ratios.strong_stopper


def x_map(x1: Fraction, x2: Fraction) -> Fraction:
    """x of a root cell from the x values of its two subradicals."""
    return (3 * x1 * x2 + 5 * x1 + 5 * x2 + 8) / (3 * x1 + 3 * x2 + 8)


def x_map_partial(x1: Fraction, x2: Fraction) -> Fraction:
    """Derivative of x_map in its first argument."""
    return (9 * x2 * x2 + 24 * x2 + 16) / (3 * x1 + 3 * x2 + 8) ** 2


# Tables

ROW_ORDER = (
    "1-2-3", "1-3-2", "2-1-3", "2-3-1", "3-1-2", "3-2-1",
    "2-2-3", "2-3-2", "3-2-2",
    "1-3-3", "3-1-3", "3-3-1",
    "2-3-3", "3-2-3", "3-3-2",
    "3-3-3",
)

EXPECTED_TABLE1: Dict[str, Tuple[str, ...]] = {
    "1-2-3": ("SSS",),
    "1-3-2": ("SSS",),
    "2-1-3": ("SSS",),
    "2-3-1": ("SSS",),
    "3-1-2": ("SSS",),
    "3-2-1": ("SSS",),
    "2-2-3": ("SSS", "WSS", "SWS"),
    "2-3-2": ("SSS", "WSS", "SSW"),
    "3-2-2": ("SSS", "SWS", "SSW"),
    "1-3-3": ("SSS", "SWS", "SSW"),
    "3-1-3": ("SSS", "WSS", "SSW"),
    "3-3-1": ("SSS", "WSS", "SWS"),
    "2-3-3": ("SSS", "WSS", "SWS", "SSW", "WWS", "WSW"),
    "3-2-3": ("SSS", "WSS", "SWS", "SSW", "WWS", "SWW"),
    "3-3-2": ("SSS", "WSS", "SWS", "SSW", "WSW", "SWW"),
    "3-3-3": ("SSS", "WSS", "SWS", "SSW", "WWS", "WSW", "SWW"),
}

EXPECTED_TABLE2: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "1-2-3": (("SS",), ()),
    "1-3-2": (("SS",), ()),
    "2-1-3": (("SS",), ()),
    "2-3-1": (("SS",), ()),
    "3-1-2": (("SS",), ()),
    "3-2-1": (("SS",), ()),
    "2-2-3": (("SS", "WS", "SW"), ()),
    "2-3-2": (("WS",), ("SS",)),
    "3-2-2": (("SW",), ("SS",)),
    "1-3-3": (("SW",), ("SS",)),
    "3-1-3": (("WS",), ("SS",)),
    "3-3-1": (("SS", "WS", "SW"), ()),
    "2-3-3": (("SW", "WW"), ("SS", "WS")),
    "3-2-3": (("WS", "WW"), ("SS", "SW")),
    "3-3-2": ((), ("SS", "WS", "SW")),
    "3-3-3": (("WW",), ("SS", "WS", "SW")),
}

PAIR_ORDER = ("WW", "WS", "SW", "SS")
EXPECTED_TABLE3: Dict[str, Tuple[int, int, int, int]] = {
    "weak": (3, 5, 5, 8),
    "strong": (0, 3, 3, 8),
}


def combo_key(combo: str) -> Tuple[int, Tuple[bool, ...]]:
    """Fewer weak radicals first, then weak letters further left first."""
    return combo.count("W"), tuple(c != "W" for c in combo)


@dataclass
class DerivedTables:
    table1: Dict[str, Tuple[str, ...]]
    table2: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]]
    table3: Dict[str, Tuple[int, int, int, int]]

    def rows(self) -> List[str]:
        return sorted(set(self.table1) | set(self.table2), key=_row_position)


@dataclass(frozen=True)
class TableMismatch:
    table: str
    row: str
    expected: object
    derived: object


def _row_position(label: str) -> Tuple[int, str]:
    return (ROW_ORDER.index(label) if label in ROW_ORDER else len(ROW_ORDER)), label


def _letters(combo: Sequence[Allowance]) -> str:
    return "".join(a.letter for a in combo)


def derive_tables() -> DerivedTables:
    """Rebuild the three classification tables from gadget experiments."""
    table1: Dict[str, Tuple[str, ...]] = {}
    for (cell, *combo), recurrent in origin_table().items():
        if recurrent:
            label = "-".join(str(h) for h in cell)
            table1.setdefault(label, ())
            table1[label] += (_letters(combo),)
    table1 = {label: tuple(sorted(combos, key=combo_key)) for label, combos in table1.items()}

    weak: Dict[str, List[str]] = {}
    strong: Dict[str, List[str]] = {}
    for (cell, first, second), whole in transition_table().items():
        if whole is Allowance.FORBIDDEN:
            continue
        h0, h1, h2 = cell
        label = f"{h1}-{h2}-{h0}"
        target = weak if whole is Allowance.WEAK else strong
        target.setdefault(label, []).append(_letters((first, second)))
    table2 = {
        label: (
            tuple(sorted(weak.get(label, []), key=combo_key)),
            tuple(sorted(strong.get(label, []), key=combo_key)),
        )
        for label in set(weak) | set(strong)
    }

    aggregates = aggregate_table()
    table3 = {}
    for name, allowance in (("weak", Allowance.WEAK), ("strong", Allowance.STRONG)):
        counts = Counter()
        for stopper in (False, True):
            counts.update(aggregates[(allowance, stopper)])
        table3[name] = tuple(
            counts[(Allowance.WEAK if p[0] == "W" else Allowance.STRONG,
                    Allowance.WEAK if p[1] == "W" else Allowance.STRONG)]
            for p in PAIR_ORDER
        )
    return DerivedTables(table1=table1, table2=table2, table3=table3)


def compare_tables(derived: DerivedTables) -> List[TableMismatch]:
    """Row-level differences against the published classification tables."""
    mismatches = []
    for label in sorted(set(EXPECTED_TABLE1) | set(derived.table1), key=_row_position):
        expected, found = EXPECTED_TABLE1.get(label), derived.table1.get(label)
        if expected != found:
            mismatches.append(TableMismatch("table1", label, expected, found))
    for label in sorted(set(EXPECTED_TABLE2) | set(derived.table2), key=_row_position):
        expected, found = EXPECTED_TABLE2.get(label), derived.table2.get(label)
        if expected != found:
            mismatches.append(TableMismatch("table2", label, expected, found))
    for name, expected in EXPECTED_TABLE3.items():
        if derived.table3.get(name) != expected:
            mismatches.append(TableMismatch("table3", name, expected, derived.table3.get(name)))
    return mismatches
