import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from cactuspile.config import settings
from cactuspile.errors import InputError, ShapeError, SizeGuardError

logger = logging.getLogger(__name__)

# A cell is addressed by its path from the origin cell: () is the origin cell,
# step k means "the cell attached at local vertex k of the previous cell".
# Step 0 is only possible from the origin cell (the cell across the origin vertex).
CellPath = Tuple[int, ...]
# A radical slot is the attachment vertex of a cluster cell: (cell path, local index)
Slot = Tuple[CellPath, int]
# Rooted tree shapes: None is the empty tree, a node is (child at local 1, child at local 2)
Shape = Optional[Tuple[Optional["Shape"], Optional["Shape"]]]

ORIGIN_FACING = 0
CHILD_LOCALS = (1, 2)
ORIGIN_PATH: CellPath = ()
OPPOSITE_PATH: CellPath = (0,)


class CellClass(str, Enum):
    INTERNAL = "Internal"
    MEDIAL = "Medial"
    TERMINAL = "Terminal"


def _path_key(path: CellPath) -> Tuple[int, CellPath]:
    return len(path), path


class CactusGraph:
    """
    Finite piece of the expanded cactus: cells are 3-cycles joined by inter-cell edges
    so that contracting every cell leaves a tree.

    Vertices are flat integers `3 * cell + local`; local 0 of every cell is its
    origin-facing vertex and the origin vertex is local 0 of the origin cell.
    Vertices of degree 2 shed the grain along their missing edge when they topple.
    """

    def __init__(self, cell_count: int, inter_edges: Iterable[Tuple[Tuple[int, int], Tuple[int, int]]],
                 origin_cell: int = 0):
        if cell_count < 1:
            raise ShapeError("a cactus graph needs at least one cell")
        if not 0 <= origin_cell < cell_count:
            raise ShapeError(f"origin cell {origin_cell} is not one of the {cell_count} cells")

        self.cell_count = cell_count
        self.vertex_count = 3 * cell_count
        self.origin_cell = origin_cell
        self.origin_vertex = 3 * origin_cell + ORIGIN_FACING

        partner = [-1] * self.vertex_count
        edges = []
        for (cell_a, local_a), (cell_b, local_b) in inter_edges:
            for cell, local in ((cell_a, local_a), (cell_b, local_b)):
                if not 0 <= cell < cell_count or local not in (0, 1, 2):
                    raise ShapeError(f"vertex {cell}:{local} does not exist")
            if cell_a == cell_b:
                raise ShapeError(f"inter-cell edge inside cell {cell_a}")
            u, v = 3 * cell_a + local_a, 3 * cell_b + local_b
            if partner[u] >= 0 or partner[v] >= 0:
                raise ShapeError(f"vertex {cell_a}:{local_a} or {cell_b}:{local_b} has two inter-cell edges")
            partner[u], partner[v] = v, u
            edges.append((min(u, v), max(u, v)))
        self.partner: Tuple[int, ...] = tuple(partner)
        self.inter_edges: Tuple[Tuple[int, int], ...] = tuple(sorted(edges))

        neighbors = []
        for v in range(self.vertex_count):
            base = v - v % 3
            adjacent = [base + k for k in range(3) if base + k != v]
            if partner[v] >= 0:
                adjacent.append(partner[v])
            neighbors.append(tuple(sorted(adjacent)))
        self.neighbors: Tuple[Tuple[int, ...], ...] = tuple(neighbors)
        self.degree: Tuple[int, ...] = tuple(len(adj) for adj in neighbors)

        if not self.is_tree():
            raise ShapeError("contracting the cells does not give a tree")
        self.cell_paths: Tuple[CellPath, ...] = self._orient()
        self.path_index: Dict[CellPath, int] = {path: cell for cell, path in enumerate(self.cell_paths)}

    def _orient(self) -> Tuple[CellPath, ...]:
        """Assign every cell its path from the origin cell, checking that local 0 faces the origin."""
        paths: List[Optional[CellPath]] = [None] * self.cell_count
        paths[self.origin_cell] = ORIGIN_PATH
        queue = deque([self.origin_cell])
        while queue:
            cell = queue.popleft()
            locals_out = (0, 1, 2) if cell == self.origin_cell else CHILD_LOCALS
            for local in locals_out:
                w = self.partner[3 * cell + local]
                if w < 0:
                    continue
                child = w // 3
                if w % 3 != ORIGIN_FACING:
                    raise ShapeError(f"cell {child} is entered at local {w % 3}; local 0 must face the origin")
                paths[child] = paths[cell] + (local,)
                queue.append(child)
        return tuple(paths)  # type: ignore[arg-type]

    @classmethod
    def from_paths(cls, paths: Iterable[CellPath]) -> "CactusGraph":
        """Build the graph whose cells are the given prefix-closed set of cell paths."""
        ordered = sorted(set(tuple(p) for p in paths), key=_path_key)
        if not ordered or ordered[0] != ORIGIN_PATH:
            raise ShapeError("cell paths must include the origin cell ()")
        index = {path: i for i, path in enumerate(ordered)}
        edges = []
        for path in ordered[1:]:
            parent, step = path[:-1], path[-1]
            if parent not in index:
                raise ShapeError(f"cell path {path} has no parent in the set")
            if step not in CHILD_LOCALS and not (step == 0 and parent == ORIGIN_PATH):
                raise ShapeError(f"cell path {path} takes an impossible step {step}")
            edges.append(((index[parent], step), (index[path], ORIGIN_FACING)))
        return cls(len(ordered), edges, origin_cell=0)

    # Vertex addressing

    def vertex(self, cell: int, local: int) -> int:
        return 3 * cell + local

    def vertex_id(self, v: int) -> Tuple[int, int]:
        return v // 3, v % 3

    def label(self, v: int) -> str:
        return f"{v // 3}:{v % 3}"

    def parse_label(self, text: str) -> int:
        """Inverse of `label`."""
        try:
            cell, local = (int(part) for part in text.split(":"))
        except ValueError:
            raise InputError(f"vertex key {text!r} is not of the form <cell>:<local>") from None
        if not 0 <= cell < self.cell_count or local not in (0, 1, 2):
            raise InputError(f"vertex {text} is not in the graph")
        return self.vertex(cell, local)

    def cell_of(self, v: int) -> int:
        return v // 3

    def cell_vertices(self, cell: int) -> Tuple[int, int, int]:
        return 3 * cell, 3 * cell + 1, 3 * cell + 2

    # Structure

    @property
    def edge_count(self) -> int:
        return 3 * self.cell_count + len(self.inter_edges)

    def edges(self) -> List[Tuple[int, int]]:
        intra = [(3 * c + a, 3 * c + b) for c in range(self.cell_count) for a, b in ((0, 1), (0, 2), (1, 2))]
        return intra + list(self.inter_edges)

    @property
    def has_opposite(self) -> bool:
        return self.partner[self.origin_vertex] >= 0

    def child_at(self, cell: int, local: int) -> Optional[int]:
        """Cell hanging off `local` of `cell` away from the origin, if any."""
        if local == ORIGIN_FACING and cell != self.origin_cell:
            return None
        w = self.partner[3 * cell + local]
        return w // 3 if w >= 0 else None

    def contracted(self) -> nx.Graph:
        """The underlying tree: one node per cell, one edge per inter-cell edge."""
        tree = nx.Graph()
        tree.add_nodes_from(range(self.cell_count))
        tree.add_edges_from((u // 3, v // 3) for u, v in self.inter_edges)
        return tree

    def is_tree(self) -> bool:
        return nx.is_tree(self.contracted())

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertex_count))
        graph.add_edges_from(self.edges())
        return graph

    def __repr__(self) -> str:
        return f"CactusGraph(cells={self.cell_count}, vertices={self.vertex_count}, edges={self.edge_count})"


@dataclass(frozen=True)
class DecoratedRootedSubtree:
    """A rooted piece of the cactus; `embedding[v]` is the host vertex of local vertex v."""

    graph: Optional[CactusGraph]
    root_vertex: int = 0
    root_cell: int = 0
    embedding: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.graph is None:
            return
        if self.graph.partner[self.root_vertex] >= 0:
            raise ShapeError("the root vertex of a rooted subtree must not have an inter-cell edge")

    @property
    def is_empty(self) -> bool:
        return self.graph is None

    @property
    def cell_count(self) -> int:
        return 0 if self.graph is None else self.graph.cell_count

    @property
    def vertex_count(self) -> int:
        return 3 * self.cell_count

    def host_vertex(self, v: int) -> int:
        return v if self.embedding is None else self.embedding[v]

    def shape(self) -> Shape:
        if self.graph is None:
            return None
        return _shape_below(self.graph, self.root_cell)

    def paths(self) -> List[CellPath]:
        return [] if self.graph is None else list(self.graph.cell_paths)


EMPTY_SUBTREE = DecoratedRootedSubtree(graph=None)


def _shape_below(graph: CactusGraph, cell: int) -> Shape:
    children = []
    for local in CHILD_LOCALS:
        child = graph.child_at(cell, local)
        children.append(None if child is None else _shape_below(graph, child))
    return children[0], children[1]


@dataclass(frozen=True)
class ClusterShape:
    """A connected set of cells containing the origin cell, addressed by cell paths."""

    cells: FrozenSet[CellPath]
    cell_classes: Dict[CellPath, CellClass] = field(hash=False, compare=False)
    radical_slots: Tuple[Slot, ...] = field(hash=False, compare=False)
    origin_opposite_flag: bool = field(hash=False, compare=False, default=False)

    @classmethod
    def from_cells(cls, cells: Iterable[Sequence[int]]) -> "ClusterShape":
        members = frozenset(tuple(c) for c in cells)
        if ORIGIN_PATH not in members:
            raise ShapeError("a cluster must contain the origin cell")
        for path in members:
            if path and path[:-1] not in members:
                raise ShapeError(f"cluster cell {path} is not connected to the origin cell")
            if any(step not in CHILD_LOCALS for step in path[1:]) or (path and path[0] not in (0, 1, 2)):
                raise ShapeError(f"cluster cell {path} is not a cell of the expanded cactus")
        return cls(
            cells=members,
            cell_classes=_classes(members),
            radical_slots=_slots(members),
            origin_opposite_flag=OPPOSITE_PATH in members,
        )

    @property
    def size(self) -> int:
        return len(self.cells)

    def ordered_cells(self) -> List[CellPath]:
        return sorted(self.cells, key=_path_key)

    def class_counts(self) -> Tuple[int, int, int]:
        """(internal, medial, terminal) cell counts."""
        values = list(self.cell_classes.values())
        return (values.count(CellClass.INTERNAL), values.count(CellClass.MEDIAL),
                values.count(CellClass.TERMINAL))

    def is_chain(self) -> bool:
        return all(len(_cluster_neighbors(self.cells, p)) <= 2 for p in self.cells) and self.size >= 1

    def chain_order(self) -> List[CellPath]:
        """Cells of a chain cluster from one end to the other."""
        if not self.is_chain():
            raise ShapeError("cluster is not a chain of cells")
        if self.size == 1:
            return [ORIGIN_PATH]
        ends = sorted((p for p in self.cells if len(_cluster_neighbors(self.cells, p)) == 1), key=_path_key)
        order, previous = [ends[0]], None
        while len(order) < self.size:
            current = order[-1]
            following = [p for p in _cluster_neighbors(self.cells, current) if p != previous]
            previous = current
            order.append(following[0])
        return order

    def __repr__(self) -> str:
        return f"ClusterShape({sorted(self.cells, key=_path_key)})"


def neighbor_path(path: CellPath, local: int) -> CellPath:
    """Path of the cell across the inter-cell edge at `local` of the cell at `path`."""
    if local == ORIGIN_FACING:
        return OPPOSITE_PATH if path == ORIGIN_PATH else path[:-1]
    return path + (local,)


def _cluster_neighbors(cells: FrozenSet[CellPath], path: CellPath) -> List[CellPath]:
    found = []
    for local in (0, 1, 2):
        other = neighbor_path(path, local)
        if other in cells:
            found.append(other)
    return found


def _classes(cells: FrozenSet[CellPath]) -> Dict[CellPath, CellClass]:
    classes = {}
    for path in cells:
        attached = sum(1 for local in CHILD_LOCALS if path + (local,) in cells)
        classes[path] = (CellClass.TERMINAL, CellClass.MEDIAL, CellClass.INTERNAL)[attached]
    return classes


def _slots(cells: FrozenSet[CellPath]) -> Tuple[Slot, ...]:
    slots = [
        (path, local)
        for path in cells
        for local in (0, 1, 2)
        if neighbor_path(path, local) not in cells
    ]
    return tuple(sorted(slots, key=lambda slot: (_path_key(slot[0]), slot[1])))


def classify_cells(cluster: ClusterShape) -> Dict[CellPath, CellClass]:
    """Internal / Medial / Terminal by the number of non-origin-facing vertices attached to cluster cells."""
    return _classes(cluster.cells)


# Construction


def build_ball(radius: int) -> CactusGraph:
    """Decoration of the radius-`radius` ball of the 3-regular tree about the origin."""
    if radius < 0:
        raise ShapeError("radius must be nonnegative")
    paths: List[CellPath] = [ORIGIN_PATH]
    frontier: List[CellPath] = [ORIGIN_PATH]
    for _ in range(radius):
        frontier = [
            neighbor_path(path, local)
            for path in frontier
            for local in ((0, 1, 2) if path == ORIGIN_PATH else CHILD_LOCALS)
        ]
        paths.extend(frontier)
    graph = CactusGraph.from_paths(paths)
    logger.debug(f"Built ball of radius {radius}: {graph}")
    return graph


def _normalize_shape(shape) -> Shape:
    if shape is None:
        return None
    if not isinstance(shape, (list, tuple)):
        raise ShapeError(f"tree node must be a sequence of children, got {shape!r}")
    if len(shape) > 2:
        raise ShapeError(f"tree node has {len(shape)} children; cells take at most 2 below the root side")
    children = list(shape) + [None] * (2 - len(shape))
    return _normalize_shape(children[0]), _normalize_shape(children[1])


def _shape_paths(shape: Shape, prefix: CellPath, out: List[CellPath]) -> None:
    if shape is None:
        return
    out.append(prefix)
    for local, child in zip(CHILD_LOCALS, shape):
        _shape_paths(child, prefix + (local,), out)


def build_rooted_subtree(shape) -> DecoratedRootedSubtree:
    """
    Decorate a rooted tree shape.

    A shape is None (the empty subtree) or a sequence of at most two child shapes;
    the first child hangs off local 1 of the cell, the second off local 2.
    """
    normalized = _normalize_shape(shape)
    if normalized is None:
        return EMPTY_SUBTREE
    paths: List[CellPath] = []
    _shape_paths(normalized, ORIGIN_PATH, paths)
    return DecoratedRootedSubtree(graph=CactusGraph.from_paths(paths))


def balanced_shape(depth: int) -> Shape:
    """Shape of B_depth: a root cell whose two children are B_(depth-1). Children share one object."""
    if depth < 0:
        raise ShapeError("depth must be nonnegative")
    node: Shape = (None, None)
    for _ in range(depth):
        node = (node, node)
    return node


def shapes_with_cells(count: int) -> List[Shape]:
    """All rooted shapes with exactly `count` cells."""
    if count == 0:
        return [None]
    result: List[Shape] = []
    for left_count in range(count):
        for left in shapes_with_cells(left_count):
            for right in shapes_with_cells(count - 1 - left_count):
                result.append((left, right))
    return result


def shape_cell_count(shape: Shape) -> int:
    if shape is None:
        return 0
    return 1 + shape_cell_count(shape[0]) + shape_cell_count(shape[1])


# Pieces of a graph


def descendant_subtree(graph: CactusGraph, cell: int) -> DecoratedRootedSubtree:
    """The cell and everything hanging below it (for the origin cell: everything but the opposite branch)."""
    root_path = graph.cell_paths[cell]
    members: List[int] = []
    stack = [cell]
    while stack:
        current = stack.pop()
        members.append(current)
        for local in CHILD_LOCALS:
            child = graph.child_at(current, local)
            if child is not None:
                stack.append(child)
    relative = {graph.cell_paths[c][len(root_path):]: c for c in members}
    subgraph = CactusGraph.from_paths(relative.keys())
    embedding = tuple(
        3 * relative[path] + local
        for path in subgraph.cell_paths
        for local in (0, 1, 2)
    )
    return DecoratedRootedSubtree(graph=subgraph, embedding=embedding)


def hanging_subtree(graph: CactusGraph, vertex: int) -> DecoratedRootedSubtree:
    """The radical across the inter-cell edge at `vertex`, rooted at the far endpoint."""
    far = graph.partner[vertex]
    if far < 0:
        return EMPTY_SUBTREE
    if vertex % 3 == ORIGIN_FACING and graph.cell_of(vertex) != graph.origin_cell:
        raise ShapeError(f"vertex {graph.label(vertex)} faces the origin; its far side is not a rooted subtree")
    return descendant_subtree(graph, far // 3)


def split_at_origin(graph: CactusGraph) -> Tuple[DecoratedRootedSubtree, DecoratedRootedSubtree]:
    """Cut the edge o-o': U1 holds the origin cell rooted at o, U2 is rooted at o' (empty if o has no such edge)."""
    u1 = descendant_subtree(graph, graph.origin_cell)
    u2 = hanging_subtree(graph, graph.origin_vertex)
    return u1, u2


def rejoin_at_origin(u1: DecoratedRootedSubtree, u2: DecoratedRootedSubtree) -> CactusGraph:
    """Inverse of split_at_origin, up to renumbering of cells."""
    if u1.is_empty:
        raise ShapeError("the origin side of a split cannot be empty")
    paths = list(u1.graph.cell_paths)
    if not u2.is_empty:
        paths.extend(OPPOSITE_PATH + path for path in u2.graph.cell_paths)
    return CactusGraph.from_paths(paths)


# Clusters


def _animals(root: CellPath, size: int, allowed: Optional[FrozenSet[CellPath]]) -> List[FrozenSet[CellPath]]:
    if size < 1 or (allowed is not None and root not in allowed):
        return []
    locals_out = (0, 1, 2) if root == ORIGIN_PATH else CHILD_LOCALS
    children = [neighbor_path(root, local) for local in locals_out]
    return [frozenset([root]) | rest for rest in _forests(children, size - 1, allowed)]


def _forests(roots: List[CellPath], size: int, allowed: Optional[FrozenSet[CellPath]]) -> Iterator[FrozenSet[CellPath]]:
    if not roots:
        if size == 0:
            yield frozenset()
        return
    first, rest = roots[0], roots[1:]
    for first_size in range(size + 1):
        heads = [frozenset()] if first_size == 0 else _animals(first, first_size, allowed)
        for head in heads:
            for tail in _forests(rest, size - first_size, allowed):
                yield head | tail


def enumerate_clusters(n: int, allowed: Optional[Iterable[CellPath]] = None) -> List[ClusterShape]:
    """All clusters of `n` cells about the origin, as labelled subsets of the infinite cactus."""
    if n < 1:
        raise ShapeError("clusters have at least one cell")
    if n > settings.CLUSTER_MAX_CELLS:
        raise SizeGuardError(f"cluster enumeration limited to {settings.CLUSTER_MAX_CELLS} cells, asked for {n}")
    allowed_set = None if allowed is None else frozenset(tuple(p) for p in allowed)
    found = _animals(ORIGIN_PATH, n, allowed_set)
    shapes = [ClusterShape.from_cells(cells) for cells in found]
    shapes.sort(key=lambda c: [_path_key(p) for p in c.ordered_cells()])
    logger.debug(f"Enumerated {len(shapes)} clusters of {n} cells")
    return shapes


def clusters_in_graph(graph: CactusGraph) -> List[ClusterShape]:
    """Every cluster about the origin whose cells all lie in `graph`."""
    allowed = graph.path_index.keys()
    clusters: List[ClusterShape] = []
    for n in range(1, min(graph.cell_count, settings.CLUSTER_MAX_CELLS) + 1):
        clusters.extend(enumerate_clusters(n, allowed))
    return clusters


def cluster_from_graph_cells(graph: CactusGraph, cells: Iterable[int]) -> ClusterShape:
    """Cluster given by cell ids of a finite graph."""
    paths = []
    for cell in cells:
        if not 0 <= cell < graph.cell_count:
            raise ShapeError(f"cell {cell} is not in the graph")
        paths.append(graph.cell_paths[cell])
    return ClusterShape.from_cells(paths)


def cluster_cells_in_graph(graph: CactusGraph, cluster: ClusterShape) -> FrozenSet[int]:
    """Cell ids of `cluster` inside `graph`."""
    try:
        return frozenset(graph.path_index[path] for path in cluster.cells)
    except KeyError as e:
        raise ShapeError(f"cluster cell {e.args[0]} is not in the graph") from None


def slot_vertex(graph: CactusGraph, slot: Slot) -> int:
    path, local = slot
    return 3 * graph.path_index[path] + local


def weighted_cluster_sum(n: int) -> int:
    """Sum over clusters of n cells of 3^i 4^m 12^t."""
    total = 0
    for cluster in enumerate_clusters(n):
        internal, medial, terminal = cluster.class_counts()
        total += 3 ** internal * 4 ** medial * 12 ** terminal
    return total
