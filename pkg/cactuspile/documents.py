from typing import Dict, List

from pydantic import BaseModel, Field, field_validator

from cactuspile.analysis.engine import Configuration
from cactuspile.analysis.topology import CactusGraph
from cactuspile.errors import InputError


class GraphDocument(BaseModel):
    """On-disk form of a CactusGraph"""
    cells: List[int]
    inter_edges: List[List[int]] = []  # [cellA, localA, cellB, localB]
    origin: List[int] = Field(default_factory=lambda: [0, 0])  # [cell, local]

    @field_validator("inter_edges")
    @classmethod
    def _edge_arity(cls, edges: List[List[int]]) -> List[List[int]]:
        for edge in edges:
            if len(edge) != 4:
                raise ValueError(f"inter-cell edge {edge} must be [cellA, localA, cellB, localB]")
        return edges

    @field_validator("origin")
    @classmethod
    def _origin_arity(cls, origin: List[int]) -> List[int]:
        if len(origin) != 2:
            raise ValueError(f"origin {origin} must be [cell, local]")
        return origin


class ConfigurationDocument(BaseModel):
    """On-disk form of a Configuration, keyed by "<cell>:<local>" """
    heights: Dict[str, int]


def graph_to_document(graph: CactusGraph) -> GraphDocument:
    return GraphDocument(
        cells=list(range(graph.cell_count)),
        inter_edges=[[u // 3, u % 3, v // 3, v % 3] for u, v in graph.inter_edges],
        origin=[graph.origin_cell, 0],
    )


def graph_from_document(document: GraphDocument) -> CactusGraph:
    """Build and validate the graph; any violated structural invariant is an InputError."""
    count = len(document.cells)
    if sorted(document.cells) != list(range(count)):
        raise InputError(f"cells must be numbered 0..{count - 1}, got {document.cells}")
    origin_cell, origin_local = document.origin
    if origin_local != 0:
        raise InputError(f"the origin must be local vertex 0 of its cell, got {origin_cell}:{origin_local}")
    edges = [((a, la), (b, lb)) for a, la, b, lb in document.inter_edges]
    return CactusGraph(count, edges, origin_cell=origin_cell)


def configuration_to_document(graph: CactusGraph, config: Configuration) -> ConfigurationDocument:
    return ConfigurationDocument(heights=config.to_mapping(graph))


def configuration_from_document(graph: CactusGraph, document: ConfigurationDocument) -> Configuration:
    return Configuration.from_mapping(graph, document.heights)
