import heapq
from dataclasses import dataclass
from typing import FrozenSet, List, Mapping, Optional, Sequence, Tuple


@dataclass(frozen=True)
class BurnResult:
    burned_order: Tuple[int, ...]
    unburned: FrozenSet[int]

    @property
    def recurrent(self) -> bool:
        return not self.unburned


def burn(neighbors: Sequence[Sequence[int]], heights: Sequence[int],
         extra: Optional[Mapping[int, int]] = None) -> BurnResult:
    """
    Burning algorithm on a finite piece of the cactus.

    A vertex burns once its height exceeds the number of its unburnt neighbours;
    edges leaving the piece count as already burnt. `extra` adds unburnt
    neighbours outside the piece (a height-1 pendant on the root is `{root: 1}`).
    Ties are broken by smallest vertex id.
    """
    n = len(heights)
    unburnt = [len(adj) for adj in neighbors]
    if extra:
        for v, k in extra.items():
            unburnt[v] += k
    queued = [False] * n
    ready = []
    for v in range(n):
        if heights[v] > unburnt[v]:
            queued[v] = True
            ready.append(v)
    heapq.heapify(ready)
    order: List[int] = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in neighbors[v]:
            unburnt[w] -= 1
            if not queued[w] and heights[w] > unburnt[w]:
                queued[w] = True
                heapq.heappush(ready, w)
    return BurnResult(burned_order=tuple(order), unburned=frozenset(v for v in range(n) if not queued[v]))


def burns_completely(neighbors: Sequence[Sequence[int]], heights: Sequence[int],
                     extra: Optional[Mapping[int, int]] = None) -> bool:
    """Same partition as `burn`, without recording the order."""
    n = len(heights)
    unburnt = [len(adj) for adj in neighbors]
    if extra:
        for v, k in extra.items():
            unburnt[v] += k
    queued = [False] * n
    stack = []
    for v in range(n):
        if heights[v] > unburnt[v]:
            queued[v] = True
            stack.append(v)
    burned = 0
    while stack:
        v = stack.pop()
        burned += 1
        for w in neighbors[v]:
            unburnt[w] -= 1
            if not queued[w] and heights[w] > unburnt[w]:
                queued[w] = True
                stack.append(w)
    return burned == n
