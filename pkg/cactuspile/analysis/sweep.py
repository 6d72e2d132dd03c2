import itertools
import logging
import multiprocessing as mp
from functools import partial
from typing import Any, Callable, Iterator, List, Optional, Tuple, TypeVar

from tqdm import tqdm

from cactuspile.config import settings
from cactuspile.errors import SizeGuardError

logger = logging.getLogger(__name__)

HEIGHTS = (1, 2, 3)
T = TypeVar("T")


def check_size(vertex_count: int, limit: Optional[int] = None) -> None:
    """Raise SizeGuardError when 3^vertex_count stable configurations are too many to sweep."""
    limit = settings.BRUTE_FORCE_MAX_VERTICES if limit is None else limit
    if vertex_count > limit:
        raise SizeGuardError(
            f"exhaustive sweep over 3^{vertex_count} configurations exceeds the limit of {limit} vertices"
        )


def height_prefixes(prefix_length: int, fixed: Tuple[int, ...] = ()) -> List[Tuple[int, ...]]:
    """Heights of the leading vertices; each prefix owns a disjoint block of the sweep."""
    return [fixed + tail for tail in itertools.product(HEIGHTS, repeat=prefix_length)]


def configurations(vertex_count: int, prefix: Tuple[int, ...] = ()) -> Iterator[Tuple[int, ...]]:
    """All stable height tuples starting with `prefix`, in lexicographic order."""
    for tail in itertools.product(HEIGHTS, repeat=vertex_count - len(prefix)):
        yield prefix + tail


def run_sweep(
    task: Callable[..., T],
    payload: Any,
    vertex_count: int,
    combine: Callable[[T, T], T],
    initial: T,
    workers: int = 1,
    fixed: Tuple[int, ...] = (),
    progress: bool = False,
    desc: str = "sweep",
) -> T:
    """
    Run `task(payload, prefix)` over every height prefix and fold the partial results.

    The configuration space is split by the heights of the first few vertices. Blocks are
    folded in prefix order, so totals do not depend on the number of workers.
    """
    prefix_length = min(4, vertex_count - len(fixed))
    prefixes = height_prefixes(prefix_length, fixed)
    job = partial(task, payload)
    result = initial

    if workers <= 1:
        for prefix in tqdm(prefixes, desc=desc, disable=not progress):
            result = combine(result, job(prefix))
        return result

    logger.info(f"Sweeping {len(prefixes)} blocks of {desc} on {workers} workers")
    with mp.Pool(processes=workers) as pool:
        for partial_result in tqdm(pool.imap(job, prefixes), total=len(prefixes), desc=desc,
                                   disable=not progress):
            result = combine(result, partial_result)
    return result
