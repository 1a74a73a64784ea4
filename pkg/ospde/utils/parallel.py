"""
Ordered block mapping over a process pool.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

logger = logging.getLogger(__name__)


def block_ranges(count: int, block_size: int) -> List[Tuple[int, int]]:
    """Split ``range(count)`` into consecutive ``(start, stop)`` blocks."""
    if block_size < 1:
        raise ValueError('block_size must be >= 1')
    return [(start, min(start + block_size, count)) for start in range(0, count, block_size)]


def map_blocks(fn: Callable[..., Any], tasks: Sequence[tuple], workers: int = 1) -> List[Any]:
    """
    Apply ``fn(*task)`` to every task and return results in task order.

    Args:
        fn: Picklable top-level function
        tasks: Argument tuples
        workers: Process count; values <= 1 run inline

    Returns:
        List of results, ordered like ``tasks``
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]

    logger.debug(f'Mapping {len(tasks)} blocks over {workers} workers')
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, *zip(*tasks)))
