from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Iterable, List, TypeVar

from .logger import setup_logger

logger = setup_logger()

T = TypeVar("T")


def run_indexed(fn: Callable[[int], T], indices: Iterable[int], threads: int = 1) -> List[T]:
    """
    Run fn(i) for every index and return the results ordered by index.

    Work items are independent; the merge is by index so the output does not
    depend on the thread count or on completion order.
    """
    indices = list(indices)
    if threads < 1:
        raise ValueError(f"threads must be >= 1 (got {threads})")
    if threads == 1 or len(indices) <= 1:
        return [fn(i) for i in indices]

    results = {}
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = {executor.submit(fn, i): i for i in indices}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    logger.debug(f"Worker pool finished {len(indices)} items on {threads} threads")
    return [results[i] for i in indices]
