from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

Mapper = Callable[[Callable[[T], R], Sequence[T]], list]


def serial_map(fn, items):
    return [fn(item) for item in items]


@contextmanager
def mapper(workers: int) -> Iterator[Mapper]:
    """Order-preserving map, threaded when ``workers > 1``."""
    if workers <= 1:
        yield serial_map
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield lambda fn, items: list(pool.map(fn, items))
