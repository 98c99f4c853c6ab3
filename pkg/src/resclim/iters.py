"""
iters.py -- iteration-related helpers
"""

from collections.abc import Callable, Iterable
from typing import TypeVar

T = TypeVar('T')


def blocks(length: int, size: int) -> Iterable[slice]:
    """
    Slices covering range(length) in chunks of `size`.
    The last chunk may be shorter.

    blocks(5, 2) = [slice(0, 2), slice(2, 4), slice(4, 5)]
    """
    return (
        slice(start, min(start + size, length))
        for start in range(0, length, size)
        )


def pairwise_reduce(
        items: Iterable[T],
        combine: Callable[[T, T], T],
        ) -> T:
    """
    Reduce `items` with a fixed binary tree.

    Items are merged like a binary counter:
    the partial for 2^k consecutive items is only ever combined
    with another partial of the same size.
    The grouping depends only on the number of items,
    never on timing, so the result is reproducible bit for bit,
    and at most log2(n) partials are alive at once.
    """
    stack: list[tuple[int, T]] = []
    for item in items:
        size, partial = 1, item
        while stack and stack[-1][0] == size:
            _, left = stack.pop()
            partial = combine(left, partial)
            size *= 2
        stack.append((size, partial))

    if not stack:
        raise ValueError("pairwise_reduce() of empty iterable")

    _, result = stack.pop()
    while stack:
        _, left = stack.pop()
        result = combine(left, result)
    return result
