from typing import (
        Callable,
        Generator,
        TypeVar,
        )

try:
    from typing import ParamSpec, TypeAlias
except ImportError:
    # py3.9 and lower
    from typing_extensions import ParamSpec, TypeAlias

import functools

import numpy as np

def preload_generator(factory=tuple):
    """
    Turn a generator function into a function
    returning `factory(generator(...))`.
    """
    def preload_generator_inner(generator):
        @functools.wraps(generator)
        def wrapper(*args, **kwargs):
            return factory(generator(*args, **kwargs))
        return wrapper
    return preload_generator_inner


T = TypeVar('T')
P = ParamSpec('P')
Undecorated: TypeAlias = Callable[P, Generator[str, None, None]]
Decorated: TypeAlias = Callable[P, T]
Inner_Decorator: TypeAlias = Callable[[Undecorated], Decorated]

def join_generator(
        string: str,
        post: Callable[[str], T] = lambda x: x,
        ) -> Inner_Decorator:
    """
    Turn a generator of strings into a function returning
    `post(string.join(generator(...)))`.
    """
    def join_generator_inner(
            generator: Undecorated
            ) -> Decorated:

        @functools.wraps(generator)
        def wrapper(
                *args: P.args,
                **kwargs: P.kwargs
                ) -> T:
            return post(string.join(generator(*args, **kwargs)))

        return wrapper

    return join_generator_inner

def log_grid(
        start: float,
        stop: float,
        step: float,
        include_zero: bool = False,
        ) -> list[float]:
    """
    Logarithmic grid: 10**l for l in start, start+step, ..., stop.

    Exponents are rounded to 6 decimals before exponentiation,
    so that log_grid(-8, -6, 0.2) contains exactly 10**-7.4.
    """
    count = int(round((stop - start) / step)) + 1
    exponents = np.round(start + step * np.arange(count), 6)
    grid = [float(10.0 ** exponent) for exponent in exponents]
    if include_zero:
        grid.insert(0, 0.0)
    return grid

def rel_frobenius(actual, desired) -> float:
    """
    Relative Frobenius distance ||actual - desired||_F / ||desired||_F
    """
    actual = np.asarray(actual)
    desired = np.asarray(desired)
    return float(
        np.linalg.norm(actual - desired) / np.linalg.norm(desired)
        )
