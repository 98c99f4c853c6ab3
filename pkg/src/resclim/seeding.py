"""
seeding.py -- named, reproducible random substreams.

Every random draw in resclim comes from a PCG64 generator whose
SeedSequence is `(entropy=seed, spawn_key=path)`.
Path elements are integers or names;
names are hashed with BLAKE2b so the mapping is stable across
Python versions and platforms (unlike `hash()`).

Streams in use:

    (seed, 'reservoir', 'A')        adjacency placement and values
    (seed, 'reservoir', 'B')        input coupling values
    (seed, 'reservoir', 'C')        bias
    (seed, 'noise')                 noise-training perturbations
    (seed, 'ic')                    KS initial conditions
    (base_seed, 'reservoir', i)     harness: seed of reservoir i
    (base_seed, 'train', j)         harness: IC seed of training set j
    (base_seed, 'test', k)          harness: IC seed of test set k
    (base_seed, 'noise', i, j)      harness: noise seed for (i, j)
"""

import hashlib

import numpy as np

def _path_key(element: int | str) -> int:
    if isinstance(element, (int, np.integer)) and not isinstance(element, bool):
        if element < 0:
            raise ValueError(f"Negative stream index {element}")
        return int(element)
    digest = hashlib.blake2b(str(element).encode(), digest_size=8).digest()
    return int.from_bytes(digest, 'little')

def seed_sequence(seed: int, *path: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=seed,
        spawn_key=tuple(_path_key(element) for element in path),
        )

def substream(seed: int, *path: int | str) -> np.random.Generator:
    """
    Independent generator for the named substream `path` of `seed`.
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))

def derive_seed(seed: int, *path: int | str) -> int:
    """
    Derive a plain integer seed for the named substream `path` of `seed`.
    Used where a seed must be written to a CSV row or a file header.
    """
    state = seed_sequence(seed, *path).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))
