"""Reproducible per-block random streams for the path simulator.

Paths are grouped into fixed-size blocks. Block ``b`` of a run with seed
``s`` draws from a Philox (counter-based) generator keyed by
``SeedSequence(s, spawn_key=(b,))``, so a path's randomness depends only on
``(seed, path_index)`` and never on how blocks are distributed over workers.
Each step consumes one ``(UNIFORMS_PER_STEP, BLOCK_SIZE)`` array of uniforms
in a fixed row order.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK_SIZE = 8192
UNIFORMS_PER_STEP = 7

# row layout of the per-step uniform block
ROW_STEP = slice(0, 3)  # two magnitude rows and the sign row of the step draw
ROW_XI = 3
ROW_THETA = 4
ROW_THETA_SIGN = 5
ROW_SIGN = 6

_U64 = 1 << 64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def block_generator(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def locate(path_index: int) -> tuple[int, int]:
    """``(block, lane)`` holding ``path_index``."""
    path_index = check_seed(path_index)
    return divmod(path_index, BLOCK_SIZE)


def worker_count() -> int:
    env = os.environ.get("KENDALL_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"KENDALL_THREADS must be an integer, got {env!r}") from None
        if n >= 1:
            return n
    return os.cpu_count() or 1
