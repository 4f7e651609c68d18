"""Deterministic quasi-uniform direction sampling on the unit sphere.

The sequence is fixed by the ``CRITEX_SEED`` environment variable (default 0)
so that reports are byte-identical across runs.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
from scipy.stats import norm, qmc

__all__ = ["global_seed", "unit_directions"]


def global_seed() -> int:
    return int(os.environ.get("CRITEX_SEED", "0"))


@lru_cache(maxsize=64)
def _directions_cached(n: int, dim: int, seed: int):
    if dim == 1:
        sign = np.ones((n, 1))
        sign[1::2, 0] = -1.0
        return sign
    m = max(2, 2 ** math.ceil(math.log2(n)))
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    u = sob.random(m)[:n]
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    out = z / norms
    out.setflags(write=False)
    return out


def unit_directions(n: int, dim: int, seed: int | None = None) -> np.ndarray:
    """``(n, dim)`` array of quasi-uniform unit vectors (read-only)."""
    if seed is None:
        seed = global_seed()
    return _directions_cached(int(n), int(dim), int(seed))
