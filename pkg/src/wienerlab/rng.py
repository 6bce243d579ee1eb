"""Counter-based random streams.

Every path draws from its own Philox generator keyed by
``(seed, stream, path_index)``. Which worker produces a path therefore has no
influence on its numbers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import InvalidParameter

# stream tags keep unrelated draws independent under one user seed
STREAM_GAUSS = 0
STREAM_WIENER = 1
STREAM_PROBE = 2
STREAM_MIXED = 3

CHUNK = 256


def check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise InvalidParameter("seed must be non-negative")
    return seed


def path_generator(seed: int, index: int, stream: int = STREAM_GAUSS) -> np.random.Generator:
    ss = np.random.SeedSequence([check_seed(seed), int(stream), int(index)])
    return np.random.Generator(np.random.Philox(ss))


def normals(seed: int, n_paths: int, n: int, stream: int = STREAM_GAUSS, start: int = 0) -> np.ndarray:
    """Standard normals, one row per path index ``start .. start+n_paths-1``."""
    out = np.empty((n_paths, n))
    for i in range(n_paths):
        out[i] = path_generator(seed, start + i, stream).standard_normal(n)
    return out


def resolve_workers(workers) -> int:
    if workers is None:
        return 1
    workers = int(workers)
    if workers < 1:
        raise InvalidParameter("workers must be >= 1")
    return min(workers, 64)


def map_chunks(fn, n_paths: int, workers=1, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``fn(start, stop) -> array`` over fixed path chunks and stack.

    Chunk boundaries depend only on ``chunk``, never on ``workers``, so the
    floating-point work per path is the same for any worker count.
    """
    bounds = [(s, min(s + chunk, n_paths)) for s in range(0, n_paths, chunk)]
    w = resolve_workers(workers)
    if w == 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=w) as ex:
            parts = list(ex.map(lambda ab: fn(*ab), bounds))
    return np.vstack(parts)
