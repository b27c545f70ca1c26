"""Deterministic chunked evaluation of point-batch kernels.

Grid labeling and bisection sweeps evaluate the same vectorized kernel on a
large (N, d) array of points.  ``map_rows`` splits the array into chunks of a
fixed size and optionally fans the chunks out to a thread pool.  Chunk
boundaries never depend on the worker count, so the assembled result is
bit-identical for any ``workers`` value -- this is what makes reports
reproducible across ``--workers`` settings.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

#: Rows per chunk.  Fixed: results must not depend on the worker count.
CHUNK_ROWS = 1 << 16


def map_rows(fn, pts: np.ndarray, workers: int = 1, chunk: int = CHUNK_ROWS):
    """Apply ``fn`` to row-chunks of ``pts``; concatenate results in order.

    ``fn`` must map an (m, ...) array to an array whose leading axis has
    length m.  numpy kernels release the GIL, so threads give real speedup
    without breaking determinism.
    """
    n = pts.shape[0]
    if n <= chunk or workers <= 1:
        if n <= chunk:
            return fn(pts)
        blocks = [fn(pts[i:i + chunk]) for i in range(0, n, chunk)]
        return np.concatenate(blocks, axis=0)
    starts = range(0, n, chunk)
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        blocks = list(pool.map(lambda i: fn(pts[i:i + chunk]), starts))
    return np.concatenate(blocks, axis=0)
