"""Deterministic fan-out over replica indices.

Work is cut into fixed-size chunks that do not depend on the worker count, and
results are reassembled in chunk order, so 1 and 8 workers give identical
output. numba kernels release the GIL, so threads do run in parallel.
"""
from concurrent.futures import ThreadPoolExecutor
import os

DEFAULT_CHUNK = 64


def default_workers():
    return int(os.environ.get("WEDGE_FPP_WORKERS", "1"))


def chunked_map(fn, n_items, workers=1, chunk=DEFAULT_CHUNK):
    """Call fn(start, stop) on consecutive chunks and return the results in order."""
    chunks = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(chunks) <= 1:
        return [fn(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda c: fn(*c), chunks))
