"""Kernels on windows of Z^2 whose edge states are evaluated lazily from the counter RNG.

An edge is open when its uniform is < p. With p = P(t_e = 0) this is the
passage-time notion of open (zero weight); with p = p_open it is the usual
percolation notion. Both read the same uniform, so the conventions agree.
"""
import numpy as np

from ._jit import njit
from .rng import TAU_SALT, edge_key, edge_uniform, mix64, tau_prime_from_uniform, to_unit


@njit
def is_open(base, p, x, y, d):
    return edge_uniform(base, edge_key(x, y, d)) < p


@njit
def window_crossing(lo, heights, base, p):
    """Top-down open crossing of the wedge block with columns lo..lo+len(heights)-1.

    heights[k] is floor f(lo + k); the block is full in each column. Top set:
    the vertex (x, heights) of every column; bottom set: x2 = 0.
    Returns the local column of the leftmost top vertex joined to the bottom,
    or -1 when no crossing exists.
    """
    w = heights.shape[0]
    hmax = 0
    for k in range(w):
        if heights[k] > hmax:
            hmax = heights[k]
    stride = hmax + 1
    seen = np.zeros(w * stride, dtype=np.uint8)
    q = np.empty(w * stride, dtype=np.int64)
    qt = 0
    for k in range(w):
        seen[k * stride] = 1
        q[qt] = k * stride
        qt += 1
    qh = 0
    while qh < qt:
        c = q[qh]
        qh += 1
        k = c // stride
        y = c % stride
        x = lo + k
        # up
        if y < heights[k] and seen[c + 1] == 0 and is_open(base, p, x, y, 1):
            seen[c + 1] = 1
            q[qt] = c + 1
            qt += 1
        # down
        if y > 0 and seen[c - 1] == 0 and is_open(base, p, x, y - 1, 1):
            seen[c - 1] = 1
            q[qt] = c - 1
            qt += 1
        # right
        if k + 1 < w and y <= heights[k + 1] and seen[c + stride] == 0 and is_open(base, p, x, y, 0):
            seen[c + stride] = 1
            q[qt] = c + stride
            qt += 1
        # left
        if k > 0 and y <= heights[k - 1] and seen[c - stride] == 0 and is_open(base, p, x - 1, y, 0):
            seen[c - stride] = 1
            q[qt] = c - stride
            qt += 1
    for k in range(w):
        if seen[k * stride + heights[k]]:
            return k
    return -1


def block_crossing_lazy(f, lo, hi, base, p, first_width=None):
    """Crossing of columns lo..hi, probing growing windows from the left.

    A crossing of a left sub-window is a crossing of the block (same top and
    bottom sets column by column), so the answer is exact; wide blocks are
    settled after touching only a few columns.
    """
    width = hi - lo
    w = width if first_width is None else min(width, max(int(first_width), 1))
    while True:
        heights = f.floor_at(np.arange(lo, lo + w + 1))
        if window_crossing(lo, heights, np.uint64(base), float(p)) >= 0:
            return True
        if w >= width:
            return False
        w = min(width, 4 * w)


@njit
def lazy_weight(base, p, law, delta, p1, p2, x, y, d):
    """tau of the lattice edge leaving (x, y) in direction d, from the counter RNG."""
    h = mix64(np.uint64(base) ^ np.uint64(edge_key(x, y, d)))
    if to_unit(h) < p:
        return 0.0
    return tau_prime_from_uniform(to_unit(mix64(np.uint64(h) ^ np.uint64(TAU_SALT))), law, delta, p1, p2)
