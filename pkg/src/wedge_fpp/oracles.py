"""Slow exhaustive references used to certify the fast kernels."""
import itertools

import numpy as np
from scipy import integrate

from ._jit import njit
from .martingale import DX, DY, _can_move, leftmost_local


def cap_areas(f, lo, hi, heights=None):
    """cap[k] = area between the staircase top and the graph of f over columns lo..lo+k."""
    hts = np.asarray(f.floor_at(np.arange(lo, hi + 1)) if heights is None else heights, dtype=float)
    cap = np.zeros(hi - lo + 1)
    for k in range(1, hi - lo + 1):
        if f.kind == "custom":
            integral = 0.5 * (f.eval(lo + k - 1) + f.eval(lo + k))
        else:
            integral = integrate.quad(f.eval, lo + k - 1, lo + k, epsabs=1e-13, epsrel=1e-13)[0]
        cap[k] = cap[k - 1] + integral - hts[k - 1]
    return cap


@njit
def _enclosed_area(hts, px, py, L, cap):
    """Area of the part of the block left of the crossing px/py[0..L)."""
    # polygon: (0,0) -> (xb,0) -> reversed path -> staircase back to (0, H_0) -> (0,0)
    n = 0
    cx = np.empty(2 * L + 4 * hts.shape[0] + 8, dtype=np.float64)
    cy = np.empty_like(cx)
    cx[n] = 0.0
    cy[n] = 0.0
    n += 1
    for q in range(L - 1, -1, -1):
        cx[n] = px[q]
        cy[n] = py[q]
        n += 1
    x0 = px[0]
    for k in range(x0, 0, -1):
        cx[n] = k
        cy[n] = hts[k - 1]
        n += 1
        cx[n] = k - 1
        cy[n] = hts[k - 1]
        n += 1
    a = 0.0
    for q in range(n):
        q2 = (q + 1) % n
        a += cx[q] * cy[q2] - cx[q2] * cy[q]
    return 0.5 * a + cap[x0]


@njit
def _better(area, L, px, py, best_area, best_len, bx, by):
    if area < best_area - 1e-9:
        return True
    if area > best_area + 1e-9:
        return False
    if L != best_len:
        return L < best_len
    for q in range(L):
        if px[q] != bx[q]:
            return px[q] < bx[q]
        if py[q] != by[q]:
            return py[q] < by[q]
    return False


@njit
def brute_leftmost_local(hts, openH, openV, cap):
    """Minimal-interior vertex self-avoiding top-down open crossing, by enumeration.

    Crossings start at any top vertex (k, hts[k]) and end at their first vertex
    with y = 0. Ties in area go to the shorter path, then to the
    lexicographically smaller vertex sequence. Returns (k, y) arrays and the area.
    """
    w1 = hts.shape[0]
    hmax = 0
    for k in range(w1):
        hmax = max(hmax, hts[k])
    stride = hmax + 1
    nv = w1 * stride
    on = np.zeros(nv, dtype=np.uint8)
    px = np.empty(nv, dtype=np.int64)
    py = np.empty(nv, dtype=np.int64)
    nxt = np.zeros(nv, dtype=np.int64)
    bx = np.empty(nv, dtype=np.int64)
    by = np.empty(nv, dtype=np.int64)
    best_area = np.inf
    best_len = 0
    for s in range(w1):
        px[0] = s
        py[0] = hts[s]
        L = 1
        on[s * stride + hts[s]] = 1
        nxt[0] = 0
        if hts[s] == 0:
            area = _enclosed_area(hts, px, py, 1, cap)
            if _better(area, 1, px, py, best_area, best_len, bx, by):
                best_area = area
                best_len = 1
                bx[0] = px[0]
                by[0] = py[0]
            on[s * stride] = 0
            continue
        while L > 0:
            top = L - 1
            k = px[top]
            y = py[top]
            d = nxt[top]
            if d >= 4 or (y == 0 and L > 1):
                on[k * stride + y] = 0
                L -= 1
                continue
            nxt[top] = d + 1
            if not _can_move(hts, openH, openV, k, y, d):
                continue
            k2 = k + DX[d]
            y2 = y + DY[d]
            if on[k2 * stride + y2] == 1:
                continue
            px[L] = k2
            py[L] = y2
            nxt[L] = 0
            on[k2 * stride + y2] = 1
            L += 1
            if y2 == 0:
                area = _enclosed_area(hts, px, py, L, cap)
                if _better(area, L, px, py, best_area, best_len, bx, by):
                    best_area = area
                    best_len = L
                    bx[:L] = px[:L]
                    by[:L] = py[:L]
    return bx[:best_len].copy(), by[:best_len].copy(), best_area


def brute_leftmost(heights, openH, openV, cap, lo=0):
    ks, ys, area = brute_leftmost_local(np.asarray(heights, dtype=np.int64), np.asarray(openH, np.uint8),
                                        np.asarray(openV, np.uint8), np.asarray(cap, dtype=float))
    if len(ks) == 0:
        return None, np.inf
    return [(int(k) + lo, int(y)) for k, y in zip(ks, ys)], float(area)


def region_edges(heights):
    """Edge slots of a local block: list of ('H'|'V', k, y)."""
    hts = list(heights)
    out = []
    for k, h in enumerate(hts):
        out += [("V", k, y) for y in range(h)]
        if k + 1 < len(hts):
            out += [("H", k, y) for y in range(min(h, hts[k + 1]) + 1)]
    return out


def config_arrays(heights, slots, bits):
    hts = list(heights)
    hmax = max(hts)
    openH = np.zeros((max(len(hts) - 1, 1), hmax + 1), dtype=np.uint8)
    openV = np.zeros((len(hts), max(hmax, 1)), dtype=np.uint8)
    for (kind, k, y), b in zip(slots, bits):
        if b:
            (openH if kind == "H" else openV)[k, y] = 1
    return openH, openV


def enumerate_configs(heights):
    """Every open/closed assignment of the block's edges."""
    slots = region_edges(heights)
    for bits in itertools.product((0, 1), repeat=len(slots)):
        yield config_arrays(heights, slots, bits)


def passage_time_enumeration(graph, w, source, targets):
    """Minimum weight over all self-avoiding paths from source to a target vertex."""
    targets = set(targets)
    adj = {}
    for e in range(graph.n_edges):
        u, v = int(graph.eu[e]), int(graph.ev[e])
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    best = [np.inf]
    on = {source}

    def dfs(u, acc):
        if u in targets:
            best[0] = min(best[0], acc)
        for v, e in adj.get(u, ()):
            if v not in on:
                on.add(v)
                dfs(v, acc + w[e])
                on.remove(v)

    dfs(source, 0.0)
    return best[0]


def box_edges(box):
    """All nearest-neighbour edges of [xlo, xhi] x [ylo, yhi] as ((x, y), (x', y'))."""
    xlo, xhi, ylo, yhi = box
    out = []
    for x in range(xlo, xhi + 1):
        for y in range(ylo, yhi + 1):
            if x < xhi:
                out.append(((x, y), (x + 1, y)))
            if y < yhi:
                out.append(((x, y), (x, y + 1)))
    return out


def exact_cluster_probability(p, n, box, event):
    """Exact P(event) for the open cluster of 0 in the box, summing over all configurations.

    event: "plane" (reaches x = n), "point" (reaches (n, 0)) or "strict" (touches
    x = 0 and x = n in exactly one vertex each). Feasible up to ~20 edges.
    """
    edges = box_edges(box)
    if len(edges) > 22:
        raise ValueError(f"{len(edges)} edges is too many to enumerate")
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(edges)):
        adj = {}
        for (u, v), b in zip(edges, bits):
            if b:
                adj.setdefault(u, []).append(v)
                adj.setdefault(v, []).append(u)
        seen = {(0, 0)}
        stack = [(0, 0)]
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if event == "plane":
            hit = any(x == n for x, _ in seen)
        elif event == "point":
            hit = (n, 0) in seen
        elif event == "strict":
            hit = sum(x == 0 for x, _ in seen) == 1 and sum(x == n for x, _ in seen) == 1
        else:
            raise ValueError(f"unknown event {event!r}")
        if hit:
            k = sum(bits)
            total += p ** k * (1 - p) ** (len(edges) - k)
    return total


@njit
def exhaustive_mismatches(hts, cap):
    """Run the wall follower and the brute force on every configuration of a block.

    Returns (configurations, mismatches). Edge slots follow region_edges.
    """
    w1 = hts.shape[0]
    hmax = 0
    for k in range(w1):
        hmax = max(hmax, hts[k])
    kinds = []
    ks = []
    ys = []
    for k in range(w1):
        for y in range(hts[k]):
            kinds.append(1)
            ks.append(k)
            ys.append(y)
        if k + 1 < w1:
            for y in range(min(hts[k], hts[k + 1]) + 1):
                kinds.append(0)
                ks.append(k)
                ys.append(y)
    ne = len(kinds)
    openH = np.zeros((max(w1 - 1, 1), hmax + 1), dtype=np.uint8)
    openV = np.zeros((w1, max(hmax, 1)), dtype=np.uint8)
    bad = 0
    total = 1 << ne
    for mask in range(total):
        openH[:, :] = 0
        openV[:, :] = 0
        for e in range(ne):
            if (mask >> e) & 1:
                if kinds[e] == 1:
                    openV[ks[e], ys[e]] = 1
                else:
                    openH[ks[e], ys[e]] = 1
        a_k, a_y = leftmost_local(hts, openH, openV)
        b_k, b_y, _ = brute_leftmost_local(hts, openH, openV, cap)
        if a_k.shape[0] != b_k.shape[0]:
            bad += 1
            continue
        for q in range(a_k.shape[0]):
            if a_k[q] != b_k[q] or a_y[q] != b_y[q]:
                bad += 1
                break
    return total, bad


def block_shapes(max_edges, max_width=None):
    """All nondecreasing height profiles whose block has 1..max_edges edges."""
    out = []

    def grow(prefix):
        if prefix:
            e = len(region_edges(prefix))
            if e > max_edges:
                return
            if e >= 1:
                out.append(tuple(prefix))
        if max_width is not None and len(prefix) >= max_width:
            return
        start = prefix[-1] if prefix else 0
        for h in range(start, max_edges + 1):
            if len(region_edges(prefix + [h])) > max_edges:
                break
            grow(prefix + [h])
    grow([])
    return out


def max_disjoint_paths_oracle(edges, sources, sinks):
    """Edmonds-Karp on an undirected unit-capacity graph; dict based and slow."""
    from collections import deque
    cap = {}
    adj = {}

    def add(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0) + c
        cap.setdefault((v, u), 0)
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    for u, v in edges:
        add(u, v, 1)
        add(v, u, 1)
    S, T = ("S",), ("T",)
    big = len(edges) + 1
    for s in sources:
        add(S, s, big)
    for t in sinks:
        add(t, T, big)
    flow = 0
    while True:
        prev = {S: None}
        dq = deque([S])
        while dq and T not in prev:
            u = dq.popleft()
            for v in adj.get(u, ()):
                if v not in prev and cap[(u, v)] > 0:
                    prev[v] = u
                    dq.append(v)
        if T not in prev:
            return flow
        v = T
        while prev[v] is not None:
            u = prev[v]
            cap[(u, v)] -= 1
            cap[(v, u)] += 1
            v = u
        flow += 1
