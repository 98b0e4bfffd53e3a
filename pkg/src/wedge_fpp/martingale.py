"""Leftmost block crossings, the block clock m(i), and nested Monte Carlo for the
martingale increments of T(0, Gamma_{i0}).

Everything inside a replica is evaluated lazily from the counter RNG, so an
inner replica only touches the few blocks it actually needs.
"""
from dataclasses import dataclass, field
import heapq
import math

import numpy as np

from ._jit import njit
from .lattice import lazy_weight, window_crossing
from .parallel import chunked_map
from .rng import derive_bases, derive_stream, edge_key, edge_uniform, stream_base
from .stats import describe, ks_normal, wilson
from .wedge import ResourceError

DX = np.array([1, 0, -1, 0], dtype=np.int64)   # E N W S
DY = np.array([0, 1, 0, -1], dtype=np.int64)
TURNS = np.array([3, 0, 1, 2], dtype=np.int64)  # right, straight, left, back

OUTER_TAG = 0x6F75746572
INNER_TAG = 0x696E6E6572
TAIL_TAG = 0x7461696C
DEFAULT_CAP = 50


class CapExceeded(RuntimeError):
    """No crossing found within the scan cap."""


# ---------------------------------------------------------------------------
# kernels on a local block: columns 0..w with heights hts[k]

@njit
def fill_block(lo, hts, base, p):
    """Open-edge arrays of the block whose first column is lo (open: uniform < p)."""
    w1 = hts.shape[0]
    hmax = 0
    for k in range(w1):
        hmax = max(hmax, hts[k])
    openH = np.zeros((max(w1 - 1, 1), hmax + 1), dtype=np.uint8)
    openV = np.zeros((w1, max(hmax, 1)), dtype=np.uint8)
    for k in range(w1):
        x = lo + k
        for y in range(hts[k]):
            if edge_uniform(base, edge_key(x, y, 1)) < p:
                openV[k, y] = 1
        if k + 1 < w1:
            for y in range(min(hts[k], hts[k + 1]) + 1):
                if edge_uniform(base, edge_key(x, y, 0)) < p:
                    openH[k, y] = 1
    return openH, openV


@njit
def _can_move(hts, openH, openV, k, y, d):
    w1 = hts.shape[0]
    if d == 0:
        return k + 1 < w1 and y <= hts[k] and y <= hts[k + 1] and openH[k, y] == 1
    if d == 1:
        return y < hts[k] and openV[k, y] == 1
    if d == 2:
        return k >= 1 and y <= hts[k - 1] and openH[k - 1, y] == 1
    return y >= 1 and openV[k, y - 1] == 1


@njit
def cluster_from_bottom(hts, openH, openV):
    """seen[k, y] = 1 for vertices joined to the row y = 0 by open edges."""
    w1 = hts.shape[0]
    hmax = 0
    for k in range(w1):
        hmax = max(hmax, hts[k])
    seen = np.zeros((w1, hmax + 1), dtype=np.uint8)
    qk = np.empty(w1 * (hmax + 1), dtype=np.int64)
    qy = np.empty(w1 * (hmax + 1), dtype=np.int64)
    qt = 0
    for k in range(w1):
        seen[k, 0] = 1
        qk[qt] = k
        qy[qt] = 0
        qt += 1
    qh = 0
    while qh < qt:
        k = qk[qh]
        y = qy[qh]
        qh += 1
        for d in range(4):
            if _can_move(hts, openH, openV, k, y, d):
                k2 = k + DX[d]
                y2 = y + DY[d]
                if seen[k2, y2] == 0:
                    seen[k2, y2] = 1
                    qk[qt] = k2
                    qy[qt] = y2
                    qt += 1
    return seen


@njit
def leftmost_local(hts, openH, openV):
    """Leftmost top-down open crossing of a local block, as (k, y) arrays.

    Start at the leftmost top vertex joined to the bottom, heading south, and
    walk with the right hand on the wall (try right turn, straight, left turn,
    back). The walk is loop-erased as it goes and stops at the first vertex
    with y = 0. Returns empty arrays when the block has no crossing.
    """
    w1 = hts.shape[0]
    seen = cluster_from_bottom(hts, openH, openV)
    start = -1
    for k in range(w1):
        if seen[k, hts[k]] == 1:
            start = k
            break
    if start < 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    stride = seen.shape[1]
    pos = np.full(w1 * stride, -1, dtype=np.int64)
    px = np.empty(w1 * stride + 1, dtype=np.int64)
    py = np.empty(w1 * stride + 1, dtype=np.int64)
    k = start
    y = hts[start]
    d = 3
    px[0] = k
    py[0] = y
    pos[k * stride + y] = 0
    L = 1
    steps = 0
    limit = 8 * w1 * stride + 8
    while y != 0:
        nd = -1
        for t in range(4):
            c = (d + TURNS[t]) % 4
            if _can_move(hts, openH, openV, k, y, c):
                nd = c
                break
        if nd < 0:
            raise RuntimeError("wall follower stuck on an isolated vertex")
        k += DX[nd]
        y += DY[nd]
        d = nd
        c = k * stride + y
        if pos[c] >= 0:
            for q in range(pos[c] + 1, L):
                pos[px[q] * stride + py[q]] = -1
            L = pos[c] + 1
        else:
            pos[c] = L
            px[L] = k
            py[L] = y
            L += 1
        steps += 1
        if steps > limit:
            raise RuntimeError("wall follower did not reach the bottom")
    return px[:L].copy(), py[:L].copy()


@njit
def crossing_cluster(indptr, nbr, nbr_edge, vy, offset, t, lo, hi):
    """Open (t = 0) cluster of the bottom row inside columns lo..hi of a wedge graph.

    Returns (exists, vid of the leftmost top vertex reached, or -1).
    """
    vlo = offset[lo]
    vhi = offset[hi + 1]
    seen = np.zeros(vhi - vlo, dtype=np.uint8)
    q = np.empty(vhi - vlo, dtype=np.int64)
    qt = 0
    for x in range(lo, hi + 1):
        v = offset[x]
        seen[v - vlo] = 1
        q[qt] = v
        qt += 1
    qh = 0
    while qh < qt:
        u = q[qh]
        qh += 1
        for a in range(indptr[u], indptr[u + 1]):
            v = nbr[a]
            if v < vlo or v >= vhi or t[nbr_edge[a]] != 0 or seen[v - vlo] == 1:
                continue
            seen[v - vlo] = 1
            q[qt] = v
            qt += 1
    for x in range(lo, hi + 1):
        top = offset[x + 1] - 1
        if seen[top - vlo] == 1:
            return True, top
    return False, -1


# ---------------------------------------------------------------------------
# kernels on the whole wedge, lazily evaluated

@njit
def scan_m(hts, r, j, base, p, cap):
    """First jj in [j, j + cap] whose even block R'_jj has a crossing.

    -1 when the cap is exceeded, -2 when the sequence runs out first.
    """
    for jj in range(j, j + cap + 1):
        if 2 * jj + 1 >= r.shape[0]:
            return -2
        lo = r[2 * jj]
        hi = r[2 * jj + 1]
        if window_crossing(lo, hts[lo:hi + 1], base, p) >= 0:
            return jj
    return -1


@njit
def block_crossing_path(hts, r, j, base, p):
    lo = r[2 * j]
    hi = r[2 * j + 1]
    loc = hts[lo:hi + 1]
    openH, openV = fill_block(lo, loc, base, p)
    ks, ys = leftmost_local(loc, openH, openV)
    return ks + lo, ys


@njit
def lazy_passage(hts, xlo, xhi, sx, sy, tx, ty, base, p, law, delta, p1, p2):
    """Passage time from vertex set s to vertex set t inside columns xlo..xhi."""
    w1 = xhi - xlo + 1
    off = np.zeros(w1 + 1, dtype=np.int64)
    for k in range(w1):
        off[k + 1] = off[k] + hts[xlo + k] + 1
    nv = off[w1]
    dist = np.full(nv, np.inf)
    done = np.zeros(nv, dtype=np.uint8)
    is_t = np.zeros(nv, dtype=np.uint8)
    for q in range(tx.shape[0]):
        is_t[off[tx[q] - xlo] + ty[q]] = 1
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for q in range(sx.shape[0]):
        v = off[sx[q] - xlo] + sy[q]
        if dist[v] != 0.0:
            dist[v] = 0.0
            heapq.heappush(heap, (0.0, np.int64(v)))
    while len(heap) > 0:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        if is_t[v]:
            return d
        done[v] = 1
        # recover (k, y) from v
        k = np.searchsorted(off, v, side="right") - 1
        y = v - off[k]
        x = xlo + k
        for dd in range(4):
            k2 = k + DX[dd]
            y2 = y + DY[dd]
            if k2 < 0 or k2 >= w1 or y2 < 0 or y2 > hts[xlo + k2]:
                continue
            if dd == 0:
                wgt = lazy_weight(base, p, law, delta, p1, p2, x, y, 0)
            elif dd == 1:
                wgt = lazy_weight(base, p, law, delta, p1, p2, x, y, 1)
            elif dd == 2:
                wgt = lazy_weight(base, p, law, delta, p1, p2, x - 1, y, 0)
            else:
                wgt = lazy_weight(base, p, law, delta, p1, p2, x, y - 1, 1)
            v2 = off[k2] + y2
            nd = d + wgt
            if nd < dist[v2]:
                dist[v2] = nd
                heapq.heappush(heap, (nd, np.int64(v2)))
    return np.inf


@njit
def inner_batch(hts, r, jstart, ax, ay, bx, by, with_a, bases, p, law, delta, p1, p2, cap):
    """Inner replicas: target crossing Gamma_{m(jstart)} in each fresh field.

    Returns (T(A, target), T(B, target), m) per replica; m < 0 marks a discard.
    """
    K = bases.shape[0]
    va = np.full(K, np.nan)
    vb = np.full(K, np.nan)
    lam = np.empty(K, dtype=np.int64)
    for k in range(K):
        base = bases[k]
        j = scan_m(hts, r, jstart, base, p, cap)
        lam[k] = j
        if j < 0:
            continue
        cx, cy = block_crossing_path(hts, r, j, base, p)
        xmax = cx.max()
        if with_a:
            va[k] = lazy_passage(hts, ax.min(), xmax, ax, ay, cx, cy, base, p, law, delta, p1, p2)
        vb[k] = lazy_passage(hts, bx.min(), xmax, bx, by, cx, cy, base, p, law, delta, p1, p2)
    return va, vb, lam


# ---------------------------------------------------------------------------
# python layer

def leftmost_crossing_config(heights, openH, openV, lo=0):
    """Leftmost crossing of a block given explicit open-edge arrays; list of (x, y)."""
    hts = np.asarray(heights, dtype=np.int64)
    ks, ys = leftmost_local(hts, np.asarray(openH, dtype=np.uint8), np.asarray(openV, dtype=np.uint8))
    if len(ks) == 0:
        raise ValueError("block has no top-down open crossing")
    return [(int(k) + lo, int(y)) for k, y in zip(ks, ys)]


def leftmost_crossing(f, lo, hi, base, p):
    """Leftmost top-down open crossing of columns lo..hi of the wedge under f."""
    hts = np.asarray(f.floor_at(np.arange(lo, hi + 1)), dtype=np.int64)
    openH, openV = fill_block(lo, hts, np.uint64(base), float(p))
    return leftmost_crossing_config(hts, openH, openV, lo)


def required_length(i0, cap=DEFAULT_CAP):
    """Number of r values the block clock needs for horizon i0."""
    return 2 * (i0 + 2 * cap + 3) + 2


class BlockClock:
    """m(i), crossings and passage times for one block sequence and weight law."""

    def __init__(self, seq, model, cap=DEFAULT_CAP, max_columns=20_000_000):
        self.seq = seq
        self.model = model
        self.cap = int(cap)
        self.r = np.asarray(seq.r, dtype=np.int64)
        last = int(self.r[-1])
        if last > max_columns:
            raise ResourceError(f"block clock needs {last} columns, above {max_columns}")
        self.hts = np.asarray(seq.f.floor_at(np.arange(last + 1)), dtype=np.int64)
        self.p = float(model.p)
        self.law = model.law_params
        self.delta = float(model.delta)

    def m(self, i, base):
        j = scan_m(self.hts, self.r, int(i), np.uint64(base), self.p, self.cap)
        if j == -1:
            raise CapExceeded(f"no crossing in even blocks {i}..{i + self.cap}")
        if j == -2:
            raise CapExceeded(f"block sequence exhausted while scanning from {i}")
        return int(j)

    def crossing(self, j, base):
        xs, ys = block_crossing_path(self.hts, self.r, int(j), np.uint64(base), self.p)
        return xs, ys

    def passage(self, src, tgt, base):
        sx, sy = src
        tx, ty = tgt
        code, p1, p2 = self.law
        return float(lazy_passage(self.hts, int(sx.min()), int(tx.max()), sx, sy, tx, ty,
                                  np.uint64(base), self.p, code, self.delta, p1, p2))

    def inner(self, jstart, a, b, bases):
        code, p1, p2 = self.law
        ax, ay = a if a is not None else b
        bx, by = b
        return inner_batch(self.hts, self.r, int(jstart), ax, ay, bx, by, a is not None, bases,
                           self.p, code, self.delta, p1, p2, self.cap)


def find_m(clock, base, i):
    return clock.m(i, base)


ORIGIN = (np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))


@dataclass
class DeltaEstimate:
    i: int
    i0: int
    delta_hat: float
    inner_samples: int
    inner_se: float
    components: dict = field(default_factory=dict)


def _inner_mean(clock, jstart, a, b, seed, outer_id, i, K):
    bases = derive_bases(seed, (INNER_TAG, outer_id, i), K)
    va, vb, lam = clock.inner(jstart, a, b, bases)
    keep = lam >= 0
    used = int(keep.sum())
    if used < 0.9 * K:
        raise CapExceeded(f"{K - used} of {K} inner replicas hit the scan cap")
    diff = (va[keep] - vb[keep]) if a is not None else vb[keep]
    se = float(diff.std(ddof=1) / math.sqrt(used)) if used > 1 else 0.0
    return float(diff.mean()), se, used, K - used


def outer_replica(clock, seed, outer_id, i0, K):
    """All increments Delta_0..Delta_{i0} for one outer field, plus T(0, Gamma_{i0})."""
    base = stream_base(seed, derive_stream(OUTER_TAG, outer_id))
    ms = []
    for i in range(i0 + 1):
        if ms and ms[-1] >= i:
            ms.append(ms[-1])
        else:
            ms.append(clock.m(i, base))
    gam = {j: clock.crossing(j, base) for j in sorted(set(ms))}
    total = clock.passage(ORIGIN, gam[ms[i0]], base)
    deltas, ses, steps = [], [], []
    discards = 0
    for i in range(i0 + 1):
        comp = {"m": ms[i]}
        if i == 0:
            step = clock.passage(ORIGIN, gam[ms[0]], base)
            prev = ORIGIN
        else:
            step = 0.0 if ms[i] == ms[i - 1] else clock.passage(gam[ms[i - 1]], gam[ms[i]], base)
            prev = gam[ms[i - 1]]
        d, se = step, 0.0
        if ms[i] < i0:
            if i == 0 or ms[i] != ms[i - 1]:
                mean, se, used, lost = _inner_mean(clock, ms[i] + 1, gam[ms[i]], prev, seed, outer_id, i, K)
                d += mean
                discards += lost
                comp["bracket"] = mean
        elif i == 0 or ms[i - 1] < i0:
            # the previous crossing is left of block i0 but this one is not
            mean, se, used, lost = _inner_mean(clock, i0, None, prev, seed, outer_id, i, K)
            d -= mean
            discards += lost
            comp["to_i0"] = mean
        comp["step"] = step
        deltas.append(d)
        ses.append(se)
        steps.append(comp)
    return {"outer": int(outer_id), "T": total, "m": ms, "delta": deltas, "se": ses,
            "components": steps, "discards": discards}


def estimate_delta(clock, seed, outer_id, i, i0, K=256):
    """Single increment Delta_{i,i0} of one outer field."""
    if not 0 <= i <= i0:
        raise ValueError("need 0 <= i <= i0")
    rec = outer_replica(clock, seed, outer_id, i0, K)
    return DeltaEstimate(i, i0, rec["delta"][i], K, rec["se"][i], rec["components"][i])


def run_martingale(clock, i0, n_outer, K=256, seed=0, workers=1):
    def chunk(a, b):
        return [outer_replica(clock, seed, r, i0, K) for r in range(a, b)]
    parts = chunked_map(chunk, n_outer, workers, chunk=8)
    return [rec for part in parts for rec in part]


# ---------------------------------------------------------------------------
# statistical checks

def telescoping_check(records):
    """Per outer replica, compare sum of increments with T - mean(T)."""
    T = np.array([r["T"] for r in records])
    n = len(T)
    var_T = T.var(ddof=1) if n > 1 else 0.0
    d = np.array([sum(r["delta"]) for r in records]) - (T - T.mean())
    s2 = np.array([sum(se * se for se in r["se"]) for r in records]) + var_T / n
    tol = 3.0 * math.sqrt(s2.mean())
    return {"mean_abs_gap": float(np.abs(d).mean()), "tolerance": tol,
            "pass": bool(np.abs(d).mean() <= tol), "outer": n}


def martingale_mean_check(records, i0):
    """Mean of each Delta_i over outer fields within 3 SE of zero."""
    D = np.array([r["delta"] for r in records])
    out = []
    for i in range(i0 + 1):
        s = describe(D[:, i])
        se = s["se"] if s["se"] > 0 else 0.0
        ok = abs(s["mean"]) <= 3 * se if se > 0 else abs(s["mean"]) < 1e-12
        out.append({"i": i, "mean": s["mean"], "se": se, "pass": bool(ok)})
    return out


def decorrelation(records, spacing=2):
    D = np.array([r["delta"] for r in records])
    rho = []
    for i in range(D.shape[1] - spacing):
        a, b = D[:, i], D[:, i + spacing]
        if a.std() > 0 and b.std() > 0:
            rho.append(float(np.corrcoef(a, b)[0, 1]))
    worst = max((abs(x) for x in rho), default=0.0)
    return {"rho": rho, "max_abs": worst, "pass": bool(worst < 0.1)}


def check_moment_bounds(records, eta=math.inf, from_index=1, ratio_max=20.0):
    """Second moments of Delta_i: uniform band and a tail slope on log-log axes."""
    D = np.array([r["delta"] for r in records])
    m2 = (D ** 2).mean(axis=0)
    sel = m2[from_index:]
    lower_ok = bool(np.all(sel > 0))
    band = float(sel.max() / sel.min()) if lower_ok else math.inf
    x = np.abs(D[:, from_index:]).ravel()
    slope = None
    grid = np.array([2, 3, 4, 6, 8, 10], dtype=float)
    ccdf = np.array([(x >= g).mean() for g in grid])
    good = ccdf > 0
    if good.sum() >= 3:
        slope = float(np.polyfit(np.log(grid[good]), np.log(ccdf[good]), 1)[0])
    tail_ok = True if slope is None or not math.isfinite(eta) else slope <= -eta / 2 + 0.5
    return {"second_moments": m2.tolist(), "band": band, "lower_ok": lower_ok,
            "upper_ok": bool(band <= ratio_max), "tail_slope": slope, "tail_ok": bool(tail_ok),
            "outer": len(records)}


def m_tail(clock, i, t_max, samples, seed=0, workers=1):
    """P(m(i) >= i + t) for t = 0..t_max with Wilson intervals."""
    def chunk(a, b):
        out = []
        for s in range(a, b):
            base = stream_base(seed, derive_stream(TAIL_TAG, i, s))
            out.append(clock.m(i, base) - i)
        return out
    gaps = np.array([g for part in chunked_map(chunk, samples, workers) for g in part])
    rows = []
    for t in range(t_max + 1):
        k = int((gaps >= t).sum())
        lo, hi = wilson(k, samples)
        rows.append({"t": t, "estimate": k / samples, "ci_low": lo, "ci_high": hi})
    return rows


def tail_check(rows, a1, se_mult=3.0):
    """Compare the m tail with the geometric bound (1 - a1/2)^t."""
    out = []
    for row in rows:
        bound = (1 - a1 / 2) ** row["t"]
        half = (row["ci_high"] - row["ci_low"]) / 2
        out.append({**row, "bound": bound, "pass": bool(row["estimate"] <= bound + se_mult * half / 1.96)})
    return out


def clt_outer(records):
    T = np.array([r["T"] for r in records])
    stat, pval = ks_normal(T)
    return {"ks": stat, "p_value": pval, "outer": len(T)}
