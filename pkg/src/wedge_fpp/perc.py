"""Monte Carlo estimators for subcritical bond percolation on Z^2.

Edges are open with probability p (uniform < p), evaluated lazily from the
counter RNG, so clusters are explored without materializing the lattice.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._jit import njit
from .lattice import is_open
from .parallel import chunked_map
from .rng import derive_bases
from .stats import linfit, prop_summary, wilson

MODE_PLANE = 0      # 0 <-> P(n)
MODE_POINT = 1      # 0 <-> n e_1
MODE_COUNT = 2      # #{x in P(n) : 0 <-> x}, the summand of G_n
MODE_STRICT = 3     # strict-cylinder event summed over P(n), the summand of H_n
MODE_BOX = 4        # 0 <-> boundary of B(n)

_TAGS = {MODE_PLANE: 0x706C, MODE_POINT: 0x7074, MODE_COUNT: 0x676E, MODE_STRICT: 0x686E,
         MODE_BOX: 0x6278}
RECT_TAG = 0x7263


def vertical_margin(n):
    return max(3 * n, 8)


def default_box(n, mode):
    """(xlo, xhi, ylo, yhi) used for each quantity."""
    m = vertical_margin(n)
    if mode == MODE_PLANE:
        return -n, n, -m, m
    if mode == MODE_STRICT:
        return 0, n, -m, m
    if mode == MODE_BOX:
        return -n, n, -n, n
    return -n, 2 * n, -m, m


@njit
def _open_step(base, p, x, y, d):
    """Is the edge from (x, y) in direction d (E N W S) open?"""
    if d == 0:
        return is_open(base, p, x, y, 0)
    if d == 1:
        return is_open(base, p, x, y, 1)
    if d == 2:
        return is_open(base, p, x - 1, y, 0)
    return is_open(base, p, x, y - 1, 1)


@njit
def explore_batch(bases, p, n, xlo, xhi, ylo, yhi, mode):
    """Per-sample outcome of exploring the open cluster of the origin inside a box."""
    W = xhi - xlo + 1
    H = yhi - ylo + 1
    stamp = np.zeros(W * H, dtype=np.int64)
    qx = np.empty(W * H, dtype=np.int64)
    qy = np.empty(W * H, dtype=np.int64)
    out = np.zeros(bases.shape[0], dtype=np.int64)
    dx = (1, 0, -1, 0)
    dy = (0, 1, 0, -1)
    for s in range(bases.shape[0]):
        base = bases[s]
        tag = s + 1
        stamp[(0 - xlo) * H + (0 - ylo)] = tag
        qx[0] = 0
        qy[0] = 0
        qt = 1
        qh = 0
        res = 0
        on_left = 0
        on_right = 0
        while qh < qt:
            x = qx[qh]
            y = qy[qh]
            qh += 1
            if mode == MODE_PLANE and x == n:
                res = 1
                break
            if mode == MODE_POINT and x == n and y == 0:
                res = 1
                break
            if mode == MODE_BOX and (x == xlo or x == xhi or y == ylo or y == yhi):
                res = 1
                break
            if x == n:
                on_right += 1
            if x == 0:
                on_left += 1
            for d in range(4):
                x2 = x + dx[d]
                y2 = y + dy[d]
                if x2 < xlo or x2 > xhi or y2 < ylo or y2 > yhi:
                    continue
                c = (x2 - xlo) * H + (y2 - ylo)
                if stamp[c] == tag:
                    continue
                if _open_step(base, p, x, y, d):
                    stamp[c] = tag
                    qx[qt] = x2
                    qy[qt] = y2
                    qt += 1
        if mode == MODE_COUNT:
            res = on_right
        elif mode == MODE_STRICT:
            res = 1 if (on_left == 1 and on_right == 1) else 0
        out[s] = res
    return out


def explore(p, n, samples, seed=0, mode=MODE_PLANE, box=None, workers=1):
    box = default_box(n, mode) if box is None else box

    def chunk(a, b):
        bases = derive_bases(seed, (_TAGS[mode], n, a), b - a)
        return explore_batch(bases, float(p), int(n), *map(int, box), mode)
    return np.concatenate(chunked_map(chunk, samples, workers, chunk=4096))


def estimate_point_to_plane(p, n, samples, seed=0, box=None, workers=1):
    k = int(explore(p, n, samples, seed, MODE_PLANE, box, workers).sum())
    return prop_summary(k, samples)


def estimate_point_to_point(p, n, samples, seed=0, box=None, workers=1):
    k = int(explore(p, n, samples, seed, MODE_POINT, box, workers).sum())
    return prop_summary(k, samples)


def estimate_point_to_box(p, n, samples, seed=0, workers=1):
    k = int(explore(p, n, samples, seed, MODE_BOX, None, workers).sum())
    return prop_summary(k, samples)


def estimate_Gn(p, n, samples, seed=0, box=None, workers=1):
    x = explore(p, n, samples, seed, MODE_COUNT, box, workers)
    se = x.std(ddof=1) / math.sqrt(samples) if samples > 1 else 0.0
    return {"estimate": float(x.mean()), "se": float(se), "samples": samples,
            "ci_low": float(x.mean() - 1.96 * se), "ci_high": float(x.mean() + 1.96 * se)}


def estimate_Hn(p, n, samples, seed=0, box=None, workers=1):
    """H_n: the strict-cylinder events are disjoint over P(n), so one indicator per sample."""
    k = int(explore(p, n, samples, seed, MODE_STRICT, box, workers).sum())
    return prop_summary(k, samples)


# ---------------------------------------------------------------------------
# rectangles

@njit
def rect_crossing_batch(bases, p, w, h):
    """Left-right open crossing of [0, w] x [0, h], one flag per sample.

    Left-column clusters are explored bottom to top and the search stops at the
    first crossing; visited vertices live in a dict so h can be very large.
    """
    out = np.zeros(bases.shape[0], dtype=np.uint8)
    dx = (1, 0, -1, 0)
    dy = (0, 1, 0, -1)
    for s in range(bases.shape[0]):
        base = bases[s]
        seen = {np.int64(0): np.uint8(1)}
        seen.pop(np.int64(0))
        qx = [np.int64(0)]
        qy = [np.int64(0)]
        found = False
        for y0 in range(h + 1):
            key0 = np.int64(y0) * np.int64(w + 1)
            if key0 in seen:
                continue
            seen[key0] = np.uint8(1)
            qx.clear()
            qy.clear()
            qx.append(np.int64(0))
            qy.append(np.int64(y0))
            qh = 0
            while qh < len(qx):
                x = qx[qh]
                y = qy[qh]
                qh += 1
                if x == w:
                    found = True
                    break
                for d in range(4):
                    x2 = x + dx[d]
                    y2 = y + dy[d]
                    if x2 < 0 or x2 > w or y2 < 0 or y2 > h:
                        continue
                    key = np.int64(y2) * np.int64(w + 1) + x2
                    if key in seen:
                        continue
                    if _open_step(base, p, x, y, d):
                        seen[key] = np.uint8(1)
                        qx.append(np.int64(x2))
                        qy.append(np.int64(y2))
            if found:
                break
        out[s] = 1 if found else 0
    return out


def estimate_rect_crossing(p, n, h, samples, seed=0, workers=1, tag=RECT_TAG):
    """P(left-right open crossing of [0, n] x [0, h])."""
    if h < 1 or n < 1:
        raise ValueError("rectangle needs n, h >= 1")

    def chunk(a, b):
        bases = derive_bases(seed, (tag, n, h, a), b - a)
        return rect_crossing_batch(bases, float(p), int(n), int(h))
    k = int(np.concatenate(chunked_map(chunk, samples, workers, chunk=256)).sum())
    return prop_summary(k, samples)


def phi(s):
    """s / (s + 1)."""
    return s / (s + 1.0)


# ---------------------------------------------------------------------------
# correlation length

@dataclass
class XiEstimate:
    p: float
    target: str
    samples: int
    n_window: tuple
    slope: float
    xi: float
    stderr: float
    intercept: float = 0.0
    curve: list = field(default_factory=list)

    def to_dict(self):
        return {"p": self.p, "target": self.target, "samples": self.samples, "n_window": list(self.n_window),
                "slope": self.slope, "xi": self.xi, "stderr": self.stderr,
                "intercept": self.intercept, "curve": self.curve}


def estimate_xi(p, nmax, samples, seed=0, workers=1, floor=1e-4, min_hits=20, target="point"):
    """xi from the decay of P(0 <-> n e_1), or of P(0 <-> P(n)) with target="plane".

    The window starts at the first n with p_hat < 0.5 and stops before the
    estimate drops below `floor` or below `min_hits` hits. Weighted least
    squares of -log p_hat on n (weights from the binomial delta method).
    """
    if not 0 < p < 0.5:
        raise ValueError("correlation length is estimated for 0 < p < 1/2 only")
    if target not in ("point", "plane"):
        raise ValueError("target must be 'point' or 'plane'")
    mode = MODE_POINT if target == "point" else MODE_PLANE
    curve = []
    for n in range(1, nmax + 1):
        k = int(explore(p, n, samples, seed, mode, None, workers).sum())
        curve.append((n, k))
        if k / samples < floor or k < min_hits:
            break
    rows = [(n, k) for n, k in curve if k >= min_hits and k / samples >= floor]
    start = next((i for i, (n, k) in enumerate(rows) if k / samples < 0.5), None)
    if start is None or len(rows) - start < 3:
        raise ValueError(f"too few usable points to fit xi at p={p}; raise samples")
    rows = rows[start:]
    n_arr = np.array([n for n, _ in rows], float)
    ph = np.array([k / samples for _, k in rows])
    var_log = (1 - ph) / (samples * ph)   # delta method: Var(log p_hat)
    c0, c1, se1 = linfit(n_arr, -np.log(ph), 1.0 / var_log)
    if not c1 > 0:
        raise ValueError("nonpositive decay slope")
    curve_out = [{"n": n, "estimate": k / samples, "ci_low": wilson(k, samples)[0],
                  "ci_high": wilson(k, samples)[1], "samples": samples} for n, k in curve]
    return XiEstimate(p=p, target=target, samples=samples, n_window=(int(n_arr[0]), int(n_arr[-1])), slope=float(c1),
                      xi=float(1 / c1), stderr=float(se1 / c1 ** 2), intercept=float(c0), curve=curve_out)


def ratio_stability(probs):
    """Coefficient of variation of successive ratios p(n+1)/p(n)."""
    ph = np.asarray(probs, float)
    r = ph[1:] / ph[:-1]
    return float(r.std(ddof=1) / r.mean()) if len(r) > 1 else 0.0


# ---------------------------------------------------------------------------
# sponge scan

SPONGE_DRIVERS = {"sub": 0.5, "super": 1.5, "critical": 1.0}


def sponge_heights(kind, n_list, xi_hat, c=1.0):
    e = SPONGE_DRIVERS[kind]
    return [max(1, int(round(c * math.exp(e * n / xi_hat)))) for n in n_list]


def sponge_verdict(p_hat):
    ph = np.asarray(p_hat, float)
    trend = np.polyfit(np.arange(len(ph)), ph, 1)[0] if len(ph) > 1 else 0.0
    if ph[-1] < 0.1 and trend < 0:
        return "to_zero"
    if ph[-1] > 0.9 and trend > 0:
        return "to_one"
    if np.all((ph >= 0.05) & (ph <= 0.95)):
        return "intermediate"
    return "unclear"


def sponge_phase_scan(p, kind, n_list, xi_hat, samples, seed=0, c=1.0, workers=1):
    hs = sponge_heights(kind, n_list, xi_hat, c)
    rows = []
    for n, h in zip(n_list, hs):
        est = estimate_rect_crossing(p, n, h, samples, seed, workers, tag=RECT_TAG + 1)
        rows.append({"n": n, "h": h, "driver": h * math.exp(-n / xi_hat), **est})
    return {"kind": kind, "rows": rows, "verdict": sponge_verdict([r["estimate"] for r in rows])}
