"""Boundary functions and finite wedge graphs.

Vertices are (x1, x2) with 0 <= x1 <= n and 0 <= x2 <= floor(f(x1)), indexed
column by column. Dual vertices (x + 1/2, y + 1/2) are stored as their lower
left integer corner (x, y).
"""
from dataclasses import dataclass
import functools
import math

import numpy as np

from .rng import edge_key_array

MAX_EXACT_INT = 2 ** 53
DEFAULT_VERTEX_CAP = 60_000_000


class ResourceError(RuntimeError):
    """Raised when a request would exceed a configured memory cap."""


def _snap_floor(v):
    """floor(v) after snapping values within a few ulps of an integer onto it."""
    v = np.asarray(v, dtype=np.float64)
    r = np.round(v)
    close = np.abs(v - r) <= 8.0 * np.spacing(np.maximum(np.abs(v), 1.0))
    return np.floor(np.where(close, r, v)).astype(np.int64)


@dataclass(frozen=True)
class WedgeFunction:
    """f with f(0) = 0, nondecreasing.

    kind: "loglog" (a log(1+u) + b log(1 + log(1+u))), "power" (u^a, 0<a<1),
    "logpower" ((log(1+u))^a) or "custom" (values tabulated at 0, 1, 2, ...).
    """
    kind: str = "loglog"
    a: float = 1.0
    b: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "loglog":
            if not self.a > 0 or self.b < 0:
                raise ValueError("loglog needs a > 0 and b >= 0")
        elif self.kind == "power":
            if not 0 < self.a < 1:
                raise ValueError("power law exponent must lie in (0, 1)")
        elif self.kind == "logpower":
            if not self.a > 0:
                raise ValueError("logpower exponent must be positive")
        elif self.kind == "custom":
            vals = np.asarray(self.values, dtype=float)
            if len(vals) < 1 or vals[0] != 0 or np.any(np.diff(vals) < 0) or np.any(vals < 0):
                raise ValueError("custom f must start at 0 and be nondecreasing")
        else:
            raise ValueError(f"unknown wedge function kind {self.kind!r}")

    @classmethod
    def loglog(cls, a, b=0.0):
        return cls("loglog", float(a), float(b))

    def __call__(self, u):
        return self.eval(u)

    def eval(self, u):
        u_arr = np.asarray(u, dtype=np.float64)
        if np.any(u_arr < 0):
            raise ValueError("f is defined on [0, inf)")
        if self.kind == "loglog":
            l1 = np.log1p(u_arr)
            out = self.a * l1
            if self.b:
                out = out + self.b * np.log1p(l1)
        elif self.kind == "power":
            out = u_arr ** self.a
        elif self.kind == "logpower":
            out = np.log1p(u_arr) ** self.a
        else:
            vals = np.asarray(self.values, dtype=float)
            if np.any(u_arr > len(vals) - 1):
                raise ValueError("custom f evaluated beyond its tabulation")
            out = np.interp(u_arr, np.arange(len(vals)), vals)
        return float(out) if np.ndim(out) == 0 else out

    def floor_at(self, k):
        """floor(f(k)) at integer k, with a few-ulp guard at integer values."""
        k_arr = np.asarray(k)
        out = _snap_floor(self.eval(k_arr.astype(np.float64)))
        return int(out) if np.ndim(out) == 0 else out

    def level(self, j):
        """Smallest integer d >= 0 with f(d) >= j."""
        return _cached_level(self, int(j))

    def _level(self, j):
        if j < 0:
            raise ValueError("level index must be nonnegative")
        if j == 0:
            return 0
        if self.kind == "custom":
            vals = np.asarray(self.values, dtype=float)
            hit = np.nonzero(_snap_floor(vals) >= j)[0]
            if len(hit) == 0:
                raise ValueError(f"level {j} is not reached by the tabulated f")
            return int(hit[0])
        if self.kind == "loglog" and self.b == 0:
            guess = math.exp(j / self.a) - 1.0
        elif self.kind == "power":
            guess = j ** (1.0 / self.a)
        elif self.kind == "logpower":
            guess = math.exp(j ** (1.0 / self.a)) - 1.0
        else:
            guess = None
        if guess is not None and guess < MAX_EXACT_INT:
            d = max(int(math.ceil(guess)), 0)
            while self.floor_at(d) < j:
                d += 1
            while d > 0 and self.floor_at(d - 1) >= j:
                d -= 1
            return d
        return self._level_bisect(j)

    def _level_bisect(self, j):
        hi = 1
        while self.floor_at(hi) < j:
            hi *= 2
            if hi > MAX_EXACT_INT:
                raise OverflowError(f"level {j} exceeds the exactly representable integer range")
        lo = hi // 2  # floor_at(lo) < j unless lo == 0
        if lo == 0:
            lo = -1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.floor_at(mid) >= j:
                hi = mid
            else:
                lo = mid
        return hi

    def levels(self, jmax):
        return np.array([self.level(j) for j in range(jmax + 1)], dtype=np.int64)

    def level_gap_asymptote(self, j):
        """Large-j predictions (level, gap) for the loglog kind."""
        if self.kind != "loglog":
            raise ValueError("asymptote only available for the loglog kind")
        if j < 1:
            raise ValueError("j must be >= 1")
        a, b = self.a, self.b
        lev = math.exp(j / a) / (j / a) ** (b / a)
        return lev, (math.exp(1.0 / a) - 1.0) * lev

    def to_dict(self):
        d = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == "custom":
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", "loglog"), float(d.get("a", 1.0)), float(d.get("b", 0.0)),
                   tuple(d.get("values", ())))


@functools.lru_cache(maxsize=1 << 16)
def _cached_level(f, j):
    # levels are bisected on exact integers; the same few are asked for over and over
    return f._level(j)


class WedgeGraph:
    """Finite wedge G_f(n) with CSR adjacency and global edge keys.

    Edge order: column by column, first the vertical edges of column x, then the
    horizontal edges from column x to x+1 (there are heights[x] + 1 of them
    since heights are nondecreasing).
    """

    def __init__(self, f, n, vertex_cap=DEFAULT_VERTEX_CAP, heights=None):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.f = f
        self.n = int(n)
        self._explicit_heights = heights is not None
        if heights is None:
            heights = f.floor_at(np.arange(self.n + 1))
        self.heights = np.asarray(heights, dtype=np.int64)
        self.heights[0] = 0
        nv = int(np.sum(self.heights + 1))
        if nv > vertex_cap:
            raise ResourceError(f"wedge with n={n} has {nv} vertices, above the cap {vertex_cap}")
        self.n_vertices = nv
        self.offset = np.zeros(self.n + 2, dtype=np.int64)
        np.cumsum(self.heights + 1, out=self.offset[1:])
        self._build_edges()
        self._dual = None

    def _build_edges(self):
        H = self.heights
        n = self.n
        cols = np.repeat(np.arange(n + 1), H + 1)
        rows = np.arange(self.n_vertices) - self.offset[cols]
        self.vx = cols
        self.vy = rows
        # vertical edges (x, y)-(x, y+1), y < H[x]
        vmask = rows < H[cols]
        vu = np.nonzero(vmask)[0]
        # horizontal edges (x, y)-(x+1, y), x < n, y <= H[x]
        hmask = cols < n
        hu = np.nonzero(hmask)[0]
        hv = self.offset[cols[hu] + 1] + rows[hu]
        # interleave per column: sort by (column, kind)
        eu = np.concatenate([vu, hu])
        ev = np.concatenate([vu + 1, hv])
        edir = np.concatenate([np.ones(len(vu), np.int64), np.zeros(len(hu), np.int64)])
        order = np.lexsort((rows[eu], 1 - edir, cols[eu]))
        self.eu = eu[order].astype(np.int64)
        self.ev = ev[order].astype(np.int64)
        self.edir = edir[order]
        self.n_edges = len(self.eu)
        self.ekey = edge_key_array(self.vx[self.eu], self.vy[self.eu], self.edir)
        # CSR
        deg = np.bincount(self.eu, minlength=self.n_vertices) + np.bincount(self.ev, minlength=self.n_vertices)
        self.indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(deg, out=self.indptr[1:])
        src = np.concatenate([self.eu, self.ev])
        dst = np.concatenate([self.ev, self.eu])
        eid = np.concatenate([np.arange(self.n_edges), np.arange(self.n_edges)])
        o = np.lexsort((dst, src))
        self.nbr = dst[o].astype(np.int64)
        self.nbr_edge = eid[o].astype(np.int64)

    # -- indexing ---------------------------------------------------------
    def vid(self, x1, x2):
        x1 = int(x1)
        x2 = int(x2)
        if not (0 <= x1 <= self.n and 0 <= x2 <= self.heights[x1]):
            raise KeyError((x1, x2))
        return int(self.offset[x1] + x2)

    def coords(self, v):
        return int(self.vx[v]), int(self.vy[v])

    def column(self, x1):
        """Vertex ids of the vertical line P(x1) inside the wedge."""
        return np.arange(self.offset[x1], self.offset[x1 + 1], dtype=np.int64)

    def columns(self, lo, hi):
        return np.arange(self.offset[lo], self.offset[hi + 1], dtype=np.int64)

    def edge_id(self, p, q):
        u, v = self.vid(*p), self.vid(*q)
        for k in range(self.indptr[u], self.indptr[u + 1]):
            if self.nbr[k] == v:
                return int(self.nbr_edge[k])
        raise KeyError((p, q))

    @property
    def top_height(self):
        return int(self.heights[self.n])

    # -- highest path and dual boundary -------------------------------------
    def highest_path(self):
        H = self.heights
        path = [(0, 0)]
        for k in range(1, self.n + 1):
            path.append((k, int(H[k - 1])))
            for y in range(int(H[k - 1]) + 1, int(H[k]) + 1):
                path.append((k, y))
        return path

    def top_boundary(self):
        """Dual corners just above/left of the highest path, grouped by level.

        Horizontal path edge (x, j)-(x+1, j) gives corner (x, j); vertical path
        edge (x, j)-(x, j+1) gives corner (x-1, j).
        """
        path = self.highest_path()
        seen = {}
        for (x0, y0), (x1, y1) in zip(path[:-1], path[1:]):
            c = (x0, y0) if y1 == y0 else (x0 - 1, y0)
            seen[c] = True
        out = {}
        for c in seen:
            out.setdefault(c[1], []).append(c)
        for j in out:
            out[j].sort()
        return out

    def bottom_boundary(self):
        return [(k - 1, -1) for k in range(1, self.n + 1)]

    def count_top_boundary(self, j):
        """Closed-form size of H*(n; j)."""
        ftop = self.top_height
        if j < 0 or j > ftop:
            return 0
        if j == ftop:
            return self.n - self.f_level(j)
        return max(self.f_level(j + 1) - self.f_level(j), 1)

    def f_level(self, j):
        if not self._explicit_heights:
            return self.f.level(j)
        return int(np.searchsorted(self.heights, j, side="left"))

    # -- dual graph ---------------------------------------------------------
    def dual(self):
        """(corner_x, corner_y) of both endpoints of each dual edge, edge-aligned."""
        if self._dual is None:
            x = self.vx[self.eu]
            y = self.vy[self.eu]
            horiz = self.edir == 0
            ax = np.where(horiz, x, x - 1)
            ay = np.where(horiz, y - 1, y)
            bx = x
            by = y
            self._dual = (ax, ay, bx, by)
        return self._dual

    def dual_corners(self):
        ax, ay, bx, by = self.dual()
        pts = np.unique(np.concatenate([np.stack([ax, ay], 1), np.stack([bx, by], 1)]), axis=0)
        return [tuple(map(int, p)) for p in pts]

    def to_json(self):
        return {"n": self.n, "f": self.f.to_dict(), "columns": self.heights.tolist(),
                "highest_path": [list(p) for p in self.highest_path()]}


def build_graph(f, n, vertex_cap=DEFAULT_VERTEX_CAP):
    return WedgeGraph(f, n, vertex_cap=vertex_cap)
