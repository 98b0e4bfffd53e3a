"""Block sequences 0 = r_0 < r_1 < ... and empirical audits of the block assumptions."""
from dataclasses import dataclass, field
import math

import numpy as np

from .kernels import bfs01
from .lattice import block_crossing_lazy
from .parallel import chunked_map
from .rng import stream_base, sample_weight_field
from .stats import wilson
from .wedge import MAX_EXACT_INT, WedgeGraph

REGIMES = ("critical", "sub_xi", "at_xi")
J0_WINDOW = 20
J0_SEARCH = 400


def split_blocks(n, d):
    """Widths d_1..d_q with sum n, d_1 = d + (n mod d) and the rest equal to d."""
    n, d = int(n), int(d)
    if d < 1:
        raise ValueError("block width must be >= 1")
    if d > n:
        raise ValueError(f"cannot split {n} into blocks of width {d}")
    q, r = divmod(n, d)
    return [d + r] + [d] * (q - 1)


def split_blocks_even(n, M):
    """M widths, each floor(n/M) or floor(n/M) + 1, larger ones first."""
    n, M = int(n), int(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    if n < M:
        raise ValueError(f"{n} cannot be split into {M} blocks of positive width")
    q, r = divmod(n, M)
    return [q + 1] * r + [q] * (M - r)


def _safe_level(f, j):
    try:
        lv = f.level(j)
    except (OverflowError, ValueError):
        return None
    return lv if lv < MAX_EXACT_INT else None


def block_width_for_level(regime, j, xi):
    if regime == "critical":
        return j
    return int(math.ceil(math.exp((j + 1) / xi)))


def find_j0(f, regime, xi=None, window=J0_WINDOW, search=J0_SEARCH):
    """Smallest j >= 1 such that the level-gap condition holds on [j, j + window].

    Levels beyond the exact integer range end the window early (see notes).
    Returns (j0, truncated) where truncated says the window was cut short.
    """
    def ok(j):
        lo, hi = _safe_level(f, j), _safe_level(f, j + 1)
        if lo is None or hi is None:
            return None
        gap = hi - lo
        if regime == "critical":
            return gap >= j
        d = block_width_for_level(regime, j, xi)
        return gap >= d >= 6 * j

    for j in range(1, search):
        if ok(j) is None:
            break
        truncated = False
        good = True
        for jj in range(j, j + window + 1):
            r = ok(jj)
            if r is None:
                truncated = True
                break
            if not r:
                good = False
                break
        if good:
            return j, truncated
    raise ValueError("no level index satisfies the gap condition in the search range")


@dataclass
class BlockSequence:
    r: np.ndarray
    regime: str
    f: object
    p: float
    xi: float = None
    j0: int = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=np.int64)
        if self.r[0] != 0 or np.any(np.diff(self.r) <= 0):
            raise ValueError("sequence must start at 0 and increase strictly")

    def __len__(self):
        return len(self.r)

    def block(self, i):
        """Columns (r_i, r_{i+1}) of R_i."""
        if i + 1 >= len(self.r):
            raise IndexError(f"block {i} beyond the generated sequence")
        return int(self.r[i]), int(self.r[i + 1])

    def even_block(self, j):
        """Columns of R'_j = R_{2j}."""
        return self.block(2 * j)

    @property
    def n_even_blocks(self):
        return (len(self.r) - 1) // 2

    def iota(self, n):
        """min{i : r_{2i} >= n}."""
        even = self.r[::2]
        k = int(np.searchsorted(even, n, side="left"))
        if k >= len(even):
            raise ValueError(f"sequence exhausted before reaching {n}")
        return k

    def level_constant(self, i):
        lo, hi = self.block(i)
        return self.f.floor_at(lo) == self.f.floor_at(hi - 1)

    def width_ok(self, i):
        lo, hi = self.block(i)
        h = self.f.floor_at(lo)
        w = hi - lo
        if self.regime == "critical":
            return h >= 1 and h <= w <= 2 * h - 1
        if self.regime == "sub_xi":
            d = block_width_for_level("sub_xi", h, self.xi)
            return d <= w <= 2 * d - 1
        return w > h

    def audit_index(self):
        """Smallest i such that width and level constancy hold for every later block."""
        last = len(self.r) - 1
        idx = last
        for i in range(last - 1, -1, -1):
            if self.width_ok(i) and self.level_constant(i):
                idx = i
            else:
                break
        return idx

    def to_dict(self):
        return {"r": self.r.tolist(), "regime": self.regime, "f": self.f.to_dict(), "p": self.p,
                "xi": self.xi, "j0": self.j0, "audit_index": self.audit_index(), "notes": self.notes}


def _check_regime(f, p, xi, regime):
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if regime == "critical":
        if p != 0.5:
            raise ValueError("the critical construction needs p = 1/2")
        return
    if not p > 0.5:
        raise ValueError(f"regime {regime} needs p > 1/2")
    if xi is None or not xi > 0:
        raise ValueError(f"regime {regime} needs a positive correlation length estimate")
    if f.kind != "loglog":
        return
    if regime == "sub_xi" and not f.a < xi:
        raise ValueError(f"sub_xi needs a < xi, got a={f.a}, xi={xi}")
    if regime == "at_xi" and not f.b <= f.a:
        raise ValueError(f"at_xi needs b <= a, got a={f.a}, b={f.b}")


def build_sequence(f, p, xi_hat=None, regime="critical", i_max=100):
    """Generate r_0..r_{i_max} (fewer if levels leave the exact integer range)."""
    _check_regime(f, p, xi_hat, regime)
    notes = []
    if regime == "at_xi":
        expo = f.b / xi_hat
        j = 0
        vals = [0]
        js = [0, 1]
        while len(js) < i_max + 1:
            jj = js[-1]
            js.append(jj + int(math.ceil(jj ** expo)))
        for jj in js[1:]:
            lv = _safe_level(f, jj)
            if lv is None:
                notes.append(f"stopped at level {jj}: beyond exact integer range")
                break
            if lv > vals[-1]:
                vals.append(lv)
        return BlockSequence(np.array(vals), regime, f, p, xi_hat, None, notes)

    j0, truncated = find_j0(f, regime, xi_hat)
    if truncated:
        notes.append("j0 window truncated at the exact integer range")
    vals = {0}
    j = 0
    while len(vals) < i_max + 1:
        lo, hi = _safe_level(f, j), _safe_level(f, j + 1)
        if lo is None or hi is None:
            notes.append(f"stopped at level {j}: beyond exact integer range")
            break
        if j < j0 or hi == lo:
            vals.add(hi)
        else:
            d = block_width_for_level(regime, j, xi_hat)
            pos = lo
            for w in split_blocks(hi - lo, d):
                pos += w
                vals.add(pos)
        j += 1
    r = np.array(sorted(vals), dtype=np.int64)[: i_max + 1]
    return BlockSequence(r, regime, f, p, xi_hat, j0, notes)


# ---------------------------------------------------------------------------
# audits

@dataclass
class AssumptionAudit:
    indices: list
    a1: list            # per i: dict(estimate, ci_low, ci_high, samples)
    a2: list            # per i: mean increment (None if beyond the feasible width)
    a2_se: list
    a3: dict            # M -> per i probability
    a3_ci: dict
    samples: int
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"indices": self.indices, "a1": self.a1, "a2": self.a2, "a2_se": self.a2_se,
                "a3": {str(k): v for k, v in self.a3.items()},
                "a3_ci": {str(k): v for k, v in self.a3_ci.items()},
                "samples": self.samples, "notes": self.notes}


def _a1_chunk(seq, model, idx, seed, stream0):
    def run(a, b):
        hits = np.zeros(len(idx), dtype=np.int64)
        for s in range(a, b):
            base = stream_base(seed, stream0 + s)
            for k, i in enumerate(idx):
                lo, hi = seq.block(i)
                hits[k] += block_crossing_lazy(seq.f, lo, hi, base, model.p, first_width=64)
        return hits
    return run


def _line_chunk(graph, seq, model, idx, seed, stream0, M_list, with_a2):
    cols = [(int(graph.offset[x]), int(graph.offset[x + 1])) for x in range(graph.n + 1)]
    def run(a, b):
        inc = np.zeros((b - a, len(idx)))
        tails = np.zeros((len(M_list), len(idx)), dtype=np.int64)
        origin = np.array([0], dtype=np.int64)
        for s in range(a, b):
            fld = sample_weight_field(model, graph, seed, stream0 + s)
            if with_a2:
                dist = bfs01(graph.indptr, graph.nbr, graph.nbr_edge, fld.t, origin, 0, graph.n_vertices)
            for k, i in enumerate(idx):
                lo, hi = seq.block(i)
                if with_a2:
                    inc[s - a, k] = dist[cols[hi][0]:cols[hi][1]].min() - dist[cols[lo][0]:cols[lo][1]].min()
                src = graph.column(lo)
                d2 = bfs01(graph.indptr, graph.nbr, graph.nbr_edge, fld.t, src, cols[lo][0], cols[hi][1])
                t_line = d2[cols[hi][0]:cols[hi][1]].min()
                for m, M in enumerate(M_list):
                    tails[m, k] += t_line >= M
        return inc, tails
    return run


def audit_assumptions(seq, model, i_range, samples, M_list=(1, 2), seed=0, workers=1,
                      vertex_cap=3_000_000, stream0=0):
    """Monte Carlo estimates of the block assumptions on blocks i in i_range.

    A1 is exact on any block width (lazy window search). A2/A3 need the wedge
    up to r_{i+1} in memory; blocks beyond vertex_cap are skipped and noted.
    """
    idx = list(i_range)
    notes = []
    hits = sum(chunked_map(_a1_chunk(seq, model, idx, seed, stream0), samples, workers))
    a1 = []
    for k in range(len(idx)):
        lo, hi = wilson(int(hits[k]), samples)
        a1.append({"estimate": hits[k] / samples, "ci_low": lo, "ci_high": hi, "samples": samples})

    # line-to-line quantities on the blocks that fit in memory
    feasible = []
    for i in idx:
        hi_col = seq.block(i)[1]
        nv = int(np.sum(seq.f.floor_at(np.arange(hi_col + 1)) + 1)) if hi_col <= 50_000_000 else vertex_cap + 1
        if nv <= vertex_cap:
            feasible.append(i)
    if len(feasible) < len(idx):
        notes.append(f"A2/A3 measured on {len(feasible)} of {len(idx)} blocks (vertex cap {vertex_cap})")
    a2 = [None] * len(idx)
    a2_se = [None] * len(idx)
    a3 = {M: [None] * len(idx) for M in M_list}
    a3_ci = {M: [None] * len(idx) for M in M_list}
    if feasible:
        n = seq.block(feasible[-1])[1]
        graph = WedgeGraph(seq.f, n, vertex_cap=vertex_cap)
        parts = chunked_map(_line_chunk(graph, seq, model, feasible, seed, stream0 + (1 << 40),
                                        list(M_list), True), samples, workers)
        inc = np.concatenate([p[0] for p in parts])
        tails = sum(p[1] for p in parts)
        for k, i in enumerate(feasible):
            pos = idx.index(i)
            a2[pos] = float(inc[:, k].mean())
            a2_se[pos] = float(inc[:, k].std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
            for m, M in enumerate(M_list):
                a3[M][pos] = tails[m, k] / samples
                a3_ci[M][pos] = wilson(int(tails[m, k]), samples)
    return AssumptionAudit(idx, a1, a2, a2_se, a3, a3_ci, samples, notes)


def increment_bound_form(seq, i, p, xi=None):
    """Shape of the line-to-line increment bound for block i (s = r_i, t = r_{i+1})."""
    s, t = seq.block(i)
    h = max(seq.f.floor_at(s), 1)
    if p == 0.5:
        return (t - s) / h + 1.0
    return (t - s + h) * math.exp(-h / xi)


def fit_increment_bound(seq, audit, p, xi=None, slack=2.0):
    """Fit one constant C to A2 against the increment bound form; pass if no block exceeds slack*C*form."""
    pairs = [(increment_bound_form(seq, i, p, xi), v) for i, v in zip(audit.indices, audit.a2) if v is not None]
    if not pairs:
        raise ValueError("no A2 measurements to fit")
    form = np.array([q for q, _ in pairs])
    val = np.array([v for _, v in pairs])
    C = float((form * val).sum() / (form * form).sum())
    worst = float(np.max(val / (C * form))) if C > 0 else 0.0
    return {"C": C, "worst_ratio": worst, "pass": bool(C >= 0 and worst <= slack)}
