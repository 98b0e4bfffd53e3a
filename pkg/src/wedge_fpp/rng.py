"""Counter-based random fields.

Every edge draw is a pure function of (seed, stream, edge key), so a field can
be evaluated lazily inside a kernel, rebuilt for a subgraph, or generated by
any number of workers without changing a single bit.

Edge keys are global lattice coordinates, not graph indices: the same edge of
Z^2 gets the same weight in every wedge, box or block built from one stream.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._jit import HAS_NUMBA, njit

MASK64 = (1 << 64) - 1
KEY_OFFSET = 1 << 30
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
TAU_SALT = 0xD1B54A32D192ED03

LAW_CONSTANT = 0
LAW_SHIFTED_EXP = 1
LAW_PARETO = 2


def _mix64_int(z):
    z = (int(z) + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


if HAS_NUMBA:
    @njit
    def mix64(z):
        z = z + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))

    @njit
    def to_unit(h):
        return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)
else:
    mix64 = _mix64_int

    def to_unit(h):
        return float(int(h) >> 11) * (1.0 / 9007199254740992.0)


def mix64_array(z):
    """Vectorized splitmix64 finalizer on a uint64 array (wraps silently)."""
    z = np.asarray(z, dtype=np.uint64) + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_base(seed, stream):
    """64-bit base key of a (seed, stream) pair."""
    return _mix64_int(_mix64_int(int(seed) & MASK64) ^ (int(stream) & MASK64))


def derive_stream(*parts):
    """Hash a tuple of integers into a stream id (used for nested replicas)."""
    h = 0x243F6A8885A308D3
    for v in parts:
        h = _mix64_int(h ^ (int(v) & MASK64))
    return h


@njit
def edge_key(x1, x2, d):
    """Global key of the lattice edge leaving (x1, x2) in direction d (0: +x, 1: +y)."""
    return ((x1 + KEY_OFFSET) << 32) | ((x2 + KEY_OFFSET) << 1) | d


def edge_key_array(x1, x2, d):
    x1 = np.asarray(x1, dtype=np.int64)
    x2 = np.asarray(x2, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    return ((x1 + KEY_OFFSET) << 32) | ((x2 + KEY_OFFSET) << 1) | d


@njit
def edge_uniform(base, key):
    return to_unit(mix64(np.uint64(base) ^ np.uint64(key)))


@njit
def tau_prime_from_uniform(u, law, delta, p1, p2):
    if law == LAW_SHIFTED_EXP:
        return delta - math.log1p(-u) / p1
    if law == LAW_PARETO:
        return delta + p1 * ((1.0 - u) ** (-1.0 / p2) - 1.0)
    return delta


@njit
def edge_tau_prime(base, key, law, delta, p1, p2):
    h = mix64(np.uint64(base) ^ np.uint64(key))
    u = to_unit(mix64(h ^ np.uint64(TAU_SALT)))
    return tau_prime_from_uniform(u, law, delta, p1, p2)


@njit
def fill_bits(keys, base, p, out):
    """out[e] = 1 if edge e is closed (t_e = 1), i.e. its uniform is >= p."""
    for e in range(keys.shape[0]):
        out[e] = 1 if edge_uniform(base, keys[e]) >= p else 0


@njit
def fill_tau(keys, base, p, law, delta, p1, p2, out):
    for e in range(keys.shape[0]):
        h = mix64(np.uint64(base) ^ np.uint64(keys[e]))
        if to_unit(h) >= p:
            u = to_unit(mix64(h ^ np.uint64(TAU_SALT)))
            out[e] = tau_prime_from_uniform(u, law, delta, p1, p2)
        else:
            out[e] = 0.0


def uniforms_numpy(keys, base):
    """Pure numpy version of the per-edge uniforms, used to cross-check kernels."""
    h = mix64_array(np.uint64(base) ^ np.asarray(keys, dtype=np.int64).astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def tau_uniforms_numpy(keys, base):
    h = mix64_array(np.uint64(base) ^ np.asarray(keys, dtype=np.int64).astype(np.uint64))
    h2 = mix64_array(h ^ np.uint64(TAU_SALT))
    return (h2 >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


_LAW_CODES = {"constant": LAW_CONSTANT, "shifted_exp": LAW_SHIFTED_EXP, "pareto": LAW_PARETO}


@dataclass(frozen=True)
class WeightModel:
    """Law of tau_e = t_e * tau'_e.

    P(t_e = 0) = p, and tau' lives on [delta, inf) so the gap condition holds.
    law: {"kind": "constant"} | {"kind": "shifted_exp", "rate": r}
         | {"kind": "pareto", "exponent": alpha, "scale": s}
    """
    p: float
    delta: float = 1.0
    law: dict = field(default_factory=lambda: {"kind": "constant"})

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        kind = self.law.get("kind")
        if kind not in _LAW_CODES:
            raise ValueError(f"unknown positive law {kind!r}")
        if kind == "shifted_exp" and not self.law.get("rate", 1.0) > 0:
            raise ValueError("rate must be positive")
        if kind == "pareto":
            if not self.law.get("exponent", 4.5) > 0 or not self.law.get("scale", 1.0) > 0:
                raise ValueError("pareto exponent and scale must be positive")

    @property
    def law_params(self):
        kind = self.law["kind"]
        if kind == "shifted_exp":
            return LAW_SHIFTED_EXP, float(self.law.get("rate", 1.0)), 0.0
        if kind == "pareto":
            return LAW_PARETO, float(self.law.get("scale", 1.0)), float(self.law.get("exponent", 4.5))
        return LAW_CONSTANT, 0.0, 0.0

    @property
    def eta(self):
        """Moment exponent: all moments for the light laws, < exponent for pareto."""
        if self.law["kind"] == "pareto":
            return float(self.law.get("exponent", 4.5))
        return math.inf

    def mean_positive(self):
        code, p1, p2 = self.law_params
        if code == LAW_SHIFTED_EXP:
            return self.delta + 1.0 / p1
        if code == LAW_PARETO:
            return self.delta + p1 / (p2 - 1.0) if p2 > 1 else math.inf
        return self.delta

    def to_dict(self):
        return {"p": self.p, "delta": self.delta, "law": dict(self.law)}

    @classmethod
    def from_dict(cls, d):
        return cls(p=float(d["p"]), delta=float(d.get("delta", 1.0)),
                   law=dict(d.get("law", {"kind": "constant"})))


@dataclass
class WeightField:
    """Coupled Bernoulli/positive field on a graph's edges."""
    graph: object
    model: WeightModel
    seed: int
    stream: int
    t: np.ndarray  # uint8, 1 where tau_e > 0

    @property
    def base(self):
        return stream_base(self.seed, self.stream)

    @property
    def tau_prime(self):
        code, p1, p2 = self.model.law_params
        u = tau_uniforms_numpy(self.graph.ekey, self.base)
        if code == LAW_SHIFTED_EXP:
            return self.model.delta - np.log1p(-u) / p1
        if code == LAW_PARETO:
            return self.model.delta + p1 * ((1.0 - u) ** (-1.0 / p2) - 1.0)
        return np.full(u.shape, self.model.delta)

    @property
    def tau(self):
        return self.t * self.tau_prime


def sample_weight_field(model, graph, seed, stream=0):
    t = np.empty(graph.n_edges, dtype=np.uint8)
    fill_bits(graph.ekey, np.uint64(stream_base(seed, stream)), float(model.p), t)
    return WeightField(graph=graph, model=model, seed=int(seed), stream=int(stream), t=t)


def tau_array(model, keys, seed, stream):
    """Dense tau = t * tau' for an array of edge keys."""
    code, p1, p2 = model.law_params
    out = np.empty(len(keys), dtype=np.float64)
    fill_tau(np.asarray(keys, dtype=np.int64), np.uint64(stream_base(seed, stream)), float(model.p),
             code, float(model.delta), p1, p2, out)
    return out


def bits_array(p, keys, seed, stream):
    out = np.empty(len(keys), dtype=np.uint8)
    fill_bits(np.asarray(keys, dtype=np.int64), np.uint64(stream_base(seed, stream)), float(p), out)
    return out


@dataclass
class PercConfig:
    """Bond configuration of ([0, w] x [0, h]) with omega = 1 meaning open.

    Open here follows the percolation convention (probability p_open). In the
    passage-time code an edge is "open" when t_e = 0; the two agree when
    p_open = p because both test uniform < p.
    """
    w: int
    h: int
    p_open: float
    horiz: np.ndarray  # (w, h+1): edge (x, y)-(x+1, y)
    vert: np.ndarray   # (w+1, h): edge (x, y)-(x, y+1)


def sample_rectangle_config(w, h, p_open, seed, stream=0, x0=0, y0=0):
    if w < 1 or h < 1:
        raise ValueError("rectangle needs w, h >= 1")
    xs, ys = np.meshgrid(np.arange(w) + x0, np.arange(h + 1) + y0, indexing="ij")
    kh = edge_key_array(xs, ys, 0).ravel()
    xs, ys = np.meshgrid(np.arange(w + 1) + x0, np.arange(h) + y0, indexing="ij")
    kv = edge_key_array(xs, ys, 1).ravel()
    base = stream_base(seed, stream)
    horiz = (uniforms_numpy(kh, base) < p_open).reshape(w, h + 1)
    vert = (uniforms_numpy(kv, base) < p_open).reshape(w + 1, h)
    return PercConfig(w=w, h=h, p_open=float(p_open), horiz=horiz, vert=vert)


def derive_bases(seed, parts, count):
    """Base keys of streams derive_stream(*parts, k) for k = 0..count-1, vectorized."""
    h = 0x243F6A8885A308D3
    for v in parts:
        h = _mix64_int(h ^ (int(v) & MASK64))
    k = np.arange(count, dtype=np.uint64)
    streams = mix64_array(np.uint64(h) ^ k)
    return mix64_array(np.uint64(_mix64_int(int(seed) & MASK64)) ^ streams)
