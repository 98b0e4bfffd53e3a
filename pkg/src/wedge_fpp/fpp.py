"""Passage times on wedges and the dual crossing counts that must equal them."""
from dataclasses import dataclass, field

import numpy as np

from .kernels import bfs01, dijkstra, tight_path, max_edge_disjoint, decompose_paths


@dataclass
class PassageResult:
    value: float
    path: list          # vertex coordinates of one optimal path (deterministic tie-break)
    target: tuple


@dataclass
class CrossingCount:
    value: int
    kind: str
    certificate: list = field(default=None)  # list of paths, each a list of nodes


def _as_vertex_ids(graph, spec):
    """Resolve a source/target spec: ("vertex", (x1, x2)), ("line", r) or ("set", [...])."""
    if isinstance(spec, str) and spec == "origin":
        return np.array([graph.vid(0, 0)], dtype=np.int64)
    kind, val = spec
    if kind == "vertex":
        return np.array([graph.vid(*val)], dtype=np.int64)
    if kind == "line":
        return graph.column(int(val))
    if kind == "set":
        return np.array(sorted(graph.vid(*c) for c in val), dtype=np.int64)
    raise ValueError(f"unknown endpoint spec {spec!r}")


def passage_time(graph, field_, source="origin", target=None, mode="bernoulli",
                 weights=None, with_path=True, columns=None):
    """Shortest passage time between vertex sets.

    mode "bernoulli" uses t (0/1 BFS, integer result); "general" uses tau
    (heap Dijkstra). `weights` overrides the field's per-edge weights.
    `columns=(lo, hi)` restricts the search to that column window.
    """
    if target is None:
        target = ("line", graph.n)
    src = _as_vertex_ids(graph, source)
    tgt = _as_vertex_ids(graph, target)
    if columns is None:
        vlo, vhi = 0, graph.n_vertices
    else:
        vlo, vhi = int(graph.offset[columns[0]]), int(graph.offset[columns[1] + 1])
    if mode == "bernoulli":
        w = field_.t if weights is None else np.asarray(weights, dtype=np.uint8)
        dist = bfs01(graph.indptr, graph.nbr, graph.nbr_edge, w, src, vlo, vhi)
        wf = w.astype(np.float64)
        distf = dist.astype(np.float64)
    elif mode == "general":
        wf = field_.tau if weights is None else np.asarray(weights, dtype=np.float64)
        distf = dijkstra(graph.indptr, graph.nbr, graph.nbr_edge, wf, src, vlo, vhi)
        dist = distf
    else:
        raise ValueError("mode must be 'bernoulli' or 'general'")
    dt = dist[tgt]
    k = int(np.argmin(dt))  # first (smallest index) minimizer; tgt is sorted
    best = tgt[k]
    value = dt[k]
    if mode == "bernoulli":
        if value >= (1 << 59):
            raise RuntimeError("target unreachable from source")
        value = int(value)
    elif not np.isfinite(value):
        raise RuntimeError("target unreachable from source")
    path = None
    if with_path:
        vp = tight_path(graph.indptr, graph.nbr, graph.nbr_edge, wf, distf, src, best, vlo, vhi)
        path = [graph.coords(v) for v in vp]
    return PassageResult(value=value, path=path, target=graph.coords(best))


def path_weight(graph, path, w):
    return float(sum(w[graph.edge_id(p, q)] for p, q in zip(path[:-1], path[1:])))


# ---------------------------------------------------------------------------
# dual side

def dual_network(graph, t, source_levels=None):
    """Closed dual edges of G*(n), with H* sources and L* sinks.

    Corner (x, y) stands for the dual vertex (x + 1/2, y + 1/2). Only primal
    edges with t = 1 contribute a dual edge. Returns
    (n_nodes, du, dv, edge_ids, sources, sinks, corner_of_node).
    """
    ax, ay, bx, by = graph.dual()
    rows = graph.top_height + 2
    def cid(x, y):
        return (x + 1) * rows + (y + 1)
    n_nodes = (graph.n + 2) * rows
    closed = np.nonzero(np.asarray(t) != 0)[0]
    du = cid(ax[closed], ay[closed])
    dv = cid(bx[closed], by[closed])
    top = graph.top_boundary()
    levels = sorted(top) if source_levels is None else [j for j in source_levels if j in top]
    src = np.array([cid(x, y) for j in levels for (x, y) in top[j]], dtype=np.int64)
    snk = np.array([cid(x, y) for (x, y) in graph.bottom_boundary()], dtype=np.int64)
    def corner(node):
        return (int(node // rows) - 1, int(node % rows) - 1)
    return n_nodes, du, dv, closed, src, snk, corner


def dual_separating_count(graph, field_, certificate=False, t=None):
    """Y_n: max number of edge-disjoint closed dual paths from H*(n) to L*(n)."""
    return _dual_count(graph, field_.t if t is None else t, None, certificate, "dual_top_down")


def dual_level_count(graph, field_, j, certificate=False, t=None):
    """Y_{n,j}: as Y_n with sources restricted to H*(n; j)."""
    if j < 0 or j > graph.top_height:
        return CrossingCount(0, "dual_from_level", [] if certificate else None)
    return _dual_count(graph, field_.t if t is None else t, [j], certificate, "dual_from_level")


def _dual_count(graph, t, levels, certificate, kind):
    n_nodes, du, dv, eids, src, snk, corner = dual_network(graph, t, levels)
    value, net = max_edge_disjoint(n_nodes, du, dv, src, snk)
    cert = None
    if certificate:
        paths = decompose_paths(n_nodes, du, dv, net, src, snk)
        cert = [{"corners": [corner(v) for v in nodes], "edges": [int(eids[k]) for k in edges]}
                for nodes, edges in paths]
    return CrossingCount(value, kind, cert)


def check_dual_certificate(graph, t, count, source_levels=None):
    """Independent validation of a dual certificate. Returns a list of problems."""
    problems = []
    if count.certificate is None:
        return ["no certificate"]
    if len(count.certificate) != count.value:
        problems.append("certificate size differs from value")
    top = graph.top_boundary()
    levels = sorted(top) if source_levels is None else source_levels
    allowed_src = {c for j in levels for c in top.get(j, [])}
    allowed_snk = set(graph.bottom_boundary())
    used = set()
    for k, p in enumerate(count.certificate):
        cs, es = p["corners"], p["edges"]
        if len(es) != len(cs) - 1 or len(es) == 0:
            problems.append(f"path {k}: malformed")
            continue
        if tuple(cs[0]) not in allowed_src:
            problems.append(f"path {k}: bad start {cs[0]}")
        if tuple(cs[-1]) not in allowed_snk:
            problems.append(f"path {k}: bad end {cs[-1]}")
        for (c0, c1, e) in zip(cs[:-1], cs[1:], es):
            if e in used:
                problems.append(f"path {k}: edge {e} reused")
            used.add(e)
            if t[e] == 0:
                problems.append(f"path {k}: edge {e} is open")
            # the dual of primal edge e must join c0 and c1
            x, y = graph.coords(graph.eu[e])
            if graph.edir[e] == 0:
                ends = {(x, y - 1), (x, y)}
            else:
                ends = {(x - 1, y), (x, y)}
            if {tuple(c0), tuple(c1)} != ends:
                problems.append(f"path {k}: edge {e} does not join {c0}-{c1}")
    return problems


# ---------------------------------------------------------------------------
# primal crossing counts on rectangles

def rectangle_arrays(config):
    """Vertex ids and open edge list of a PercConfig rectangle."""
    w, h = config.w, config.h
    def vid(x, y):
        return x * (h + 1) + y
    xs, ys = np.nonzero(config.horiz)
    hu, hv = vid(xs, ys), vid(xs + 1, ys)
    xs, ys = np.nonzero(config.vert)
    vu, vv = vid(xs, ys), vid(xs, ys + 1)
    return (w + 1) * (h + 1), np.concatenate([hu, vu]), np.concatenate([hv, vv]), vid


def open_crossing_count(config, orientation="left-right", source=None, sink=None, certificate=False):
    """Max number of edge-disjoint open crossings (Menger, unit max-flow).

    orientation "left-right": from column x=0 to column x=w; "top-down": from
    row y=h to row y=0. source/sink may instead be given as coordinate lists.
    """
    nv, eu, ev, vid = rectangle_arrays(config)
    w, h = config.w, config.h
    if source is None:
        if orientation == "left-right":
            source = [(0, y) for y in range(h + 1)]
            sink = [(w, y) for y in range(h + 1)]
        elif orientation == "top-down":
            source = [(x, h) for x in range(w + 1)]
            sink = [(x, 0) for x in range(w + 1)]
        else:
            raise ValueError("orientation must be 'left-right' or 'top-down'")
    src = np.array([vid(*c) for c in source], dtype=np.int64)
    snk = np.array([vid(*c) for c in sink], dtype=np.int64)
    value, net = max_edge_disjoint(nv, eu, ev, src, snk)
    cert = None
    if certificate:
        cert = [[(int(v // (h + 1)), int(v % (h + 1))) for v in nodes]
                for nodes, _ in decompose_paths(nv, eu, ev, net, src, snk)]
    return CrossingCount(value, "open_" + orientation.replace("-", "_"), cert)


# ---------------------------------------------------------------------------
# block crossings

def top_down_crossing_exists(graph, t, lo, hi):
    """Is there an open (t = 0) path inside columns lo..hi from the top set to x2 = 0?

    The top set of the block is {(x, floor f(x))}: the vertices whose upper
    neighbour is not in the block.
    """
    from .martingale import crossing_cluster
    return crossing_cluster(graph.indptr, graph.nbr, graph.nbr_edge, graph.vy, graph.offset,
                            np.asarray(t, dtype=np.uint8), lo, hi)[0]
