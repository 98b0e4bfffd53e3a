"""Graph kernels: 0-1 BFS, heap Dijkstra, tie-broken path recovery, Dinic max-flow.

All kernels work on CSR arrays (indptr, nbr, nbr_edge) and an optional vertex
window [vlo, vhi): vertices outside it are ignored, which is how column blocks
of a wedge are handled without copying the graph.
"""
import heapq

import numpy as np

from ._jit import njit

INF_INT = np.int64(1 << 60)


@njit
def bfs01(indptr, nbr, nbr_edge, w, sources, vlo, vhi):
    """Multi-source shortest distances for 0/1 edge weights (w[e] in {0, 1})."""
    nv = indptr.shape[0] - 1
    dist = np.full(nv, INF_INT, dtype=np.int64)
    cap = nbr.shape[0] + sources.shape[0] + 1
    cur = np.empty(cap, dtype=np.int64)
    nxt = np.empty(cap, dtype=np.int64)
    nc = 0
    for s in sources:
        if dist[s] != 0:
            dist[s] = 0
            cur[nc] = s
            nc += 1
    d = 0
    while nc > 0:
        nn = 0
        k = 0
        while k < nc:
            u = cur[k]
            k += 1
            if dist[u] != d:
                continue
            for a in range(indptr[u], indptr[u + 1]):
                v = nbr[a]
                if v < vlo or v >= vhi:
                    continue
                nd = d + w[nbr_edge[a]]
                if nd < dist[v]:
                    dist[v] = nd
                    if nd == d:
                        cur[nc] = v
                        nc += 1
                    else:
                        nxt[nn] = v
                        nn += 1
        tmp = cur
        cur = nxt
        nxt = tmp
        nc = nn
        d += 1
    return dist


@njit
def dijkstra(indptr, nbr, nbr_edge, w, sources, vlo, vhi):
    """Multi-source shortest distances for nonnegative float weights."""
    nv = indptr.shape[0] - 1
    dist = np.full(nv, np.inf)
    done = np.zeros(nv, dtype=np.uint8)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for s in sources:
        if dist[s] != 0.0:
            dist[s] = 0.0
            heapq.heappush(heap, (0.0, np.int64(s)))
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = 1
        for a in range(indptr[u], indptr[u + 1]):
            v = nbr[a]
            if v < vlo or v >= vhi:
                continue
            nd = d + w[nbr_edge[a]]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, np.int64(v)))
    return dist


@njit
def tight_path(indptr, nbr, nbr_edge, w, dist, sources, target, vlo, vhi):
    """Deterministic optimal path from the source set to `target`.

    Among arcs with dist[u] + w == dist[v] ("tight" arcs) a BFS hop count is
    computed; walking back from the target we always take the smallest-index
    predecessor one hop closer. Returns the vertex list source..target.
    """
    nv = indptr.shape[0] - 1
    hops = np.full(nv, -1, dtype=np.int64)
    q = np.empty(nv, dtype=np.int64)
    qh = 0
    qt = 0
    for s in sources:
        if hops[s] < 0:
            hops[s] = 0
            q[qt] = s
            qt += 1
    while qh < qt:
        u = q[qh]
        qh += 1
        for a in range(indptr[u], indptr[u + 1]):
            v = nbr[a]
            if v < vlo or v >= vhi:
                continue
            if hops[v] < 0 and dist[u] + w[nbr_edge[a]] == dist[v]:
                hops[v] = hops[u] + 1
                q[qt] = v
                qt += 1
    L = hops[target]
    path = np.empty(L + 1, dtype=np.int64)
    path[L] = target
    v = target
    for k in range(L, 0, -1):
        best = -1
        for a in range(indptr[v], indptr[v + 1]):
            u = nbr[a]
            if u < vlo or u >= vhi:
                continue
            if hops[u] == k - 1 and dist[u] + w[nbr_edge[a]] == dist[v]:
                if best < 0 or u < best:
                    best = u
        path[k - 1] = best
        v = best
    return path


@njit
def dinic(n_nodes, tail, head, cap, s, t):
    """Max-flow on arcs stored in reverse pairs (2k, 2k+1). Returns (value, residual)."""
    m = tail.shape[0]
    start = np.zeros(n_nodes + 1, dtype=np.int64)
    for a in range(m):
        start[tail[a] + 1] += 1
    for v in range(n_nodes):
        start[v + 1] += start[v]
    fill = start[:-1].copy()
    adj = np.empty(m, dtype=np.int64)
    for a in range(m):
        adj[fill[tail[a]]] = a
        fill[tail[a]] += 1
    res = cap.copy()
    level = np.empty(n_nodes, dtype=np.int64)
    it = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    stack_v = np.empty(n_nodes + 1, dtype=np.int64)
    stack_a = np.empty(n_nodes + 1, dtype=np.int64)
    flow = 0
    while True:
        level[:] = -1
        level[s] = 0
        qh = 0
        qt = 1
        queue[0] = s
        while qh < qt:
            u = queue[qh]
            qh += 1
            for k in range(start[u], start[u + 1]):
                a = adj[k]
                v = head[a]
                if res[a] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        for v in range(n_nodes):
            it[v] = start[v]
        depth = 0
        stack_v[0] = s
        while True:
            v = stack_v[depth]
            if v == t:
                b = res[stack_a[0]]
                for k in range(1, depth):
                    if res[stack_a[k]] < b:
                        b = res[stack_a[k]]
                for k in range(depth):
                    res[stack_a[k]] -= b
                    res[stack_a[k] ^ 1] += b
                flow += b
                depth = 0
                continue
            advanced = False
            while it[v] < start[v + 1]:
                a = adj[it[v]]
                u = head[a]
                if res[a] > 0 and level[u] == level[v] + 1:
                    stack_a[depth] = a
                    depth += 1
                    stack_v[depth] = u
                    advanced = True
                    break
                it[v] += 1
            if not advanced:
                if depth == 0:
                    break
                level[v] = -1
                depth -= 1
                it[stack_v[depth]] += 1
    return flow, res


def undirected_flow_network(n_nodes, eu, ev, sources, sinks, big=None):
    """Arc arrays for unit undirected edges plus super source/sink.

    Each undirected edge {u, v} becomes the arc pair u->v, v->u with capacity 1
    each, the two arcs being each other's reverse. Source/sink attachments get
    capacity `big`. Node n_nodes is the super source, n_nodes+1 the sink.
    """
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    sources = np.asarray(sources, dtype=np.int64)
    sinks = np.asarray(sinks, dtype=np.int64)
    S, T = n_nodes, n_nodes + 1
    if big is None:
        big = len(eu) + 1
    me = len(eu)
    ns, nt = len(sources), len(sinks)
    tail = np.empty(2 * (me + ns + nt), dtype=np.int64)
    head = np.empty_like(tail)
    cap = np.empty_like(tail)
    tail[0:2 * me:2] = eu
    head[0:2 * me:2] = ev
    tail[1:2 * me:2] = ev
    head[1:2 * me:2] = eu
    cap[:2 * me] = 1
    o = 2 * me
    tail[o:o + 2 * ns:2] = S
    head[o:o + 2 * ns:2] = sources
    tail[o + 1:o + 2 * ns:2] = sources
    head[o + 1:o + 2 * ns:2] = S
    cap[o:o + 2 * ns:2] = big
    cap[o + 1:o + 2 * ns:2] = 0
    o += 2 * ns
    tail[o:o + 2 * nt:2] = sinks
    head[o:o + 2 * nt:2] = T
    tail[o + 1:o + 2 * nt:2] = T
    head[o + 1:o + 2 * nt:2] = sinks
    cap[o:o + 2 * nt:2] = big
    cap[o + 1:o + 2 * nt:2] = 0
    return n_nodes + 2, tail, head, cap, S, T


def max_edge_disjoint(n_nodes, eu, ev, sources, sinks):
    """Maximum number of edge-disjoint paths from any source to any sink.

    Returns (value, net) where net[k] in {-1, 0, 1} is the net flow on edge k
    in the eu->ev direction.
    """
    me = len(eu)
    if len(sources) == 0 or len(sinks) == 0:
        return 0, np.zeros(me, dtype=np.int64)
    nn, tail, head, cap, S, T = undirected_flow_network(n_nodes, eu, ev, sources, sinks)
    value, res = dinic(nn, tail, head, cap, S, T)
    net = 1 - res[0:2 * me:2]
    return int(value), net


def decompose_paths(n_nodes, eu, ev, net, sources, sinks):
    """Split a unit edge flow into source->sink (nodes, edges) paths, cycles dropped."""
    out_arcs = {}
    balance = {}
    for k in np.nonzero(net)[0]:
        if net[k] > 0:
            u, v = int(eu[k]), int(ev[k])
        else:
            u, v = int(ev[k]), int(eu[k])
        out_arcs.setdefault(u, []).append((v, int(k)))
        balance[u] = balance.get(u, 0) + 1
        balance[v] = balance.get(v, 0) - 1
    sink_set = set(int(s) for s in sinks)
    paths = []
    for s in sorted(set(int(s) for s in sources)):
        while balance.get(s, 0) > 0:
            nodes, edges, pos = [s], [], {s: 0}
            v = s
            while not (v in sink_set and balance.get(v, 0) < 0 and edges):
                w, k = out_arcs[v].pop()
                if w in pos:  # closed a cycle: cut it out
                    cut = pos[w]
                    for x in nodes[cut + 1:]:
                        del pos[x]
                    nodes = nodes[:cut + 1]
                    edges = edges[:cut]
                else:
                    nodes.append(w)
                    edges.append(k)
                    pos[w] = len(nodes) - 1
                v = w
            balance[s] -= 1
            balance[v] += 1
            paths.append((nodes, edges))
    return paths


def shortest_path_python(adj, w, sources, target_set):
    """Plain heapq Dijkstra on dict adjacency; used as an oracle in tests."""
    dist = {s: 0.0 for s in sources}
    heap = [(0.0, s) for s in sources]
    heapq.heapify(heap)
    seen = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in seen:
            continue
        seen.add(u)
        if u in target_set:
            return d
        for v, e in adj.get(u, ()):
            nd = d + w[e]
            if nd < dist.get(v, np.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return np.inf
