import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_flow

from wedge_fpp import (WeightModel, build_graph, dual_level_count, dual_separating_count,
                       open_crossing_count, passage_time, sample_rectangle_config, sample_weight_field,
                       top_down_crossing_exists)
from wedge_fpp.fpp import check_dual_certificate, dual_network, path_weight
from wedge_fpp.oracles import max_disjoint_paths_oracle, passage_time_enumeration
from wedge_fpp.rng import PercConfig
from wedge_fpp.wedge import WedgeFunction, WedgeGraph


def field_with(graph, t, model=None):
    fld = sample_weight_field(model or WeightModel(0.5), graph, 0)
    fld.t = np.asarray(t, dtype=np.uint8)
    return fld


def test_single_edge():
    g = build_graph(WedgeFunction.loglog(1), 1)
    assert passage_time(g, field_with(g, [1])).value == 1


def test_all_open_zero():
    g = build_graph(WedgeFunction.loglog(1), 30)
    assert passage_time(g, field_with(g, np.zeros(g.n_edges))).value == 0
    assert dual_separating_count(g, field_with(g, np.zeros(g.n_edges))).value == 0


def test_block_against_enumeration():
    # 3 x 2 block: columns 0..2, heights 0, 1, 1
    f = WedgeFunction("custom", values=(0, 1, 1))
    g = WedgeGraph(f, 2)
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = rng.integers(0, 4, g.n_edges).astype(float)
        res = passage_time(g, None, mode="general", weights=w)
        want = passage_time_enumeration(g, w, g.vid(0, 0), g.column(2))
        assert res.value == pytest.approx(want, abs=1e-12)
        assert path_weight(g, res.path, w) == pytest.approx(want, abs=1e-12)


def test_all_closed_equals_cut():
    for a in (0.5, 1.0, 2.0):
        g = build_graph(WedgeFunction.loglog(a), 25)
        t = np.ones(g.n_edges, dtype=np.uint8)
        tb = passage_time(g, field_with(g, t)).value
        assert dual_separating_count(g, None, t=t).value == tb


def test_level_counts():
    g = build_graph(WedgeFunction.loglog(1), 10)
    t = np.ones(g.n_edges, dtype=np.uint8)
    assert dual_level_count(g, None, 3, t=t).value == 0
    y1 = dual_level_count(g, None, 1, t=t, certificate=True)
    assert check_dual_certificate(g, t, y1, source_levels=[1]) == []
    rng = np.random.default_rng(2)
    for _ in range(100):
        t = (rng.random(g.n_edges) < 0.5).astype(np.uint8)
        tot = sum(dual_level_count(g, None, j, t=t).value for j in range(g.top_height + 1))
        assert tot >= dual_separating_count(g, None, t=t).value


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_duality_with_certificates(p):
    for a, b in ((0.5, 0.0), (1.0, 1.0), (2.0, 0.0)):
        for n in (5, 17, 40):
            g = build_graph(WedgeFunction.loglog(a, b), n)
            for s in range(30):
                fld = sample_weight_field(WeightModel(p), g, 13, s)
                y = dual_separating_count(g, fld, certificate=True)
                assert y.value == passage_time(g, fld).value
                assert check_dual_certificate(g, fld.t, y) == []


def test_flow_equals_independent_max_flow():
    g = build_graph(WedgeFunction.loglog(2.0), 300)
    assert g.n_edges <= 10_000
    for s in range(5):
        fld = sample_weight_field(WeightModel(0.5), g, 21, s)
        n_nodes, du, dv, _, src, snk, _ = dual_network(g, fld.t)
        S, T = n_nodes, n_nodes + 1
        big = len(du) + 1
        rows = np.concatenate([du, dv, np.full(len(src), S), snk])
        cols = np.concatenate([dv, du, src, np.full(len(snk), T)])
        caps = np.concatenate([np.ones(2 * len(du)), np.full(len(src) + len(snk), big)]).astype(np.int32)
        m = sp.coo_matrix((caps, (rows, cols)), shape=(n_nodes + 2, n_nodes + 2)).tocsr()
        m.sum_duplicates()
        want = maximum_flow(m, S, T).flow_value
        assert dual_separating_count(g, fld).value == want


def test_monotone_in_n_and_weights():
    f = WedgeFunction.loglog(1.0)
    vals = []
    for n in range(1, 80):
        g = build_graph(f, n)
        vals.append(passage_time(g, sample_weight_field(WeightModel(0.5), g, 3, 1)).value)
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    g = build_graph(f, 60)
    fld = sample_weight_field(WeightModel(0.5, law={"kind": "shifted_exp"}), g, 3, 2)
    w = fld.tau
    base = passage_time(g, fld, mode="general", weights=w).value
    for e in np.nonzero(w)[0][:20]:
        w2 = w.copy()
        w2[e] = 0.0
        assert passage_time(g, fld, mode="general", weights=w2).value <= base + 1e-12


def test_sandwich():
    g = build_graph(WedgeFunction.loglog(1.0, 1.0), 120)
    for s in range(20):
        const = sample_weight_field(WeightModel(0.5, delta=1.5), g, 8, s)
        tb = passage_time(g, const)
        assert passage_time(g, const, mode="general").value == pytest.approx(1.5 * tb.value)
        gen = sample_weight_field(WeightModel(0.5, delta=1.5, law={"kind": "shifted_exp"}), g, 8, s)
        t = passage_time(g, gen, mode="general").value
        upper = path_weight(g, tb.path, gen.tau)
        assert 1.5 * tb.value - 1e-9 <= t <= upper + 1e-9


def test_rectangle_crossing_counts():
    n, h = 6, 4
    full = PercConfig(n, h, 1.0, np.ones((n, h + 1), bool), np.ones((n + 1, h), bool))
    assert open_crossing_count(full).value == h + 1
    empty = PercConfig(n, h, 0.0, np.zeros((n, h + 1), bool), np.zeros((n + 1, h), bool))
    assert open_crossing_count(empty).value == 0


def test_rectangle_counts_match_oracle():
    for s in range(40):
        cfg = sample_rectangle_config(6, 6, 0.5, 31, s)
        edges = [((x, y), (x + 1, y)) for x, y in zip(*np.nonzero(cfg.horiz))]
        edges += [((x, y), (x, y + 1)) for x, y in zip(*np.nonzero(cfg.vert))]
        src = [(0, y) for y in range(7)]
        snk = [(6, y) for y in range(7)]
        cc = open_crossing_count(cfg, certificate=True)
        assert cc.value == max_disjoint_paths_oracle(edges, src, snk)
        used = set()
        for path in cc.certificate:
            assert path[0][0] == 0 and path[-1][0] == 6
            for p, q in zip(path[:-1], path[1:]):
                e = (min(p, q), max(p, q))
                assert e not in used
                used.add(e)
                if p[1] == q[1]:
                    assert cfg.horiz[min(p[0], q[0]), p[1]]
                else:
                    assert cfg.vert[p[0], min(p[1], q[1])]


def test_point_set_geometry():
    # paths from {0} x [0, h] to the line x = n, here inside the rectangle
    cfg = sample_rectangle_config(8, 5, 1.0, 0)
    src = [(0, y) for y in range(3)]
    snk = [(8, y) for y in range(6)]
    # all open: the cut around the source set is 3 horizontal edges plus (0,2)-(0,3)
    assert open_crossing_count(cfg, source=src, sink=snk).value == 4


def test_top_down_crossing():
    f = WedgeFunction.loglog(2.0)
    g = build_graph(f, 20)
    assert top_down_crossing_exists(g, np.zeros(g.n_edges, np.uint8), 5, 9)
    assert not top_down_crossing_exists(g, np.ones(g.n_edges, np.uint8), 5, 9)


def test_top_down_staircase():
    # 5 x 5 block: heights 4 in every column; open only a staircase from (1, 4) down to (5, 0)
    f = WedgeFunction("custom", values=(0,) + (4.5,) * 5)
    g = WedgeGraph(f, 5)
    t = np.ones(g.n_edges, dtype=np.uint8)
    stair = []
    x, y = 1, 4
    while y > 0:
        stair.append(((x, y), (x, y - 1)))
        stair.append(((x, y - 1), (x + 1, y - 1)))
        x, y = x + 1, y - 1
    for p, q in stair:
        t[g.edge_id(p, q)] = 0
    assert top_down_crossing_exists(g, t, 1, 5)
    t[g.edge_id(*stair[3])] = 1
    assert not top_down_crossing_exists(g, t, 1, 5)
