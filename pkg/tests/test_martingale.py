import numpy as np
import pytest

from wedge_fpp import WeightModel, build_graph, sample_weight_field, top_down_crossing_exists
from wedge_fpp.martingale import (OUTER_TAG, BlockClock, CapExceeded, decorrelation, leftmost_crossing,
                                  leftmost_crossing_config, m_tail, martingale_mean_check,
                                  required_length, run_martingale, tail_check, telescoping_check)
from wedge_fpp.oracles import (block_shapes, brute_leftmost, cap_areas, config_arrays,
                               exhaustive_mismatches, region_edges)
from wedge_fpp.rng import derive_stream, stream_base
from wedge_fpp.sequences import build_sequence
from wedge_fpp.wedge import WedgeFunction


@pytest.fixture(scope="module")
def seq():
    return build_sequence(WedgeFunction.loglog(1.0), 0.5, None, "critical", i_max=required_length(12))


def test_all_open_clock(seq):
    clock = BlockClock(seq, WeightModel(1.0))
    assert [clock.m(i, 123) for i in range(10)] == list(range(10))


def test_all_closed_hits_cap(seq):
    clock = BlockClock(seq, WeightModel(0.0), cap=5)
    with pytest.raises(CapExceeded):
        clock.m(2, 1)


def test_m_against_full_field(seq):
    model = WeightModel(0.5)
    clock = BlockClock(seq, model)
    i, found = 3, None
    for r in range(2000):
        if clock.m(i, stream_base(7, derive_stream(OUTER_TAG, r))) == i + 4:
            found = r
            break
    assert found is not None
    g = build_graph(seq.f, int(seq.r[2 * (i + 4) + 1]))
    fld = sample_weight_field(model, g, 7, derive_stream(OUTER_TAG, found))
    got = [top_down_crossing_exists(g, fld.t, int(seq.r[2 * j]), int(seq.r[2 * j + 1]))
           for j in range(i, i + 5)]
    assert got == [False] * 4 + [True]


def test_m_nested(seq):
    clock = BlockClock(seq, WeightModel(0.5))
    for s in range(50):
        ms = [clock.m(i, s) for i in range(10)]
        assert all(m >= i for i, m in enumerate(ms))
        assert all(b >= a for a, b in zip(ms, ms[1:]))


def test_leftmost_examples():
    hts = [2, 2, 2]
    # all open 3 x 3 block: straight down the first column
    h, v = config_arrays(hts, region_edges(hts), [1] * len(region_edges(hts)))
    assert leftmost_crossing_config(hts, h, v) == [(0, 2), (0, 1), (0, 0)]
    # only the last column open
    slots = region_edges(hts)
    bits = [1 if (kind == "V" and k == 2) else 0 for kind, k, _ in slots]
    h, v = config_arrays(hts, slots, bits)
    assert leftmost_crossing_config(hts, h, v) == [(2, 2), (2, 1), (2, 0)]
    with pytest.raises(ValueError):
        leftmost_crossing_config(hts, *config_arrays(hts, slots, [0] * len(slots)))


def test_leftmost_staircase():
    hts = [2, 2, 2]
    keep = {("V", 0, 1), ("H", 0, 1), ("V", 1, 0)}
    slots = region_edges(hts)
    h, v = config_arrays(hts, slots, [s in keep for s in slots])
    assert leftmost_crossing_config(hts, h, v, lo=10) == [(10, 2), (10, 1), (11, 1), (11, 0)]


def _cap(sh):
    # top of the block half a unit above each column: no ties in the area order
    f = WedgeFunction("custom", values=(0,) + tuple(h + 0.5 for h in sh))
    return cap_areas(f, 1, len(sh), heights=sh)


def test_leftmost_exhaustive_small_blocks():
    total = bad = 0
    for sh in block_shapes(10):
        c, b = exhaustive_mismatches(np.array(sh, dtype=np.int64), _cap(sh))
        total += c
        bad += b
    assert total > 10_000 and bad == 0


def test_leftmost_random_5x4():
    sh = (3, 3, 3, 3, 3)
    slots = region_edges(sh)
    cap = _cap(sh)
    rng = np.random.default_rng(11)
    for _ in range(2000):
        h, v = config_arrays(sh, slots, rng.random(len(slots)) < 0.5)
        want, _ = brute_leftmost(sh, h, v, cap)
        if want is None:
            with pytest.raises(ValueError):
                leftmost_crossing_config(sh, h, v)
        else:
            assert leftmost_crossing_config(sh, h, v) == want


def test_leftmost_on_wedge():
    f = WedgeFunction.loglog(2.0)
    path = leftmost_crossing(f, 20, 30, stream_base(1, 0), 1.0)
    assert path[0] == (20, f.floor_at(20)) and path[-1][1] == 0


def test_all_open_increments_vanish(seq):
    recs = run_martingale(BlockClock(seq, WeightModel(1.0)), 4, 5, K=16)
    assert all(abs(d) < 1e-12 for r in recs for d in r["delta"])
    assert all(r["T"] == 0 for r in recs)


def test_telescoping_small(seq):
    clock = BlockClock(seq, WeightModel(0.5))
    recs = run_martingale(clock, 4, 40, K=64, seed=2)
    tel = telescoping_check(recs)
    assert tel["pass"], tel
    assert sum(row["pass"] for row in martingale_mean_check(recs, 4)) >= 4
    assert len(decorrelation(recs)["rho"]) <= 3


def test_m_tail_geometric(seq):
    clock = BlockClock(seq, WeightModel(0.5))
    rows = m_tail(clock, 6, 4, 500, seed=3)
    assert rows[0]["estimate"] == 1.0
    est = [r["estimate"] for r in rows]
    assert all(b <= a for a, b in zip(est, est[1:]))
    assert all(r["pass"] for r in tail_check(rows, 0.25))


def test_run_independent_of_workers(seq):
    clock = BlockClock(seq, WeightModel(0.5))
    a = run_martingale(clock, 3, 6, K=16, seed=4, workers=1)
    b = run_martingale(clock, 3, 6, K=16, seed=4, workers=3)
    assert a == b
