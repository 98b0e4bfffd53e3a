import numpy as np
import pytest

from wedge_fpp import WeightModel
from wedge_fpp.sequences import (BlockSequence, audit_assumptions, build_sequence, find_j0,
                                 fit_increment_bound, split_blocks, split_blocks_even)
from wedge_fpp.wedge import WedgeFunction


def test_split_blocks():
    assert split_blocks(10, 3) == [4, 3, 3]
    assert split_blocks(9, 3) == [3, 3, 3]
    assert split_blocks(7, 7) == [7]
    with pytest.raises(ValueError):
        split_blocks(3, 4)
    for n in range(1, 60):
        for d in range(1, n + 1):
            w = split_blocks(n, d)
            assert sum(w) == n and len(w) == n // d
            assert all(d <= x <= 2 * d - 1 for x in w)


def test_split_blocks_even():
    assert split_blocks_even(10, 3) == [4, 3, 3]
    assert split_blocks_even(10, 10) == [1] * 10
    with pytest.raises(ValueError):
        split_blocks_even(5, 7)


def test_at_xi_doubling_levels():
    f = WedgeFunction.loglog(1.0, 1.0)
    seq = build_sequence(f, 0.7, 1.0, "at_xi", i_max=6)
    assert seq.r.tolist() == [f.level(j) for j in (0, 1, 2, 4, 8, 16, 32)]


def test_at_xi_b_zero_uses_every_level():
    f = WedgeFunction.loglog(1.0, 0.0)
    seq = build_sequence(f, 0.7, 1.0, "at_xi", i_max=12)
    assert seq.r.tolist() == [f.level(j) for j in range(13)]


def _levels_once(seq, f):
    r = set(seq.r.tolist())
    j = 0
    while True:
        lv = f.level(j)
        if lv > seq.r[-1]:
            break
        assert lv in r, j
        j += 1
    assert len(r) == len(seq.r)


def test_critical_sequence():
    f = WedgeFunction.loglog(1.0)
    seq = build_sequence(f, 0.5, None, "critical", i_max=200)
    assert seq.r[0] == 0 and np.all(np.diff(seq.r) > 0)
    _levels_once(seq, f)
    start = seq.audit_index()
    assert start is not None
    for i in range(start, len(seq.r) - 1):
        lo, hi = seq.block(i)
        h = f.floor_at(lo)
        assert h <= hi - lo <= 2 * h - 1
        assert f.floor_at(lo) == f.floor_at(hi - 1)


def test_sub_xi_sequence():
    f = WedgeFunction.loglog(0.5)
    xi = 1.2
    seq = build_sequence(f, 0.7, xi, "sub_xi", i_max=150)
    assert np.all(np.diff(seq.r) > 0)
    _levels_once(seq, f)
    j0, _ = find_j0(f, "sub_xi", xi)
    assert j0 >= 1
    start = seq.audit_index()
    for i in range(start, len(seq.r) - 1):
        assert seq.width_ok(i) and seq.level_constant(i)


def test_regime_mismatch():
    f = WedgeFunction.loglog(2.0)
    with pytest.raises(ValueError):
        build_sequence(f, 0.7, 1.0, "sub_xi")
    with pytest.raises(ValueError):
        build_sequence(f, 0.6, None, "critical")
    with pytest.raises(ValueError):
        build_sequence(WedgeFunction.loglog(1.0, 2.0), 0.7, 1.0, "at_xi")


def _seq(r):
    return BlockSequence(np.array(r), "critical", WedgeFunction.loglog(1.0), 0.5, None, 1, [])


def test_iota_examples():
    assert _seq(range(40)).iota(5) == 3
    assert _seq(range(40)).iota(0) == 0
    assert _seq([0, 3, 7, 12, 20, 30]).iota(8) == 2
    with pytest.raises(ValueError):
        _seq([0, 3, 7]).iota(100)


def test_iota_properties():
    seq = build_sequence(WedgeFunction.loglog(1.0), 0.5, None, "critical", i_max=120)
    vals = [seq.iota(n) for n in range(int(seq.r[-1]) + 1)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    for i in range(len(seq.r[::2])):
        assert seq.iota(int(seq.r[2 * i])) == i
        if i >= 1:
            n = int(seq.r[2 * i])
            assert seq.r[2 * i - 2] < n <= seq.r[2 * i]


def test_audit_all_open():
    seq = build_sequence(WedgeFunction.loglog(1.0), 0.5, None, "critical", i_max=40)
    audit = audit_assumptions(seq, WeightModel(1.0), range(2, 8), 20)
    assert all(a["estimate"] == 1.0 for a in audit.a1)
    assert all(v == 0.0 for v in audit.a2)
    assert all(v == 0.0 for v in audit.a3[1])


def test_audit_critical_small():
    seq = build_sequence(WedgeFunction.loglog(1.0), 0.5, None, "critical", i_max=60)
    start = seq.audit_index()
    audit = audit_assumptions(seq, WeightModel(0.5), range(start, start + 6), 400, seed=3)
    for a in audit.a1:
        assert a["estimate"] >= 0.25 - 3 * (a["ci_high"] - a["ci_low"]) / (2 * 1.96)
    fit = fit_increment_bound(seq, audit, 0.5)
    assert fit["C"] > 0
    assert all(v > 0 for v in audit.a3[1])
    assert all(v2 <= v1 for v1, v2 in zip(audit.a3[1], audit.a3[2]))


def test_audit_at_xi_b0():
    f = WedgeFunction.loglog(1.2)
    seq = build_sequence(f, 0.7, 1.2, "at_xi", i_max=20)
    audit = audit_assumptions(seq, WeightModel(0.7), range(4, 9), 400, seed=4, vertex_cap=200_000)
    for a in audit.a1:
        assert a["estimate"] >= 0.5 - 3 * (a["ci_high"] - a["ci_low"]) / (2 * 1.96)
