import math

import numpy as np
import pytest

from wedge_fpp.regimes import (BOUNDED, CRITICAL, LOGLOG, LOGPOWER, POWER, SUBCRITICAL, classify,
                               fit_against_rate, loglog_slope, rate)


def test_classify_examples():
    assert classify(1, 0, 0.3).regime == SUBCRITICAL
    assert classify(1, 0, 0.5).regime == CRITICAL
    assert classify(0.5, 0, 0.7, xi=1.0).regime == POWER
    assert classify(1.0, 0.5, 0.7, xi=1.0).regime == LOGPOWER
    assert classify(1.0, 1.0, 0.7, xi=1.0).regime == LOGLOG
    assert classify(1.0, 2.0, 0.7, xi=1.0).regime == BOUNDED
    assert classify(2.0, 0, 0.7, xi=1.0).regime == BOUNDED


def test_classify_needs_xi():
    with pytest.raises(ValueError):
        classify(1, 0, 0.7)
    with pytest.raises(ValueError):
        classify(0, 0, 0.3)


def test_equality_within_ci():
    c = classify(1.02, 0.0, 0.7, xi=1.0, xi_ci=0.05)
    assert c.regime == LOGPOWER and c.ambiguous and c.near_critical
    c = classify(1.08, 0.0, 0.7, xi=1.0, xi_ci=0.05)
    assert c.regime == BOUNDED and c.near_critical and not c.ambiguous
    assert not classify(0.5, 0.0, 0.7, xi=1.0).near_critical


def test_rate_values():
    c = classify(0.5, 1.0, 0.7, xi=1.0)
    n = 100.0
    assert c.rate(n) == pytest.approx(n ** 0.5 / math.log(n))
    assert classify(1, 0, 0.5).rate(n) == pytest.approx(n / math.log(n))
    assert classify(1, 1, 0.7, xi=1.0).rate(n) == pytest.approx(math.log(math.log(n)))
    assert classify(3, 0, 0.7, xi=1.0).rate(n) == 1.0
    with pytest.raises(ValueError):
        rate(c, 2)


def test_json_roundtrip_fields():
    d = classify(2.0, 0.0, 0.7, xi=1.0).to_dict()
    assert d["regime"] == BOUNDED and "rate" in d and d["prefactor_band"]


def test_loglog_slope_exact():
    ns = np.array([8, 16, 32, 64, 128, 256.0])
    s, se = loglog_slope(ns, 3 * ns ** 0.7)
    assert s == pytest.approx(0.7) and se < 1e-10


def test_fit_verdicts():
    ns = np.array([16, 32, 64, 128, 256, 512, 1024.0])
    crit = classify(1, 0, 0.5)
    exact = fit_against_rate(ns, 2.0 * ns / np.log(ns), crit)
    assert exact["verdict"] == "consistent"
    assert exact["loglog_slope_log_removed"] == pytest.approx(1.0, abs=1e-9)
    drift = fit_against_rate(ns, (2.0 + 3.0 / np.log(ns)) * ns / np.log(ns), crit)
    assert drift["verdict"] == "prefactor_drift"
    wrong = fit_against_rate(ns, ns ** 0.5, crit)
    assert wrong["verdict"] == "mismatch"
    with pytest.raises(ValueError):
        fit_against_rate(ns[:4], ns[:4], crit)


def test_power_expected_slope():
    ns = np.array([16, 32, 64, 128, 256, 512.0])
    c = classify(0.5, 0.0, 0.7, xi=1.0)
    out = fit_against_rate(ns, 4 * ns ** 0.5, c)
    assert out["expected_slope"] == 0.5 and out["verdict"] == "consistent"
