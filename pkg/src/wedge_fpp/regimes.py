"""Growth classes of E T(0, P(n)) on the wedge a log(1+u) + b log(1+log(1+u)).

xi below always means the correlation length at 1 - p, i.e. of the open
(t = 0) edges when p > 1/2.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .stats import linfit

SUBCRITICAL = "SubcriticalLinear"
CRITICAL = "CriticalLog"
POWER = "PowerOverLog"
LOGPOWER = "LogPower"
LOGLOG = "LogLog"
BOUNDED = "Bounded"

NEAR_CRITICAL_REL = 0.1

_RATE_TEXT = {
    SUBCRITICAL: "n",
    CRITICAL: "n / (a log n)",
    POWER: "n^(1 - a/xi) / (log n)^(b/xi)",
    LOGPOWER: "(log n)^(1 - b/xi)",
    LOGLOG: "log log n",
    BOUNDED: "1",
}


@dataclass
class RegimeClassification:
    regime: str
    a: float
    b: float
    p: float
    xi: float = None
    xi_ci: float = 0.0
    near_critical: bool = False
    ambiguous: bool = False
    notes: list = field(default_factory=list)

    @property
    def rate_text(self):
        return _RATE_TEXT[self.regime]

    @property
    def prefactor_band(self):
        if self.regime == POWER:
            return ("c / (xi - a)", "C / (xi - a)")
        if self.regime == BOUNDED:
            return ("0", "C")
        return ("c", "C")

    def rate(self, n):
        return rate(self, n)

    def to_dict(self):
        return {"regime": self.regime, "a": self.a, "b": self.b, "p": self.p, "xi": self.xi,
                "xi_ci": self.xi_ci, "rate": self.rate_text, "near_critical": self.near_critical,
                "ambiguous": self.ambiguous, "prefactor_band": list(self.prefactor_band),
                "notes": list(self.notes)}


def classify(a, b, p, xi=None, xi_ci=0.0, tol=1e-12):
    """Regime of (a, b, p) given an estimate xi of xi(1 - p) with CI half-width xi_ci.

    a = xi is declared only when |a - xi| < xi_ci (or within float tolerance);
    otherwise the point estimate decides and the call is flagged if close.
    """
    if not a > 0 or b < 0 or not 0 < p < 1:
        raise ValueError("need a > 0, b >= 0 and 0 < p < 1")
    if p < 0.5 - tol:
        return RegimeClassification(SUBCRITICAL, a, b, p, xi, xi_ci)
    if abs(p - 0.5) <= tol:
        return RegimeClassification(CRITICAL, a, b, p, xi, xi_ci)
    if xi is None or not xi > 0:
        raise ValueError("p > 1/2 needs a positive estimate of xi(1 - p)")
    notes = []
    near = abs(a - xi) / xi < NEAR_CRITICAL_REL
    if near:
        notes.append("near-critical: |a - xi|/xi < 0.1, slow asymptotics expected")
    equal = abs(a - xi) < max(xi_ci, tol)
    if equal:
        if xi_ci > 0 and abs(a - xi) > tol:
            notes.append("a = xi declared within the CI of xi")
        if b < a - tol:
            reg = LOGPOWER
        elif abs(b - a) <= tol:
            reg = LOGLOG
        else:
            reg = BOUNDED
    else:
        reg = POWER if a < xi else BOUNDED
    return RegimeClassification(reg, a, b, p, xi, xi_ci, near_critical=near,
                                ambiguous=equal and xi_ci > 0, notes=notes)


def rate(regime, n):
    """Predicted growth of E T(0, P(n)); n >= 3 so that log log n > 0."""
    arr = np.asarray(n, dtype=float)
    if np.any(arr < 3):
        raise ValueError("rate is defined for n >= 3")
    a, b = regime.a, regime.b
    xi = regime.xi if regime.xi is not None else a
    ln = np.log(arr)
    kind = regime.regime
    if kind == SUBCRITICAL:
        out = arr
    elif kind == CRITICAL:
        out = arr / (a * ln)
    elif kind == POWER:
        out = arr ** (1 - a / xi) / ln ** (b / xi)
    elif kind == LOGPOWER:
        out = ln ** (1 - b / xi)
    elif kind == LOGLOG:
        out = np.log(ln)
    else:
        out = np.ones_like(arr)
    return float(out) if np.ndim(out) == 0 else out


def loglog_slope(ns, means):
    c0, c1, se = linfit(np.log(ns), np.log(means))
    return c1, se


def fit_against_rate(ns, means, regime, flat_tol=0.05, drift_rms=0.02):
    """Compare a measured curve E T(n) with the regime's rate.

    Verdicts: "consistent" when E T / rate has no power-law trend,
    "prefactor_drift" when the trend is absorbed by c0 + c1 / log n,
    "mismatch" otherwise.
    """
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if len(ns) < 6 or ns.max() / ns.min() < 8:
        raise ValueError("need at least 6 points spanning a factor 8 in n")
    ratio = means / rate(regime, ns)
    if np.any(ratio <= 0):
        raise ValueError("curve must be positive")
    _, trend, trend_se = linfit(np.log(ns), np.log(ratio))
    ln = np.log(ns)
    X = np.column_stack([np.ones_like(ln), 1.0 / ln])
    coef, *_ = np.linalg.lstsq(X, ratio, rcond=None)
    resid = ratio - X @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)) / np.mean(ratio))
    if abs(trend) < flat_tol:
        verdict = "consistent"
    elif coef[0] > 0 and rms < drift_rms:
        verdict = "prefactor_drift"
    else:
        verdict = "mismatch"
    slope, slope_se = loglog_slope(ns, means)
    out = {"regime": regime.regime, "ratio": ratio.tolist(), "trend_slope": float(trend),
           "trend_se": float(trend_se), "band": [float(ratio.min() / ratio.mean()), float(ratio.max() / ratio.mean())],
           "band_ratio": float(ratio.max() / ratio.min()), "loglog_slope": float(slope),
           "loglog_se": float(slope_se), "drift_fit": [float(coef[0]), float(coef[1])],
           "drift_rms": rms, "verdict": verdict,
           "trend_direction": "decaying" if trend < 0 else "growing"}
    if regime.regime == CRITICAL:
        s, _ = loglog_slope(ns, means * np.log(ns))
        out["loglog_slope_log_removed"] = float(s)
    if regime.regime == POWER:
        out["expected_slope"] = 1 - regime.a / regime.xi
    return out
