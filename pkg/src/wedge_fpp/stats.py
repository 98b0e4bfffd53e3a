"""Small statistics helpers shared by the estimators."""
import math

import numpy as np
from statsmodels.stats.diagnostic import lilliefors

Z95 = 1.959963984540054


def wilson(k, n, z=Z95):
    """Wilson score interval for k successes out of n."""
    if n <= 0:
        return (0.0, 1.0)
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def prop_summary(k, n):
    lo, hi = wilson(k, n)
    est = k / n if n else float("nan")
    return {"estimate": est, "ci_low": lo, "ci_high": hi, "samples": int(n),
            "half_width": (hi - lo) / 2, "rare": bool(k < 10)}


def describe(x):
    """mean, unbiased variance, skew and 95% normal CI of the mean."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    mean = float(np.mean(x)) if n else float("nan")
    var = float(np.var(x, ddof=1)) if n > 1 else 0.0
    sd = math.sqrt(var)
    if n > 2 and sd > 0:
        skew = float(np.mean((x - mean) ** 3) / sd ** 3)
    else:
        skew = 0.0
    se = sd / math.sqrt(n) if n else float("nan")
    return {"mean": mean, "var": var, "skew": skew, "se": se,
            "ci_low": mean - Z95 * se, "ci_high": mean + Z95 * se, "replicas": n}


def linfit(x, y, w=None):
    """Weighted least squares y = c0 + c1 x; returns (c0, c1, se_c1)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.ones_like(x) if w is None else np.asarray(w, float)
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    c1 = (w * (x - xm) * (y - ym)).sum() / sxx
    c0 = ym - c1 * xm
    resid = y - c0 - c1 * x
    dof = max(len(x) - 2, 1)
    s2 = (w * resid ** 2).sum() / dof
    return c0, c1, math.sqrt(s2 / sxx) if sxx > 0 else float("nan")


def ks_normal(samples):
    """Self-standardized two-sided KS test against N(0, 1).

    The p-value comes from the Lilliefors null, which accounts for the fitted
    mean and SD; the plain KS p-value would be far too conservative.
    """
    x = np.asarray(samples, dtype=np.float64)
    sd = np.std(x, ddof=1) if len(x) > 1 else 0.0
    if not sd > 0:
        raise ValueError("zero variance: KS test is degenerate")
    stat, pval = lilliefors(x, dist="norm", pvalmethod="table")
    return float(stat), float(pval)
