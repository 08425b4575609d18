"""Shared test oracles: analytic moments and small statistical utilities.

These stay independent of the sampling code under test; the GIG moment
formulas in particular are standard Bessel-ratio identities used only here.
"""

import numpy as np
from scipy import special as sp
from scipy import stats


def gig_mean(lam, delta, gamma):
    if gamma == 0.0:
        # reciprocal gamma: finite for lam < -1
        return delta**2 / (2.0 * (-lam - 1.0))
    w = delta * gamma
    return (delta / gamma) * sp.kv(lam + 1, w) / sp.kv(lam, w)


def gig_second_moment(lam, delta, gamma):
    if gamma == 0.0:
        return delta**4 / (4.0 * (-lam - 1.0) * (-lam - 2.0))
    w = delta * gamma
    return (delta / gamma) ** 2 * sp.kv(lam + 2, w) / sp.kv(lam, w)


def mc_check(samples, target, n_se=4.0):
    """Assert the sample mean matches target within n_se standard errors."""
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(samples.mean() - target) <= n_se * max(se, 1e-300), (
        f"mean {samples.mean()} vs {target}, se {se}"
    )


def chi2_gof(samples, cdf, bins=40, alpha=0.01, lo_q=0.001, hi_q=0.999):
    """Chi-square goodness-of-fit of samples against a CDF, merging thin bins."""
    samples = np.asarray(samples, dtype=float)
    edges = np.quantile(samples, np.linspace(lo_q, hi_q, bins + 1))
    edges = np.unique(edges)
    counts, _ = np.histogram(samples, bins=edges)
    probs = np.diff([cdf(e) for e in edges])
    inside = (samples >= edges[0]) & (samples <= edges[-1])
    n = inside.sum()
    expected = np.asarray(probs) * n / max(sum(probs), 1e-300)
    keep = expected >= 5
    stat = float(np.sum((counts[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = int(keep.sum()) - 1
    crit = stats.chi2.ppf(1 - alpha, dof)
    assert stat <= crit, f"chi2 {stat:.1f} > {crit:.1f} at dof {dof}"


def ks_threshold(n, m=None, alpha=0.01):
    """Two-sample KS rejection threshold at level alpha (asymptotic)."""
    m = n if m is None else m
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    return c * np.sqrt((n + m) / (n * m))
