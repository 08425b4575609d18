"""Poisson-epoch machinery and the base jump generators.

A subordinator's jumps are produced by transforming the epochs of a unit-rate
Poisson process through the inverse upper tail of a tractable dominating
Levy density and thinning the result.  This module provides that machinery
for the gamma, tempered-stable and stable dominating families; everything
GIG-specific lives in :mod:`ghsim.gig_sampler`.

All generators take an explicit ``numpy.random.Generator`` and are pure given
it.  Magnitude windows are half-open intervals (a, b] on jump size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Interval:
    """Window (a, b] of jump magnitudes, b may be +inf."""

    a: float
    b: float = np.inf

    def __post_init__(self):
        if not (0.0 <= self.a < self.b):
            raise ValueError(f"need 0 <= a < b, got ({self.a}, {self.b})")


@dataclass
class JumpSet:
    """Jump magnitudes (descending) with optional arrival times in [0, T].

    ``times[i]`` belongs to ``sizes[i]`` when times are present.  ``meta``
    carries sampler bookkeeping such as per-stage acceptance counters.
    """

    sizes: np.ndarray
    times: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=float)
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            if self.times.shape != self.sizes.shape:
                raise ValueError("times and sizes must align")

    def __len__(self):
        return self.sizes.size

    def total(self) -> float:
        return float(self.sizes.sum())

    def sorted_descending(self) -> "JumpSet":
        order = np.argsort(-self.sizes, kind="stable")
        times = None if self.times is None else self.times[order]
        return JumpSet(self.sizes[order], times, self.meta)


def epochs_in_range(gamma_lo, gamma_hi, rng):
    """Epochs of a unit-rate Poisson process falling in (gamma_lo, gamma_hi].

    Implemented as a Poisson(count) draw followed by uniform placement and a
    sort, which matches the sequential exponential-gap construction in law.
    """
    if not np.isfinite(gamma_hi):
        raise ValueError("gamma_hi must be finite; map interval endpoints through the dominating tail first")
    if gamma_lo < 0 or gamma_lo > gamma_hi:
        raise ValueError("need 0 <= gamma_lo <= gamma_hi")
    if gamma_hi == gamma_lo:
        return np.empty(0)
    n = rng.poisson(gamma_hi - gamma_lo)
    eps = gamma_lo + (gamma_hi - gamma_lo) * rng.uniform(size=n)
    eps.sort()
    return eps


def ts_inverse_tail(C, alpha, gamma):
    """Map an epoch to a stable-process jump size: (alpha*gamma/C)^(-1/alpha)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if C <= 0:
        raise ValueError("C must be > 0")
    gamma = np.asarray(gamma, dtype=float)
    return (alpha * gamma / C) ** (-1.0 / alpha)


def gamma_inverse_tail(C, beta, gamma):
    """Map an epoch to a gamma-process jump size: 1 / (beta (e^(gamma/C) - 1))."""
    if C <= 0 or beta <= 0:
        raise ValueError("C and beta must be > 0")
    gamma = np.asarray(gamma, dtype=float)
    return 1.0 / (beta * np.expm1(gamma / C))


def stable_tail(C, alpha, x):
    """Upper tail of the stable dominating density: (C/alpha) x^-alpha."""
    x = np.asarray(x, dtype=float)
    return np.where(np.isinf(x), 0.0, (C / alpha) * x ** (-alpha))


def gamma_dom_tail(C, beta, x):
    """Upper tail of the gamma dominating density: C log(1 + 1/(beta x))."""
    x = np.asarray(x, dtype=float)
    return np.where(np.isinf(x), 0.0, C * np.log1p(1.0 / (beta * x)))


def _epoch_window(tail, iv, rng):
    g_lo = float(tail(iv.b))
    g_hi = float(tail(iv.a)) if iv.a > 0 else np.inf
    return epochs_in_range(g_lo, g_hi, rng)


def sample_tempered_stable(C, alpha, beta, iv, rng):
    """Jumps in (a, b] of the tempered stable density C x^(-1-alpha) e^(-beta x).

    beta = 0 gives the stable subordinator (no thinning).  Sizes come back
    sorted descending; the accepted set is a subset of the stable proposals.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    eps = _epoch_window(lambda x: stable_tail(C, alpha, x), iv, rng)
    x = ts_inverse_tail(C, alpha, eps)
    if beta > 0 and x.size:
        keep = rng.uniform(size=x.size) <= np.exp(-beta * x)
        x = x[keep]
    return JumpSet(x)


def sample_gamma_process(C, beta, iv, rng):
    """Jumps in (a, b] of the gamma-process density C x^-1 e^(-beta x).

    Proposals come from the dominating density C / (x (1 + beta x)) and are
    kept with probability (1 + beta x) e^(-beta x).
    """
    eps = _epoch_window(lambda x: gamma_dom_tail(C, beta, x), iv, rng)
    x = gamma_inverse_tail(C, beta, eps)
    if x.size:
        keep = rng.uniform(size=x.size) <= (1.0 + beta * x) * np.exp(-beta * x)
        x = x[keep]
    return JumpSet(x)


def assign_times(sizes, horizon, rng):
    """Attach i.i.d. U(0, T) arrival times to a set of jump sizes."""
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    sizes = np.asarray(sizes, dtype=float)
    return JumpSet(sizes, rng.uniform(0.0, horizon, size=sizes.size))
