"""Deterministic bound machinery for the GIG Levy density.

The GIG jump intensity in (x, z) space is

    q(x, z) = (2 e^(-x gamma^2/2) / (pi^2 x)) * e^(-z^2 x / (2 delta^2)) / (z |H_nu(z)|^2)

with nu = |lambda| and H_nu the Hankel function of the first kind.  The term
s(z) = z |H_nu(z)|^2 is monotone in z (increasing to 2/pi for nu < 1/2,
decreasing to 2/pi for nu > 1/2, constant at nu = 1/2) and is sandwiched by
two piecewise power laws A(z) and B(z) built from corner points z1 and z0.
Replacing s(z) by A or B yields tractable dominating/minorising intensities,
the thinning ratios of the samplers, lower bounds on their acceptance rates,
and the residual-moment bounds used for adaptive truncation.

Everything in this module is pure and array-friendly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy.optimize import minimize_scalar

from .specfun import (
    TWO_OVER_PI,
    LOG_TWO_OVER_PI,
    log_scaled_hankel_sq,
    lower_gamma_over_power,
    lower_inc_gamma,
    scaled_hankel_sq,
    upper_inc_gamma,
)

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class GigParams:
    """Parameters (lambda, delta, gamma) of the GIG subordinator.

    lam is the tail parameter (nonzero), delta > 0 the scale and
    gamma_param >= 0 the tempering; gamma_param = 0 is only meaningful for
    lam < 0 (reciprocal-gamma / Student-t limit).
    """

    lam: float
    delta: float
    gamma_param: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam == 0.0:
            raise ValueError("lam must be finite and nonzero")
        if not (self.delta > 0.0) or not np.isfinite(self.delta):
            raise ValueError("delta must be finite and > 0")
        if not (self.gamma_param >= 0.0) or not np.isfinite(self.gamma_param):
            raise ValueError("gamma_param must be finite and >= 0")
        if self.gamma_param == 0.0 and self.lam >= 0.0:
            raise ValueError("gamma_param = 0 requires lam < 0")

    @property
    def nu(self) -> float:
        return abs(self.lam)


@dataclass(frozen=True)
class EnvelopeConfig:
    """Corner points of the piecewise bounds plus the cached H0 = s(z0).

    z1 is the corner of A (z1 = 0 collapses A to the flat bound 2/pi), z0
    the corner of B.  With z0 = z1 the two envelopes differ by the constant
    factor pi*H0/2, which enables the squeezed samplers; ``squeeze`` selects
    them where that constant is available.
    """

    z1: float
    z0: float
    h0: float
    squeeze: bool = True

    def __post_init__(self):
        if self.z1 < 0 or self.z0 <= 0 or self.h0 <= 0:
            raise ValueError("need z1 >= 0, z0 > 0, h0 > 0")

    def validate_for(self, p: GigParams) -> None:
        nu = p.nu
        if nu != 0.5:
            if self.z1 > 0 and self.z1 > z1_max(nu) * (1 + 1e-12):
                raise ValueError(f"z1={self.z1} exceeds the admissible corner {z1_max(nu)}")
            href = scaled_hankel_sq(nu, self.z0)
            if abs(self.h0 - href) > 1e-12 * abs(href):
                raise ValueError("cached h0 is inconsistent with z0")


def default_envelope(p: GigParams, squeeze: bool = True, z1: float | None = None, z0: float | None = None) -> EnvelopeConfig:
    """Default corners: z1 = z0 = z1_max(nu), the tightest admissible choice.

    The degenerate routes pin z1 = 0: at nu = 0.5 every bound is exactly
    2/pi, and at gamma = 0 only the flat A-bound yields a valid dominating
    (stable) process.
    """
    nu = p.nu
    if nu == 0.5:
        z1 = 0.0 if z1 is None else float(z1)
        z0 = (z1 if z1 > 0 else 1.0) if z0 is None else z0
        return EnvelopeConfig(z1=z1, z0=z0, h0=TWO_OVER_PI, squeeze=squeeze)
    if p.gamma_param == 0.0:
        z0 = z1_max(nu) if z0 is None else z0
        return EnvelopeConfig(z1=0.0, z0=z0, h0=float(scaled_hankel_sq(nu, z0)), squeeze=squeeze)
    if z1 is None:
        z1 = z1_max(nu)
    if z0 is None:
        z0 = z1
    if z0 <= 0:
        raise ValueError("z0 must be > 0")
    return EnvelopeConfig(z1=float(z1), z0=float(z0), h0=float(scaled_hankel_sq(nu, z0)), squeeze=squeeze)


def classify_regime(p: GigParams) -> str:
    """Route a parameter set to its sampling construction.

    "ts-exact": |lam| = 1/2, the intensity is exactly tempered 1/2-stable.
    "A": |lam| > 1/2 with tempering, dominate with the A-envelope (corner z1).
    "B": |lam| < 1/2 with tempering, dominate with the B-envelope (corner z0).
    "stable": gamma = 0 (needs |lam| >= 1/2), flat bound with a stable proposal.
    """
    nu = p.nu
    if nu == 0.5:
        return "ts-exact"
    if p.gamma_param == 0.0:
        if nu < 0.5:
            raise ValueError("gamma_param = 0 with |lam| < 0.5 admits no dominating construction")
        return "stable"
    return "A" if nu > 0.5 else "B"


def z1_max(nu: float) -> float:
    """Largest admissible corner of A: (2^(1-2nu) pi / Gamma(nu)^2)^(1/(1-2nu)).

    Singular at nu = 0.5, where every z1 is admissible because the bound is
    an identity; callers take the exact tempered-stable route there.
    """
    if nu <= 0:
        raise ValueError("nu must be > 0")
    if nu == 0.5:
        raise ValueError("corner formula is singular at nu = 0.5; use the exact route")
    return float((2.0 ** (1.0 - 2.0 * nu) * np.pi / sp.gamma(nu) ** 2) ** (1.0 / (1.0 - 2.0 * nu)))


def bound_A(z, nu: float, z1: float):
    """Piecewise bound A(z): (2/pi)(z1/z)^(2nu-1) below z1, 2/pi above."""
    z = np.asarray(z, dtype=float)
    if z1 == 0.0:
        return np.full_like(z, TWO_OVER_PI)
    return np.where(z < z1, TWO_OVER_PI * (z1 / z) ** (2.0 * nu - 1.0), TWO_OVER_PI)


def bound_B(z, nu: float, z0: float, h0: float):
    """Piecewise bound B(z): H0 (z0/z)^(2nu-1) below z0, H0 above."""
    z = np.asarray(z, dtype=float)
    return np.where(z < z0, h0 * (z0 / z) ** (2.0 * nu - 1.0), h0)


def q_gig_xz(x, z, p: GigParams):
    """Bivariate GIG jump intensity q(x, z); its z-marginal is the GIG density."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    s = scaled_hankel_sq(p.nu, z)
    expo = -x * p.gamma_param**2 / 2.0 - z * z * x / (2.0 * p.delta**2)
    return 2.0 * np.exp(expo) / (np.pi**2 * x * s)


def envelope_xz(x, z, p: GigParams, cfg: EnvelopeConfig, which: str):
    """q(x, z) with s(z) replaced by bound A or B.

    For nu >= 1/2 this gives Q^B <= q <= Q^A pointwise; for nu <= 1/2 the
    ordering reverses, with equality throughout at nu = 1/2.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if which == "A":
        b = bound_A(z, p.nu, cfg.z1)
    elif which == "B":
        b = bound_B(z, p.nu, cfg.z0, cfg.h0)
    else:
        raise ValueError("which must be 'A' or 'B'")
    expo = -x * p.gamma_param**2 / 2.0 - z * z * x / (2.0 * p.delta**2)
    return 2.0 * np.exp(expo) / (np.pi**2 * x * b)


def dominating_marginal(x, p: GigParams, cfg: EnvelopeConfig, regime: str, component: str):
    """x-marginal of the chosen envelope restricted to one z-region.

    component "N1" integrates the envelope over z below the corner (a
    modified tempered nu-stable density), "N2" over z above it (a modified
    tempered 1/2-stable density).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    nu, delta, gam = p.nu, p.delta, p.gamma_param
    if regime == "A":
        zc, norm = cfg.z1, np.pi
    elif regime == "B":
        zc, norm = cfg.z0, np.pi**2 * cfg.h0 / 2.0
    else:
        raise ValueError("regime must be 'A' or 'B'")
    u = zc * zc * x / (2.0 * delta**2)
    damp = np.exp(-x * gam**2 / 2.0)
    if component == "N1":
        if zc <= 0:
            raise ValueError("N1 needs a positive corner")
        return damp * zc * lower_gamma_over_power(nu, u) / (2.0 * norm * x)
    if component == "N2":
        return damp * delta * math.sqrt(2.0) * SQRT_PI * sp.erfc(np.sqrt(u)) / (2.0 * norm * x**1.5)
    raise ValueError("component must be 'N1' or 'N2'")


def log_bound(z, p: GigParams, cfg: EnvelopeConfig, regime: str):
    """log A(z) (regime A) or log B(z) (regime B), overflow-safe."""
    z = np.asarray(z, dtype=float)
    nu = p.nu
    if regime == "A":
        zc, log_k = cfg.z1, LOG_TWO_OVER_PI
    else:
        zc, log_k = cfg.z0, math.log(cfg.h0)
    if zc == 0.0 or nu == 0.5:
        return np.full_like(z, log_k)
    return log_k + (2.0 * nu - 1.0) * np.where(z < zc, np.log(zc) - np.log(z), 0.0)


def thinning_ratio(z, p: GigParams, cfg: EnvelopeConfig, regime: str, component: str):
    """Acceptance probability bound(z) / s(z) on the component's z-support.

    Depends on z only.  Support is (0, corner) for N1 and [corner, inf) for
    N2; values outside raise.  Lies in (0, 1] whenever the envelope is the
    dominating one for the regime.
    """
    z = np.asarray(z, dtype=float)
    zc = cfg.z1 if regime == "A" else cfg.z0
    if component == "N1":
        if np.any(z <= 0) or np.any(z >= zc):
            raise ValueError("N1 support is (0, corner)")
    elif component == "N2":
        if np.any(z < zc):
            raise ValueError("N2 support is [corner, inf)")
    else:
        raise ValueError("component must be 'N1' or 'N2'")
    return np.exp(log_bound(z, p, cfg, regime) - log_scaled_hankel_sq(p.nu, z))


def squeeze_constant(p: GigParams, cfg: EnvelopeConfig) -> float | None:
    """Constant lower bound on the exact thinning ratio, or None.

    Available when the two envelopes differ by a constant factor: their
    ratio is pi*H0/2 once z0 = z1.  The pre-test constant is then
    2/(pi H0) for nu >= 1/2 (A dominates) and pi H0/2 for nu <= 1/2
    (B dominates); both are exactly 1.0 at nu = 1/2.
    """
    nu = p.nu
    if nu == 0.5:
        return 1.0
    if cfg.z1 <= 0 or cfg.z1 != cfg.z0:
        return None
    if nu > 0.5:
        return TWO_OVER_PI / cfg.h0
    return cfg.h0 / TWO_OVER_PI


def acceptance_lower_bound(x, p: GigParams, z0: float, z1: float, component: str):
    """Lower bound on the expected Hankel-stage acceptance rate at fixed x.

    Valid for nu >= 1/2, where B(z) upper-bounds s(z); the bound is the
    thinning-ratio expectation with s replaced by B and comes out piecewise
    in the relative position of z0 and z1 (the z0 = z1 boundary belongs to
    the [z1, inf) branch; the two branches agree there).
    """
    nu, delta = p.nu, p.delta
    if nu < 0.5:
        raise ValueError("acceptance bound applies for |lam| >= 0.5 only")
    if z0 <= 0:
        raise ValueError("z0 must be > 0")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    h0 = float(scaled_hankel_sq(nu, z0))
    lead = TWO_OVER_PI / h0
    u0 = z0 * z0 * x / (2.0 * delta**2)
    u1 = z1 * z1 * x / (2.0 * delta**2)
    if component == "N1":
        if z1 <= 0:
            raise ValueError("the N1 component needs z1 > 0")
        if z0 >= z1:
            out = np.broadcast_to(lead * (z1 / z0) ** (2.0 * nu - 1.0), x.shape).copy()
        else:
            g1 = lower_inc_gamma(nu, u1)
            term1 = (z1 / z0) ** (2.0 * nu - 1.0) * lower_inc_gamma(nu, u0) / g1
            term2 = u1 ** (nu - 0.5) * (lower_inc_gamma(0.5, u1) - lower_inc_gamma(0.5, u0)) / g1
            out = lead * (term1 + term2)
    elif component == "N2":
        if z0 < z1:
            out = np.broadcast_to(lead, x.shape).copy()
        else:
            gu1 = upper_inc_gamma(0.5, u1)
            term1 = upper_inc_gamma(0.5, u0) / gu1
            term2 = u0 ** (0.5 - nu) * (lower_inc_gamma(nu, u0) - lower_inc_gamma(nu, u1)) / gu1
            out = lead * (term1 + term2)
    else:
        raise ValueError("component must be 'N1' or 'N2'")
    return np.clip(out, 0.0, 1.0) if out.ndim else float(min(max(float(out), 0.0), 1.0))


def optimize_z0(x: float, p: GigParams, z1: float, component: str):
    """Maximise the acceptance lower bound over the free corner z0.

    A coarse log-spaced scan brackets the best region and golden-section
    refines it (relative tolerance 1e-6); returns (z0*, bound at z0*).
    """
    scale = z1 if z1 > 0 else p.delta
    lo, hi = math.log(1e-3 * scale), math.log(1e3 * scale)

    def neg(logz0):
        return -float(acceptance_lower_bound(x, p, math.exp(logz0), z1, component))

    grid = np.linspace(lo, hi, 49)
    vals = np.array([neg(g) for g in grid])
    i = int(np.argmin(vals))
    bl = grid[max(i - 1, 0)]
    bh = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(neg, bounds=(bl, bh), method="bounded", options={"xatol": 1e-8})
    best_log, best = res.x, -res.fun
    if -vals[i] > best:
        best_log, best = grid[i], -vals[i]
    return math.exp(best_log), float(best)


def component_families(p: GigParams, cfg: EnvelopeConfig):
    """Dominating point-process families for the active sampling route.

    Returns (name, family, C, alpha, beta) tuples, where family is "gamma"
    (density C x^-1 e^(-beta x)) or "ts" (C x^(-1-alpha) e^(-beta x)); the
    tuple list drives proposal generation and the residual-moment upper
    bounds.  A lam > 0 parameter set appends its extra exact gamma component.
    """
    regime = classify_regime(p)
    nu, delta, gam = p.nu, p.delta, p.gamma_param
    half_gam2 = gam * gam / 2.0
    out = []
    if regime == "ts-exact" and cfg.z1 > 0:
        # optional corner split at nu = 1/2: the envelope equals the intensity,
        # so the two-component construction is exact and mirrors regime A
        if gam == 0.0:
            raise ValueError("a positive corner at nu = 0.5 needs gamma_param > 0")
        regime = "A"
    if regime == "ts-exact" or regime == "stable":
        out.append(("n2_ts", "ts", delta / math.sqrt(2.0 * math.pi), 0.5, half_gam2))
    elif regime == "A":
        z1 = cfg.z1
        if z1 <= 0:
            raise ValueError("regime A needs z1 > 0")
        out.append(("n1_gamma_lo", "gamma", z1 / (2.0 * math.pi * nu * (1.0 + nu)), None, half_gam2))
        out.append(("n1_gamma_hi", "gamma", z1 / (2.0 * math.pi * (1.0 + nu)), None, half_gam2 + z1 * z1 / (2.0 * delta**2)))
        out.append(("n2_ts", "ts", delta / math.sqrt(2.0 * math.pi), 0.5, half_gam2 + z1 * z1 / (2.0 * delta**2)))
    elif regime == "B":
        z0, h0 = cfg.z0, cfg.h0
        den = math.pi**2 * h0
        out.append(("n1_gamma_lo", "gamma", z0 / (den * nu * (1.0 + nu)), None, half_gam2))
        out.append(("n1_gamma_hi", "gamma", z0 / (den * (1.0 + nu)), None, half_gam2 + z0 * z0 / (2.0 * delta**2)))
        out.append(("n2_ts", "ts", delta * math.sqrt(2.0 * math.pi) / den, 0.5, half_gam2))
    if p.lam > 0:
        out.append(("extra_gamma", "gamma", p.lam, None, half_gam2))
    return out
