"""Samplers for the jumps of the GIG subordinator.

Jump magnitudes are proposed from tractable dominating processes (two gamma
processes feeding the below-corner component N1, one tempered-stable process
feeding the above-corner component N2) and thinned in stages:

  1. family thinning that realises the dominating gamma/TS process itself,
  2. an incomplete-gamma acceptance that corrects the dominating density to
     the envelope's x-marginal,
  3. a conditional draw of the auxiliary coordinate z from a truncated
     square-root-gamma density followed by acceptance with probability
     bound(z)/s(z), where s(z) = z |H_nu(z)|^2.

Stage 3 optionally runs in squeezed (retrospective) form: when the two
envelopes differ by a constant factor, a single uniform w per point is
pre-tested against the constant lower bound of the acceptance ratio; the
expensive z-draw plus Hankel evaluation happen only on pre-test failure and
reuse the same w for the exact test.

Everything is vectorised across a batch of independent paths: proposals are
flat arrays tagged with a path index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from . import truncation
from .gig_envelope import (
    EnvelopeConfig,
    GigParams,
    classify_regime,
    component_families,
    default_envelope,
    squeeze_constant,
)
from .pp_core import Interval, JumpSet, gamma_dom_tail, gamma_inverse_tail, stable_tail, ts_inverse_tail
from .specfun import LOG_TWO_OVER_PI, log_scaled_hankel_sq, lower_gamma_over_power, sample_sqrt_gamma_truncated
from .truncation import TruncationConfig, family_residual_moments, gig_lower_parts


@dataclass
class StageCounters:
    proposed: int = 0
    accepted: int = 0

    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


@dataclass
class ComponentCounters:
    """Per-stage acceptance bookkeeping for one dominating component.

    ``dominating`` counts the family thinning that realises the proposal
    process, ``marginal`` the incomplete-gamma stage, ``hankel`` the final
    z-stage (squeeze pre-accepts included).  ``squeeze_pre`` tracks pre-test
    outcomes and ``z_draws`` the truncated square-root-gamma draws actually
    performed.
    """

    dominating: StageCounters = field(default_factory=StageCounters)
    marginal: StageCounters = field(default_factory=StageCounters)
    hankel: StageCounters = field(default_factory=StageCounters)
    squeeze_pre: StageCounters = field(default_factory=StageCounters)
    z_draws: int = 0


@dataclass
class _MarginalStage:
    """Acceptance correcting the dominating family to the envelope marginal.

    "n1": lower-incomplete-gamma ratio against the two-gamma relaxation.
    "n2_scaled": upper incomplete gamma against its single-exponential bound.
    "n2_plain": upper incomplete gamma against the complete gamma.
    """

    kind: str
    nu: float
    inv_two_delta_sq: float
    corner: float

    def prob(self, x):
        u = self.corner * self.corner * x * self.inv_two_delta_sq
        if self.kind == "n1":
            nu = self.nu
            return nu * (1.0 + nu) * lower_gamma_over_power(nu, u) / (1.0 + nu * np.exp(-u))
        if self.kind == "n2_scaled":
            return sp.erfcx(np.sqrt(u))
        if self.kind == "n2_plain":
            return sp.erfc(np.sqrt(u))
        raise AssertionError(self.kind)


@dataclass
class _HankelStage:
    """z-draw plus acceptance with probability bound(z)/s(z), optionally squeezed."""

    nu: float
    inv_two_delta_sq: float
    corner: float  # truncation corner for z; 0 means untruncated support
    side: str  # "right" for N1, "left" for N2
    shape: float  # nu for N1, 0.5 for N2
    log_k: float  # log of the bound's flat level (2/pi or H0)
    power_corner: bool  # apply the (corner/z)^(2 nu - 1) factor (N1 only)
    squeeze_c: float | None
    counters: ComponentCounters

    def accept(self, x, rng):
        n = x.size
        self.counters.hankel.proposed += n
        w = rng.uniform(size=n)
        if self.squeeze_c is not None:
            self.counters.squeeze_pre.proposed += n
            accept = w <= self.squeeze_c
            self.counters.squeeze_pre.accepted += int(accept.sum())
            need = np.flatnonzero(~accept)
        else:
            accept = np.zeros(n, dtype=bool)
            need = np.arange(n)
        if need.size:
            rate = x[need] * self.inv_two_delta_sq
            z = sample_sqrt_gamma_truncated(self.shape, rate, self.corner, self.side, rng)
            self.counters.z_draws += need.size
            log_r = self.log_k - log_scaled_hankel_sq(self.nu, z)
            if self.power_corner and self.nu != 0.5:
                log_r = log_r + (2.0 * self.nu - 1.0) * (math.log(self.corner) - np.log(z))
            accept[need] = w[need] <= np.exp(log_r)
        self.counters.hankel.accepted += int(accept.sum())
        return accept


@dataclass
class GigComponent:
    """One dominating process with its thinning pipeline and moment bounds.

    Implements the component protocol consumed by
    :func:`ghsim.truncation.adaptive_sample`: slice sampling over magnitude
    windows plus residual-moment evaluators of the dominating family (upper)
    and of the minorising density (lower, where one is available).
    """

    name: str
    family: str  # "gamma" | "ts"
    C: float  # horizon-scaled intensity constant
    alpha: float | None
    beta: float
    marginal: _MarginalStage | None = None
    hankel: _HankelStage | None = None
    lower_fn: object = None
    counters: ComponentCounters = field(default_factory=ComponentCounters)

    def dominating_tail(self, x):
        if self.family == "gamma":
            return gamma_dom_tail(self.C, self.beta, x)
        return stable_tail(self.C, self.alpha, x)

    def residual_upper(self, eps):
        kind = "gamma" if self.family == "gamma" else "tempered_stable"
        return family_residual_moments(kind, self.C, self.alpha, self.beta, eps)

    def residual_lower(self, eps):
        return None if self.lower_fn is None else self.lower_fn(eps)

    def sample_slice(self, lo, hi, n_paths, rng):
        g_hi = float(self.dominating_tail(lo))
        g_lo = float(self.dominating_tail(hi)) if np.isfinite(hi) else 0.0
        counts = rng.poisson(g_hi - g_lo, size=n_paths)
        total = int(counts.sum())
        pid = np.repeat(np.arange(n_paths), counts)
        gam = g_lo + (g_hi - g_lo) * rng.uniform(size=total)
        if self.family == "gamma":
            x = gamma_inverse_tail(self.C, self.beta, gam)
            keep = rng.uniform(size=total) <= (1.0 + self.beta * x) * np.exp(-self.beta * x)
        else:
            x = ts_inverse_tail(self.C, self.alpha, gam)
            if self.beta > 0:
                keep = rng.uniform(size=total) <= np.exp(-self.beta * x)
            else:
                keep = np.ones(total, dtype=bool)
        self.counters.dominating.proposed += total
        pid, x = pid[keep], x[keep]
        self.counters.dominating.accepted += x.size
        if self.marginal is not None and x.size:
            self.counters.marginal.proposed += x.size
            keep = rng.uniform(size=x.size) <= self.marginal.prob(x)
            pid, x = pid[keep], x[keep]
            self.counters.marginal.accepted += x.size
        if self.hankel is not None and x.size:
            keep = self.hankel.accept(x, rng)
            pid, x = pid[keep], x[keep]
        return pid, x


def gig_components(p: GigParams, cfg: EnvelopeConfig | None = None, horizon: float = 1.0, beta0: float = 2.0):
    """Build the routed dominating components with their pipelines attached."""
    if cfg is None:
        cfg = default_envelope(p)
    cfg.validate_for(p)
    regime = classify_regime(p)
    nu, delta = p.nu, p.delta
    inv2d2 = 1.0 / (2.0 * delta * delta)
    sq_c = squeeze_constant(p, cfg) if cfg.squeeze else None
    if regime == "B":
        corner, log_k, n2_kind = cfg.z0, math.log(cfg.h0), "n2_plain"
    else:
        corner, log_k, n2_kind = cfg.z1, LOG_TWO_OVER_PI, "n2_scaled"
    # the stop test uses the configured-corner bounds; the tighter optimised
    # minorant is reserved for the residual surrogate itself
    lower_parts = gig_lower_parts(p, cfg, beta0, T=horizon, optimize=False)
    comps = []
    for name, family, C, alpha, beta in component_families(p, cfg):
        comp = GigComponent(name, family, horizon * C, alpha, beta)
        if name == "extra_gamma":
            comp.lower_fn = lower_parts.get("extra")
        elif name.startswith("n1"):
            comp.marginal = _MarginalStage("n1", nu, inv2d2, corner)
            comp.hankel = _HankelStage(nu, inv2d2, corner, "right", nu, log_k, True, sq_c, comp.counters)
        else:
            comp.marginal = _MarginalStage(n2_kind, nu, inv2d2, corner)
            comp.hankel = _HankelStage(nu, inv2d2, corner, "left", 0.5, log_k, False, sq_c, comp.counters)
            if regime == "ts-exact" and cfg.z1 == 0.0:
                comp.lower_fn = comp.residual_upper  # the component is the process itself
            elif regime == "stable":
                n1f, n2f = lower_parts["n1"], lower_parts["n2"]
                comp.lower_fn = lambda e, f1=n1f, f2=n2f: tuple(a + b for a, b in zip(f1(e), f2(e)))
            elif regime == "B" or cfg.z0 == cfg.z1:
                # the minorising TS form needs the N2 region to contain [corner, inf)
                comp.lower_fn = lower_parts.get("n2")
        comps.append(comp)
    return comps


def _run_interval(comps, iv: Interval, rng):
    if iv.a <= 0:
        raise ValueError("interval needs a > 0 (infinite activity below any level)")
    parts = [comp.sample_slice(iv.a, iv.b, 1, rng)[1] for comp in comps]
    sizes = np.concatenate(parts) if parts else np.empty(0)
    out = JumpSet(np.sort(sizes)[::-1])
    out.meta["counters"] = {c.name: c.counters for c in comps}
    return out


def sample_N1(p: GigParams, cfg: EnvelopeConfig | None, iv: Interval, rng, horizon: float = 1.0) -> JumpSet:
    """Jumps of the below-corner component N1 restricted to a magnitude window.

    Undefined at gamma_param = 0, where the first proposal gamma process has
    zero rate.
    """
    if p.gamma_param == 0.0:
        raise ValueError("N1 is undefined for gamma_param = 0")
    comps = [c for c in gig_components(p, cfg, horizon) if c.name.startswith("n1")]
    return _run_interval(comps, iv, rng)


def sample_N2(p: GigParams, cfg: EnvelopeConfig | None, iv: Interval, rng, horizon: float = 1.0) -> JumpSet:
    """Jumps of the above-corner component N2 restricted to a magnitude window."""
    comps = [c for c in gig_components(p, cfg, horizon) if c.name == "n2_ts"]
    return _run_interval(comps, iv, rng)


def sample_positive_lambda_extra(p: GigParams, iv: Interval, rng, horizon: float = 1.0) -> JumpSet:
    """Extra gamma-process jumps present for lam > 0 (shape lam, rate gamma^2/2)."""
    if p.lam <= 0 or p.gamma_param <= 0:
        raise ValueError("extra gamma component needs lam > 0 and gamma_param > 0")
    comps = [c for c in gig_components(p, None, horizon) if c.name == "extra_gamma"]
    return _run_interval(comps, iv, rng)


def residual_bounds_at(p: GigParams, cfg: EnvelopeConfig, eps_sim: dict, beta0: float = 2.0, horizon: float = 1.0):
    """Residual moment bounds at the realised per-component truncation levels.

    Upper bounds add each dominating family at its own final level.  Lower
    bounds evaluate the minorising split per part: the gamma form at the
    deepest level jointly reached by both N1 proposal processes (their
    minimum), the TS form at the N2 level, and the exact extra-gamma moments
    at its own level.  Levels of inf (stop before the first slice)
    contribute full-mass moments.  Vectorised over paths.
    """
    comps = component_families(p, cfg)
    mu_u = 0.0
    var_u = 0.0
    for name, family, C, alpha, beta in comps:
        kind = "gamma" if family == "gamma" else "tempered_stable"
        m, v = family_residual_moments(kind, horizon * C, alpha, beta, eps_sim[name])
        mu_u = mu_u + m
        var_u = var_u + v
    parts = gig_lower_parts(p, cfg, beta0, T=horizon)
    names = [c[0] for c in comps]
    mu_l = 0.0
    var_l = 0.0
    eps_n2 = eps_sim["n2_ts"]
    if p.nu == 0.5 and "n1_gamma_lo" in names:
        # explicit corner split at nu = 1/2: the exact whole-process moments
        # only minorise the residual at the shallowest level reached
        eps_n2 = np.minimum(eps_n2, np.minimum(eps_sim["n1_gamma_lo"], eps_sim["n1_gamma_hi"]))
    if "n1" in parts:
        if "n1_gamma_lo" in names:
            eps_n1 = np.minimum(eps_sim["n1_gamma_lo"], eps_sim["n1_gamma_hi"])
        else:
            eps_n1 = eps_sim["n2_ts"]  # stable route: the single component covers every z
        m, v = parts["n1"](eps_n1)
        mu_l, var_l = mu_l + m, var_l + v
    m, v = parts["n2"](eps_n2)
    mu_l, var_l = mu_l + m, var_l + v
    if "extra" in parts:
        m, v = parts["extra"](eps_sim["extra_gamma"])
        mu_l, var_l = mu_l + m, var_l + v
    return mu_u, var_u, mu_l, var_l


def sample_gig_batch(p: GigParams, trunc: TruncationConfig, cfg: EnvelopeConfig, rng, n_paths: int, sink=None, horizon: float = 1.0, couple_paths: bool = False):
    """Batched adaptive GIG sampling across independent paths.

    Returns (AdaptiveResult, per-path (mu_up, var_up, mu_low, var_low)).
    ``sink`` optionally streams (path_idx, sizes, rng) per accepted slice so
    endpoint-only callers avoid storing every magnitude; ``couple_paths``
    extends every path to the depth demanded by the batch's worst path.
    """
    if cfg is None:
        cfg = default_envelope(p)
    comps = gig_components(p, cfg, horizon, trunc.beta0)
    res = truncation.adaptive_sample(comps, trunc, rng, n_paths=n_paths, sink=sink, collect=sink is None, couple_paths=couple_paths)
    res.counters = {c.name: c.counters for c in comps}
    moments = residual_bounds_at(p, cfg, res.eps_sim, trunc.beta0, horizon)
    res.moment_bounds = moments  # part-structured bounds supersede the generic aggregate
    return res, moments


def sample_gig(p: GigParams, trunc: TruncationConfig | None = None, cfg: EnvelopeConfig | None = None, rng=None, horizon: float = 1.0) -> JumpSet:
    """Adaptively truncated GIG jump magnitudes (one realisation).

    Routes on the parameters: exact tempered-stable at |lam| = 0.5, the
    A-envelope construction for |lam| > 0.5 with tempering, the B-envelope
    construction for 0 < |lam| < 0.5, a stable proposal for gamma_param = 0
    (lam <= -0.5), plus an extra exact gamma component for lam > 0.
    Metadata carries per-stage counters, per-component truncation levels and
    the residual moment bounds at the realised truncation.
    """
    if rng is None:
        raise ValueError("an explicit numpy Generator is required")
    if trunc is None:
        trunc = TruncationConfig()
    if cfg is None:
        cfg = default_envelope(p)
    res, (mu_u, var_u, mu_l, var_l) = sample_gig_batch(p, trunc, cfg, rng, n_paths=1, horizon=horizon)
    out = JumpSet(np.sort(res.sizes)[::-1])
    out.meta.update(
        counters=res.counters,
        eps_sim={k: float(v[0]) for k, v in res.eps_sim.items()},
        eps_stop={k: float(v[0]) for k, v in res.eps_stop.items()},
        moments=truncation.ResidualMoments(
            float(np.atleast_1d(mu_u)[0]),
            float(np.atleast_1d(var_u)[0]),
            float(np.atleast_1d(mu_l)[0]),
            float(np.atleast_1d(var_l)[0]),
        ),
        regime=classify_regime(p),
        total=float(res.totals[0]),
    )
    return out
