"""Shot-noise simulation of generalised hyperbolic Levy processes.

The process is built by subordination: a GIG subordinator is simulated as a
thinned series of decreasing jumps, adaptively truncated with probabilistic
residual bounds, Gaussian-marked into GH jumps, and completed by a drifted
Brownian surrogate for the discarded small-jump mass.  A statistical
verification harness (exact variate oracles, KS/QQ machinery) ships with
the simulator.
"""

from .gh_process import GHParams, GHPath, gh_jumps_from_gig, path_values, simulate_gh_endpoints, simulate_gh_path
from .gig_envelope import EnvelopeConfig, GigParams, classify_regime, default_envelope, z1_max
from .gig_sampler import sample_gig, sample_N1, sample_N2, sample_positive_lambda_extra
from .oracle_stats import gh_pdf, gh_variate, gig_variate, ks_two_sample, qq_points
from .pp_core import Interval, JumpSet, assign_times, sample_gamma_process, sample_tempered_stable
from .truncation import (
    ResidualMoments,
    ScheduleExhausted,
    TruncationConfig,
    adaptive_sample,
    exceedance_bound,
    family_residual_moments,
    gh_residual_moments,
    gig_residual_bounds,
    inject_gaussian_residual,
)

__all__ = [
    "EnvelopeConfig",
    "GHParams",
    "GHPath",
    "GigParams",
    "Interval",
    "JumpSet",
    "ResidualMoments",
    "ScheduleExhausted",
    "TruncationConfig",
    "adaptive_sample",
    "assign_times",
    "classify_regime",
    "default_envelope",
    "exceedance_bound",
    "family_residual_moments",
    "gh_jumps_from_gig",
    "gh_pdf",
    "gh_residual_moments",
    "gh_variate",
    "gig_residual_bounds",
    "gig_variate",
    "inject_gaussian_residual",
    "ks_two_sample",
    "path_values",
    "qq_points",
    "sample_N1",
    "sample_N2",
    "sample_gamma_process",
    "sample_gig",
    "sample_positive_lambda_extra",
    "sample_tempered_stable",
    "simulate_gh_endpoints",
    "simulate_gh_path",
    "z1_max",
]

__version__ = "0.1.0"
