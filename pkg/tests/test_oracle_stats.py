"""Ground-truth machinery: exact variates, GH density, two-sample statistics."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from ghsim.gh_process import GHParams
from ghsim.gig_envelope import GigParams
from ghsim.oracle_stats import gh_pdf, gh_variate, gig_truncated_moment, gig_variate, ks_two_sample, qq_points
from ghsim.truncation import family_residual_moments
from helpers import chi2_gof, gig_mean, gig_second_moment, mc_check

MOMENT_GRID = [
    (-0.4, 1.0, 0.1),
    (-0.8, 1.0, 0.1),
    (-2.5, 1.0, 0.1),
    (-10.0, 1.0, 0.1),
    (0.7, 1.0, 1.3),
    (2.0, 1.0, 1.0),
]


class TestGigVariate:
    def test_inverse_gaussian_mean(self, rng):
        p = GigParams(-0.5, 1.0, 2.0)
        x = gig_variate(p, rng, size=100000)
        mc_check(x, 0.5)  # delta / gamma

    @pytest.mark.parametrize("lam,delta,gamma", MOMENT_GRID)
    def test_bessel_ratio_moments(self, rng, lam, delta, gamma):
        p = GigParams(lam, delta, gamma)
        x = gig_variate(p, rng, size=100000)
        mc_check(x, gig_mean(lam, delta, gamma))
        mc_check(x * x, gig_second_moment(lam, delta, gamma))

    def test_reciprocal_gamma_limit(self, rng):
        p = GigParams(-2.5, math.sqrt(5.0), 0.0)
        x = gig_variate(p, rng, size=100000)
        res = stats.kstest(1.0 / x, stats.gamma(a=2.5, scale=1.0 / 2.5).cdf)
        assert res.pvalue > 0.01


class TestGhVariate:
    def test_degenerate_mixture(self, rng):
        p = GHParams(GigParams(-0.5, 1.0, 0.5), beta_skew=1.0, sigma_scale=1e-12)
        u = gh_variate(p, rng, size=50000)
        mc_check(u, gig_mean(-0.5, 1.0, 0.5))

    def test_symmetry(self, rng):
        p = GHParams(GigParams(-0.8, 1.0, 0.3))
        w = gh_variate(p, rng, size=100000)
        skew = np.mean(w**3)
        se = np.std(w**3) / math.sqrt(w.size)
        assert abs(skew) <= 4 * se

    def test_histogram_matches_pdf(self, rng):
        p = GHParams(GigParams(-0.8, 1.0, 0.6), beta_skew=0.2)
        w = gh_variate(p, rng, size=100000)

        def cdf(t):
            val, _ = quad(lambda s: float(gh_pdf(p, s)), -60.0, t, epsabs=1e-12, epsrel=1e-10, limit=300)
            return val

        chi2_gof(w, cdf, bins=50)


class TestGhPdf:
    def test_symmetric_case(self):
        p = GHParams(GigParams(-0.8, 1.0, 1.0), mu_loc=0.0)
        d = np.array([0.3, 1.7, 4.2])
        assert np.allclose(gh_pdf(p, d), gh_pdf(p, -d), rtol=1e-13)

    def test_normalisation(self):
        with pytest.warns(UserWarning):
            p = GHParams.from_shape(-0.8, alpha=1.0, beta=0.0, delta=1.0, mu=0.1)
        val, _ = quad(lambda s: float(gh_pdf(p, s)), -50.0 + 0.1, 50.0 + 0.1, epsabs=1e-12, epsrel=1e-9, limit=400)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_nig_closed_form(self):
        lam, alpha, beta, delta, mu = -0.5, 1.3, 0.4, 0.9, 0.2
        with pytest.warns(UserWarning):
            p = GHParams.from_shape(lam, alpha, beta, delta, mu)
        x = np.linspace(-6, 6, 41)
        gamma = math.sqrt(alpha**2 - beta**2)
        q = np.sqrt(delta**2 + (x - mu) ** 2)
        from scipy.special import kv

        nig = alpha * delta / math.pi * np.exp(delta * gamma + beta * (x - mu)) * kv(1, alpha * q) / q
        assert np.allclose(gh_pdf(p, x), nig, rtol=1e-10)

    def test_student_t_limit(self):
        nu = 5.0
        p = GHParams(GigParams(-nu / 2.0, math.sqrt(nu), 0.0))
        x = np.linspace(-8, 8, 33)
        assert np.allclose(gh_pdf(p, x), stats.t(df=nu).pdf(x), rtol=1e-12)

    def test_asymmetric_t_normalises(self):
        p = GHParams(GigParams(-2.5, math.sqrt(5.0), 0.0), beta_skew=2.0)
        val, _ = quad(lambda s: float(gh_pdf(p, s)), -40.0, 400.0, epsabs=1e-12, epsrel=1e-9, limit=500)
        assert val == pytest.approx(1.0, abs=1e-5)

    def test_gamma_zero_needs_negative_lam(self):
        # construction already blocks gamma = 0 with lam >= 0
        with pytest.raises(ValueError):
            GHParams(GigParams(0.5, 1.0, 0.0))


class TestKsTwoSample:
    def test_identical_samples(self):
        a = np.array([0.3, 1.0, 2.0, 5.0])
        assert ks_two_sample(a, a) == 0.0

    def test_disjoint_singletons(self):
        assert ks_two_sample(np.array([0.0]), np.array([1.0])) == 1.0

    def test_matches_scipy(self, rng):
        a = rng.standard_normal(1000)
        b = rng.standard_normal(1500) + 0.1
        assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)

    def test_null_calibration(self, rng):
        n, hits = 10000, 0
        for _ in range(100):
            a = rng.standard_normal(n)
            b = rng.standard_normal(n)
            hits += ks_two_sample(a, b) < 1.95 * math.sqrt(2.0 / n)
        assert hits >= 95

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_two_sample(np.array([]), np.array([1.0]))


class TestQqPoints:
    def test_diagonal(self, rng):
        a = rng.standard_normal(500)
        pts = qq_points(a, a, 21)
        assert pts.shape == (21, 2)
        assert np.allclose(pts[:, 0], pts[:, 1])

    def test_affine_map(self, rng):
        a = rng.standard_normal(2000)
        pts = qq_points(a, 2.0 * a, 15)
        assert np.allclose(pts[:, 1], 2.0 * pts[:, 0], atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            qq_points(np.array([1.0]), np.array([1.0]), 0)


class TestTruncatedMomentOracle:
    def test_matches_exact_ts_at_half_order(self):
        # at |lam| = 1/2 the intensity is exactly tempered stable, a closed form
        p = GigParams(-0.5, 1.3, 0.4)
        C = 1.3 / math.sqrt(2.0 * math.pi)
        for eps in (1e-3, 0.1, 1.0):
            mu, var = family_residual_moments("tempered_stable", C, 0.5, 0.08, eps)
            assert gig_truncated_moment(p, eps, 1) == pytest.approx(mu, rel=1e-8)
            assert gig_truncated_moment(p, eps, 2) == pytest.approx(var, rel=1e-8)

    def test_positive_lam_adds_gamma_term(self):
        p = GigParams(1.5, 1.0, 1.0)
        pneg = GigParams(-1.5, 1.0, 1.0)
        eps = 0.2
        bessel_part = gig_truncated_moment(pneg, eps, 1)
        gamma_part = family_residual_moments("gamma", 1.5, None, 0.5, eps)[0]
        assert gig_truncated_moment(p, eps, 1) == pytest.approx(bessel_part + gamma_part, rel=1e-8)
