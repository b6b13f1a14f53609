import numpy as np
import pytest
from scipy import integrate, special, stats

from fsvar.errors import ParameterError
from fsvar.shrinkage import (GigParams, delta_conditional, gig_log_density, gig_rvs,
                             lambda_sq_conditional, sample_gig, sample_global_scales,
                             sample_lambda_sq, sample_tau, sample_tau_prior)

from oracles import gig_cdf, gig_mean_var, gig_raw_moment, ks_against_cdf


class TestOracleSelfCheck:
    """The quadrature oracle itself against closed forms."""

    @pytest.mark.parametrize("p,a,b", [(0.1, 1.2, 0.6), (2.0, 0.5, 2.0), (-0.5, 1.2, 0.6)])
    def test_bessel_ratio(self, p, a, b):
        w = np.sqrt(a * b)
        ref = np.sqrt(b / a) * special.kv(p + 1, w) / special.kv(p, w)
        assert gig_raw_moment(1, p, a, b) == pytest.approx(ref, rel=1e-9)

    def test_gamma_limit(self):
        mean, var = gig_mean_var(0.1, 3.0, 0.0)
        assert mean == pytest.approx(0.1 / 1.5, rel=1e-6)
        assert var == pytest.approx(0.1 / 1.5**2, rel=1e-6)

    def test_cdf_gamma_limit(self):
        x = np.geomspace(1e-6, 10, 50)
        np.testing.assert_allclose(gig_cdf(x, 2.0, 3.0, 0.0), stats.gamma(2.0, scale=2 / 3).cdf(x), atol=1e-7)


class TestGigValidation:
    @pytest.mark.parametrize("p,a,b", [(0.5, 0, 0), (-0.5, 1, 0), (0.5, 0, 1), (0, 0, 1),
                                       (0.1, -1, 1), (np.nan, 1, 1), (1, np.inf, 1)])
    def test_rejects_invalid_corners(self, p, a, b, rng):
        with pytest.raises(ParameterError):
            gig_rvs(p, a, b, rng)

    def test_params_dataclass(self, rng):
        with pytest.raises(ParameterError):
            GigParams(-1.0, 0.0, 1.0)
        assert sample_gig(GigParams(1.0, 1.0, 1.0), rng) > 0

    def test_broadcasting(self, rng):
        x = gig_rvs(np.array([0.5, 2.0])[:, None], 1.0, np.array([0.0, 1.0, 2.0]), rng)
        assert x.shape == (2, 3) and np.all(x > 0)
        assert gig_rvs(1.0, 2.0, 3.0, rng, size=(4, 5)).shape == (4, 5)

    def test_log_density(self):
        assert gig_log_density(2.0, 1.5, 1.0, 2.0) == pytest.approx(0.5 * np.log(2) - 0.5 * (2 + 1))


class TestGigDistribution:
    def test_inverse_gaussian_mean(self, rng):
        a, b = 1.7, 0.4
        x = gig_rvs(-0.5, a, b, rng, size=10**6)
        se = x.std() / 1e3
        assert abs(x.mean() - np.sqrt(b / a)) < 3 * se

    def test_gamma_corner(self, rng):
        x = gig_rvs(2.0, 3.0, 0.0, rng, size=10**6)
        assert abs(x.mean() - 4 / 3) < 3 * x.std() / 1e3

    def test_quadrature_moments(self, rng):
        mean, var = gig_mean_var(0.1, 1.2, 0.6)
        x = gig_rvs(0.1, 1.2, 0.6, rng, size=10**6)
        assert x.mean() == pytest.approx(mean, rel=0.01)
        assert x.var() == pytest.approx(var, rel=0.01)

    @pytest.mark.parametrize("p,a,b", [
        (3.0, 0.5, 0.5),     # mode-shifted ratio of uniforms
        (0.5, 0.5, 0.5),     # ratio of uniforms without shift
        (0.2, 0.1, 0.1),     # three-piece hat (non log-concave region)
        (-2.5, 0.05, 0.05),  # negative order via reciprocal, three-piece branch
        (-0.8, 4.0, 1.0),
    ])
    def test_ks_each_generator_branch(self, p, a, b, rng):
        x = np.sort(gig_rvs(p, a, b, rng, size=200_000))
        assert np.all(x > 0)
        d = ks_against_cdf(x, gig_cdf(x, p, a, b))
        assert stats.kstwo.sf(d, x.size) > 0.01


class TestGigExtremes:
    @pytest.mark.parametrize("p,a,b", [(249.5, 1.0, 1e-300), (-249.5, 1.0, 1e-300), (3.0, 1e-150, 1e-150),
                                       (0.0 + 1e-12, 1e-100, 1e-100), (1.5, 1e-150, 1e-150),
                                       (500.0, 1e3, 1e3), (0.05, 1e-200, 1e-200)])
    def test_terminates_finite(self, p, a, b, rng):
        x = gig_rvs(p, a, b, rng, size=2000)
        assert np.all(np.isfinite(x)) and np.all(x > 0)

    def test_vanishing_chi_matches_gamma(self, rng):
        x = gig_rvs(3.0, 2.0, 1e-14, rng, size=100_000)
        assert stats.kstest(x, stats.gamma(3.0, scale=1.0).cdf).pvalue > 0.01


def _tau_posterior_moment(k, beta, kappa, lam2):
    # integrate N(beta; 0, tau) Gamma(tau; kappa, kappa lam2 / 2) over u = log tau
    def log_dens(u):
        t = np.exp(u)
        return (stats.norm.logpdf(beta, scale=np.sqrt(t))
                + stats.gamma.logpdf(t, kappa, scale=2 / (kappa * lam2)) + u)
    u = np.linspace(-60, 12, 200_001)
    ld = log_dens(u)
    w = np.exp(ld - ld.max())
    return integrate.simpson(np.exp(k * u) * w, x=u) / integrate.simpson(w, x=u)


class TestLocalScales:
    def test_zero_beta_is_gamma(self, rng):
        lam2 = 2.5
        x = sample_tau(np.zeros(200_000), 0.6, lam2, rng)
        assert stats.kstest(x, stats.gamma(0.1, scale=1 / (0.3 * lam2)).cdf).pvalue > 0.01
        assert x.mean() == pytest.approx(1 / (3 * lam2), rel=0.02)

    def test_unit_beta_against_hierarchy_quadrature(self, rng):
        ref = _tau_posterior_moment(1, 1.0, 0.6, 1.0)
        x = sample_tau(np.ones(10**6), 0.6, 1.0, rng)
        assert x.mean() == pytest.approx(ref, rel=0.01)

    def test_large_beta_growth(self, rng):
        kappa, lam2 = 0.6, 1.0
        means = []
        for beta in (1.0, 5.0, 25.0):
            x = sample_tau(np.full(100_000, beta), kappa, lam2, rng)
            ref = _tau_posterior_moment(1, beta, kappa, lam2)
            assert x.mean() == pytest.approx(ref, rel=0.02)
            means.append(x.mean())
        assert means[0] < means[1] < means[2]
        # posterior concentrates around |beta| / sqrt(kappa lambda^2)
        assert np.median(x) == pytest.approx(25 / np.sqrt(kappa * lam2), rel=0.1)

    def test_underflow_guards(self, rng):
        tiny = np.full(1000, 1e-200)
        for kappa in (0.6, 0.3):
            x = sample_tau(tiny, kappa, 1.0, rng)
            assert np.all(np.isfinite(x)) and np.all(x > 0)

    def test_rejects_bad_scales(self, rng):
        with pytest.raises(ParameterError):
            sample_tau(1.0, 0.0, 1.0, rng)

    def test_prior_variance_identity(self, rng):
        lam2, kappa = 7.0, 0.6
        tau = sample_tau_prior(kappa, lam2, rng, size=4_000_000)
        beta = np.sqrt(tau) * rng.standard_normal(tau.size)
        assert beta.var() == pytest.approx(2 / lam2, rel=0.01)


class TestGlobalScales:
    def test_worked_example(self):
        shape, rate = lambda_sq_conditional(1, [0.5, 0.5, 0.5, 0.5], (3.0, 0.03), 0.6)
        assert (shape, rate) == pytest.approx((5.4, 0.63))
        assert shape / rate == pytest.approx(8.571428571, rel=1e-9)

    def test_prior_dominated_limit(self):
        shape, rate = lambda_sq_conditional(1, np.full(4, 1e-300), (3.0, 0.03), 0.6)
        assert (shape, rate) == pytest.approx((5.4, 0.03))

    def test_second_lag_expression(self):
        taus = np.array([0.2, 0.7, 1.1, 0.05])
        lower = [4.0]
        shape, rate = lambda_sq_conditional(2, taus, (2.0, 0.5), 0.15, lower)
        assert shape == pytest.approx(2.0 + 0.15 * 4)
        assert rate == pytest.approx(0.5 + 0.15 * 4.0 * taus.sum() / 2)

    def test_sample_lambda_sq_scales_by_lower(self, rng):
        draws = [sample_lambda_sq(2, [1.0, 2.0], (3.0, 1.0), 0.5, [3.0], rng) for _ in range(20_000)]
        shape, rate = lambda_sq_conditional(2, [1.0, 2.0], (3.0, 1.0), 0.5, [3.0])
        assert np.mean(draws) == pytest.approx(3.0 * shape / rate, rel=0.02)

    def test_delta_conditional_by_quadrature(self, rng):
        P, m = 3, 2
        kappa = 0.6 / np.arange(1, P + 1) ** 2
        prior = np.array([[3.0, 0.03], [2.0, 0.5], [4.0, 1.0]])
        delta = np.array([5.0, 0.7, 1.3])
        counts = np.array([4, 4, 4])
        taus = [rng.gamma(1.0, 0.3, size=m * m) for _ in range(P)]
        tau_sums = np.array([t.sum() for t in taus])
        for p in range(1, P + 1):
            def log_joint(x):
                # full joint of (delta, tau) as a function of delta_p on a grid
                x = np.asarray(x)[:, None]
                d = np.broadcast_to(delta, (x.shape[0], P)).copy()
                d[:, p - 1] = x[:, 0]
                lam = np.cumprod(d, axis=1)
                out = stats.gamma.logpdf(x[:, 0], prior[p - 1, 0], scale=1 / prior[p - 1, 1])
                for lag in range(P):
                    scale = 2 / (kappa[lag] * lam[:, lag:lag + 1])
                    out = out + stats.gamma.logpdf(taus[lag][None, :], kappa[lag], scale=scale).sum(axis=1)
                return out
            coarse = np.linspace(1e-6, 80, 4001)
            lj = log_joint(coarse)
            # coarse pass to locate the mass, then a fine integral on that range
            keep = coarse[np.exp(lj - lj.max()) > 1e-14]
            xs = np.linspace(max(keep.min() * 0.5, 1e-8), keep.max() * 1.5, 20_001)
            ljs = log_joint(xs)
            dens = np.exp(ljs - ljs.max())
            z = integrate.simpson(dens, x=xs)
            mean = integrate.simpson(xs * dens, x=xs) / z
            var = integrate.simpson(xs**2 * dens, x=xs) / z - mean**2
            shape, rate = delta_conditional(p, tau_sums, counts, kappa, prior, delta)
            assert shape / rate == pytest.approx(mean, rel=1e-6)
            assert shape / rate**2 == pytest.approx(var, rel=1e-5)

    def test_delta_conditional_matches_single_lag_form_at_top_lag(self):
        kappa = np.array([0.6, 0.15])
        prior = np.array([[3.0, 0.03], [3.0, 0.03]])
        delta = np.array([40.0, 2.0])
        tau_sums, counts = np.array([1.5, 0.4]), np.array([9, 9])
        top = delta_conditional(2, tau_sums, counts, kappa, prior, delta)
        single = lambda_sq_conditional(2, np.full(9, 0.4 / 9), (3.0, 0.03), 0.15, [40.0])
        assert top == pytest.approx(single)
        one = delta_conditional(1, tau_sums[:1], counts[:1], kappa[:1], prior[:1], delta[:1])
        assert one == pytest.approx(lambda_sq_conditional(1, np.full(9, 1.5 / 9), (3.0, 0.03), 0.6))

    def test_sample_global_scales_distribution(self, rng):
        kappa = np.array([0.6])
        prior = np.array([[3.0, 0.03]])
        tau = np.full((3, 3), 0.2)
        groups = np.zeros(3, dtype=int)
        draws = np.array([sample_global_scales(tau, groups, kappa, prior, [1.0], rng)[0] for _ in range(20_000)])
        shape, rate = 3 + 0.6 * 9, 0.03 + 0.6 * 1.8 / 2
        assert stats.kstest(draws, stats.gamma(shape, scale=1 / rate).cdf).pvalue > 0.01
        halved = np.array([sample_global_scales(tau, groups, kappa, prior, [1.0], rng, rate_scale=0.5)[0]
                           for _ in range(2000)])
        assert halved.mean() == pytest.approx(2 * shape / rate, rel=0.05)
