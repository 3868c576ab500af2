import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drboost.boosting import (
    BoostConfig,
    _z_from_uniform,
    boost_constants,
    boost_grad,
    boost_grad_draws,
    boost_scale,
    grad_F_ref,
    sample_z,
    value_F_ref,
)
from drboost.bench.verify import check_unbiasedness
from drboost.exceptions import ArgumentError
from drboost.feasible import Polytope
from drboost.numerics import RngStream
from drboost.objectives import ObjectiveMeta, SpecialCaseObjective, qp_generate

seeds = st.integers(0, 2**32 - 1)
gammas = st.floats(0.05, 1.0)

E1 = math.exp(-1.0)


def qp_moments(gamma):
    """I0 = int e^{g(z-1)} dz and I1 = int z e^{g(z-1)} dz over [0, 1]."""
    i0 = (1.0 - math.exp(-gamma)) / gamma
    i1 = 1.0 / gamma - i0 / gamma
    return i0, i1


def qp_grad_F(p, x, gamma):
    # grad f(z x) = z H x + h is affine in z
    i0, i1 = qp_moments(gamma)
    return i1 * (p.H @ x) + i0 * p.h


def qp_value_F(p, x, gamma):
    # f(z x) / z = z x'Hx / 2 + h'x
    i0, i1 = qp_moments(gamma)
    return 0.5 * i1 * (x @ p.H @ x) + i0 * (p.h @ x)


def z_by_bisection(gamma, p):
    cdf = lambda z: (math.exp(gamma * (z - 1)) - math.exp(-gamma)) / (1 - math.exp(-gamma))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if cdf(mid) < p else (lo, mid)
    return 0.5 * (lo + hi)


class TestSampler:
    def test_median_at_gamma_one(self):
        assert _z_from_uniform(1.0, 0.5) == pytest.approx(0.6201145069582775, abs=1e-14)
        assert _z_from_uniform(1.0, 0.5) == pytest.approx(z_by_bisection(1.0, 0.5), abs=1e-12)

    def test_endpoints(self):
        for g in (1e-3, 0.5, 1.0):
            assert _z_from_uniform(g, 0.0) == pytest.approx(0.0, abs=1e-12)
            assert _z_from_uniform(g, 1.0 - 1e-16) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_limit(self):
        assert _z_from_uniform(1e-9, 0.37) == 0.37

    @given(gammas, st.floats(0.0, 1.0, exclude_max=True))
    def test_inverse_cdf(self, gamma, p):
        assert _z_from_uniform(gamma, p) == pytest.approx(z_by_bisection(gamma, p), abs=1e-10)

    def test_ks_statistic(self):
        rng = RngStream(0)
        z = np.sort([sample_z(1.0, rng) for _ in range(200_000)])
        cdf = (np.exp(z - 1.0) - E1) / (1.0 - E1)
        i = np.arange(1, z.size + 1)
        ks = max(np.max(i / z.size - cdf), np.max(cdf - (i - 1) / z.size))
        assert ks < 0.004

    def test_bad_gamma(self):
        with pytest.raises(ArgumentError):
            sample_z(1.5, RngStream(0))
        with pytest.raises(ArgumentError):
            sample_z(0.0, RngStream(0))


class TestReferences:
    def test_grad_F_fixture(self, fixture_qp):
        np.testing.assert_allclose(grad_F_ref(fixture_qp, np.ones(2), 1.0), 1.0 - 2.0 * E1, atol=1e-10)

    def test_value_F_fixture(self, fixture_qp):
        assert value_F_ref(fixture_qp, np.ones(2), 1.0) == pytest.approx(2.0 - 3.0 * E1, abs=1e-10)

    def test_origin(self, fixture_qp):
        np.testing.assert_allclose(grad_F_ref(fixture_qp, np.zeros(2), 0.7), boost_scale(0.7) * np.ones(2))
        assert value_F_ref(fixture_qp, np.zeros(2), 0.7) == 0.0

    @given(seeds, gammas)
    def test_quadratic_closed_forms(self, seed, gamma):
        p = qp_generate(6, 2, seed % 500, 0.0)
        x = np.random.default_rng(seed).uniform(0, 1, 6)
        np.testing.assert_allclose(grad_F_ref(p, x, gamma), qp_grad_F(p, x, gamma), atol=1e-12)
        assert value_F_ref(p, x, gamma) == pytest.approx(qp_value_F(p, x, gamma), abs=1e-12)

    @given(seeds)
    def test_grad_is_gradient_of_value(self, seed):
        obj = SpecialCaseObjective(2, 0.0)
        x = np.random.default_rng(seed).uniform(0.05, 0.95, 5)
        h = 1e-6
        fd = np.array([
            (value_F_ref(obj, x + h * e, 1.0) - value_F_ref(obj, x - h * e, 1.0)) / (2 * h) for e in np.eye(5)
        ])
        np.testing.assert_allclose(grad_F_ref(obj, x, 1.0), fd, atol=1e-6)


class TestEstimator:
    def test_unbiased_on_fixture(self, fixture_qp_exact):
        draws = boost_grad_draws(fixture_qp_exact, np.ones(2), 1.0, 100_000, RngStream(0))
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - (1.0 - 2.0 * E1)) <= 4 * se)

    def test_origin_draws_constant(self, fixture_qp_exact):
        draws = boost_grad_draws(fixture_qp_exact, np.zeros(2), 1.0, 50, RngStream(0))
        np.testing.assert_allclose(draws, boost_scale(1.0) * np.ones((50, 2)))

    def test_batch_replays_single_calls(self, fixture_qp):
        x = np.array([0.3, 0.8])
        batch = boost_grad(fixture_qp, x, BoostConfig(batch=4), RngStream(5))
        rng = RngStream(5)
        singles = [boost_grad(fixture_qp, x, BoostConfig(batch=1), rng) for _ in range(4)]
        np.testing.assert_allclose(batch, np.mean(singles, axis=0), atol=1e-15)

    def test_draw_order_z_then_noise(self, fixture_qp):
        x = np.array([0.6, 0.4])
        got = boost_grad_draws(fixture_qp, x, 1.0, 1, RngStream(8))[0]
        rng = RngStream(8)
        z = _z_from_uniform(1.0, rng.uniform01())
        expected = boost_scale(1.0) * (fixture_qp.grad(z * x) + rng.gaussian(2))
        np.testing.assert_allclose(got, expected, atol=1e-15)

    @pytest.mark.parametrize("family", ["fixture", "special_case"])
    def test_unbiased_at_random_points(self, family):
        if family == "fixture":
            from drboost.objectives import QuadraticObjective

            obj = QuadraticObjective(-np.eye(2), noise_delta=1.0)
        else:
            obj = SpecialCaseObjective(3, 1.0)
        rng = np.random.default_rng(3)
        for i in range(10):
            x = rng.uniform(0, 1, obj.meta.n)
            draws = boost_grad_draws(obj, x, 1.0, 100_000, RngStream(i))
            se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
            assert np.all(np.abs(draws.mean(axis=0) - grad_F_ref(obj, x, 1.0)) <= 4 * se)

    def test_variance_bound(self):
        p = qp_generate(25, 12, 0, noise_delta=5.0)
        k = boost_constants(p.meta)
        rng = np.random.default_rng(0)
        for i in range(5):
            x = rng.uniform(0, 1, 25)
            draws = boost_grad_draws(p, x, 1.0, 4000, RngStream(i))
            var = np.sum(draws.var(axis=0, ddof=1))
            assert var <= 1.1 * k.sigma_gamma_sq

    def test_flipped_scale_is_caught(self):
        def flipped(obj, x, gamma, num, rng):
            return -boost_grad_draws(obj, x, gamma, num, rng)

        assert check_unbiasedness(draws=20_000).passed
        assert not check_unbiasedness(draws=20_000, estimator=flipped).passed


class TestConstants:
    def test_L_gamma(self):
        k = boost_constants(ObjectiveMeta(n=1, a=np.ones(1), L=1.0))
        assert k.L_gamma == pytest.approx(E1, abs=1e-15)

    def test_sigma_gamma(self):
        k = boost_constants(ObjectiveMeta(n=1, a=np.ones(1), L=0.0, sigma=1.0))
        assert k.sigma_gamma_sq == pytest.approx(0.7991528017874561, abs=1e-15)
        assert k.sigma_gamma_sq == pytest.approx(2 * (1 - E1) ** 2, abs=1e-15)

    def test_tau(self):
        assert boost_constants(ObjectiveMeta(n=25, a=np.ones(25), L=1.0), c=1.0).tau == pytest.approx(25.0)
        assert boost_constants(ObjectiveMeta(n=1, a=np.ones(1), L=0.01, gamma=0.5)).tau == pytest.approx(2.0)

    def test_scale(self):
        assert boost_scale(1.0) == pytest.approx(1 - E1)

    @given(st.floats(1e-7, 1.0), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
    def test_closed_forms(self, gamma, L, sigma):
        meta = ObjectiveMeta(n=4, a=np.ones(4), L=L, gamma=gamma, sigma=sigma)
        k = boost_constants(meta)
        with mpmath.workdps(50):
            g = mpmath.mpf(gamma)
            lg = L * (g + mpmath.exp(-g) - 1) / g**2
            s2 = 2 * (1 - mpmath.exp(-g)) ** 2 * sigma**2 / g**2 + 2 * L**2 * 4 * (1 - mpmath.exp(-2 * g)) / (3 * g)
        # below gamma = 1e-4 the two-term series is accurate to O(gamma^2)
        assert k.L_gamma == pytest.approx(float(lg), rel=1e-8, abs=1e-14)
        assert k.sigma_gamma_sq == pytest.approx(float(s2), rel=1e-8, abs=1e-14)
        assert k.tau == pytest.approx(max(1 / gamma, L * 4))

    def test_series_branch_continuous(self):
        meta = lambda g: ObjectiveMeta(n=1, a=np.ones(1), L=1.0, gamma=g, sigma=1.0)
        below, above = boost_constants(meta(1e-4 * (1 - 1e-9))), boost_constants(meta(1e-4 * (1 + 1e-9)))
        assert below.L_gamma == pytest.approx(above.L_gamma, rel=1e-7)
        assert below.sigma_gamma_sq == pytest.approx(above.sigma_gamma_sq, rel=1e-7)
        assert boost_constants(meta(1e-9)).L_gamma == pytest.approx(0.5, rel=1e-8)

    def test_config_validation(self):
        with pytest.raises(ArgumentError):
            BoostConfig(batch=0)
        with pytest.raises(ArgumentError):
            BoostConfig(c=0.0)
        with pytest.raises(ArgumentError):
            BoostConfig(gamma=2.0)


class TestSurrogateInequalities:
    @given(seeds)
    def test_key_inequality_qp(self, seed):
        p = qp_generate(10, 4, 0, 0.0)
        fset = Polytope.from_problem(p)
        x, y = fset.sample(seed), fset.sample(seed + 1)
        lhs = (y - x) @ grad_F_ref(p, x, 1.0)
        assert lhs >= (1 - E1) * p.value(y) - p.value(x) - 1e-6

    @given(seeds)
    def test_key_inequality_special_case(self, seed):
        obj = SpecialCaseObjective(5, 0.0)
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(0, 1, (2, 11))
        lhs = (y - x) @ grad_F_ref(obj, x, 1.0)
        assert lhs >= (1 - E1) * obj.value(y) - obj.value(x) - 1e-6

    @given(seeds, gammas)
    def test_smoothness(self, seed, gamma):
        p = qp_generate(10, 4, 0, 0.0)
        meta = ObjectiveMeta(n=10, a=p.u, L=p.meta.L, gamma=gamma)
        Lg = boost_constants(meta).L_gamma
        x, y = np.random.default_rng(seed).uniform(0, 1, (2, 10))
        diff = np.linalg.norm(grad_F_ref(p, x, gamma) - grad_F_ref(p, y, gamma))
        assert diff <= Lg * np.linalg.norm(x - y) * (1 + 1e-6)

    @given(seeds)
    def test_boundedness(self, seed):
        p = qp_generate(25, 12, 0, 5.0)
        tau = boost_constants(p.meta, c=1.0).tau
        x = np.random.default_rng(seed).uniform(0, 1, 25)
        assert value_F_ref(p, x, 1.0) <= (1 + math.log(tau)) * (p.value(x) + 1.0)
