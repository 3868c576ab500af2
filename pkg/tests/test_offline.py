import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from drboost.boosting import boost_constants
from drboost.estimators import (
    BoostingFrankWolfe,
    BoostingGradientAscent,
    ContinuousGreedy,
    GradientAscent,
    StochasticContinuousGreedy,
)
from drboost.exceptions import ArgumentError, ConvergenceError
from drboost.feasible import Box, Cardinality, Polytope
from drboost.numerics import RngStream
from drboost.objectives import FunctionObjective, ObjectiveMeta, QuadraticObjective, SpecialCaseObjective, qp_generate
from drboost.offline import (
    OfflineConfig,
    bfw_rho,
    bga_steps,
    run_bfw,
    run_bga,
    run_cg,
    run_ga,
    run_scg,
    scg_rho,
    select_index,
)

SOLVERS = {"BGA": run_bga, "GA": run_ga, "CG": run_cg, "SCG": run_scg, "BFW": run_bfw}


def concave_1d(noise=0.0):
    """f(x) = x - x^2 / 2 on [0, 1]; maximizer x = 1."""
    return QuadraticObjective(-np.ones((1, 1)), noise_delta=noise)


def linear(w):
    meta = ObjectiveMeta(n=w.shape[0], a=np.ones(w.shape[0]), L=0.0)
    return FunctionObjective(lambda x: float(w @ x), lambda x: w.copy(), meta)


def grid_opt_2d(obj, fset, step=1e-3):
    g = np.arange(0.0, 1.0 + step / 2, step)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    X = X[np.all(X @ fset.A.T <= fset.b + 1e-12, axis=1)]
    H, h = obj.H, obj.h
    return float(np.max(0.5 * np.einsum("ij,jk,ik->i", X, H, X) + X @ h))


class TestSelectIndex:
    def test_point_mass(self):
        rng = RngStream(0)
        assert all(select_index([0.0, 0.0, 1.0], rng) == 3 for _ in range(100))

    def test_fair_coin(self):
        rng = RngStream(1)
        hits = sum(select_index([1.0, 1.0], rng) == 1 for _ in range(100_000))
        assert abs(hits / 1e5 - 0.5) <= 0.005

    def test_boosted_last_weight(self):
        w = np.ones(100)
        w[-1] = 1.0 + math.log(25.0)
        p_last = w[-1] / w.sum()
        assert p_last == pytest.approx(0.04087310379185277, abs=1e-15)
        rng = RngStream(2)
        N = 100_000
        hits = sum(select_index(w, rng) == 100 for _ in range(N))
        assert abs(hits / N - p_last) <= 4 * math.sqrt(p_last * (1 - p_last) / N)

    def test_invalid(self):
        with pytest.raises(ArgumentError):
            select_index([0.0, 0.0], RngStream(0))
        with pytest.raises(ArgumentError):
            select_index([1.0, -1.0], RngStream(0))

    @given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=20), st.integers(0, 1000))
    def test_range(self, w, seed):
        if sum(w) <= 0:
            w = w + [1.0]
        l = select_index(w, RngStream(seed))
        assert 1 <= l <= len(w) and w[l - 1] > 0


class TestBGA:
    def test_concave_fixture_converges(self):
        tr = run_bga(concave_1d(), Box(np.ones(1)), OfflineConfig(T=500), RngStream(0))
        assert abs(tr.iterates[-1, 0] - 1.0) <= 1e-2

    def test_concave_fixture_monotone_values(self):
        tr = run_bga(concave_1d(), Box(np.ones(1)), OfflineConfig(T=200), RngStream(0))
        assert np.all(np.diff(tr.values) >= -1e-12)

    def test_deterministic(self):
        p = qp_generate(10, 5, 0)
        fset = Polytope.from_problem(p)
        a = run_bga(p, fset, OfflineConfig(T=30, batch=2), RngStream(4))
        b = run_bga(p, fset, OfflineConfig(T=30, batch=2), RngStream(4))
        assert a.iterates.tobytes() == b.iterates.tobytes()
        assert a.chosen_index == b.chosen_index

    def test_step_schedule(self):
        p = qp_generate(25, 12, 0)
        fset = Polytope.from_problem(p)
        eta = bga_steps(p, fset, OfflineConfig(T=50))
        k = boost_constants(p.meta)
        assert eta[0] == pytest.approx(1.0 / (k.sigma_gamma / 5.0 + k.L_gamma), rel=1e-14)
        assert np.all(np.diff(eta) < 0)

    def test_eta_override(self):
        p = qp_generate(5, 2, 0)
        assert np.all(bga_steps(p, Box(np.ones(5)), OfflineConfig(T=4, eta_override=0.1)) == 0.1)

    def test_output_distribution(self):
        p = qp_generate(25, 12, 0)
        tr = run_bga(p, Polytope.from_problem(p), OfflineConfig(T=20), RngStream(0))
        tau = max(1.0, p.meta.L * 25.0)
        assert np.all(tr.weights[:-1] == 1.0)
        assert tr.weights[-1] == pytest.approx(1.0 + math.log(tau), rel=1e-14)
        assert np.sum(tr.weights / tr.total_weight) == pytest.approx(1.0, abs=1e-12)
        assert 1 <= tr.chosen_index <= tr.T
        assert np.array_equal(tr.chosen_point, tr.iterates[tr.chosen_index - 1])

    def test_escapes_local_maximum(self):
        k = 5
        obj = SpecialCaseObjective(k, 1.0)
        C = Cardinality(2 * k + 1, k)
        finals = [run_bga(obj, C, OfflineConfig(T=2000, start=obj.x_loc), RngStream(s)).final_value for s in range(5)]
        assert np.median(finals) >= 0.9 * (2 * k + 1)

    def test_projection_failure_carries_iteration(self):
        p = qp_generate(25, 12, 0)
        fset = Polytope(p.A, p.b, p.u, max_sweeps=1, method="dykstra")
        with pytest.raises(ConvergenceError) as info:
            run_bga(p, fset, OfflineConfig(T=50, eta_override=5.0), RngStream(0))
        assert info.value.index is not None and 1 <= info.value.index <= 50


class TestGA:
    def test_stays_at_local_point(self):
        obj = SpecialCaseObjective(5, 0.0)
        tr = run_ga(obj, Cardinality(11, 5), OfflineConfig(T=2000, start=obj.x_loc), RngStream(0))
        assert tr.final_value == pytest.approx(6.0, abs=1e-6)

    def test_concave_fixture(self):
        tr = run_ga(concave_1d(), Box(np.ones(1)), OfflineConfig(T=500), RngStream(0))
        assert abs(tr.chosen_point[0] - 1.0) <= 1e-2

    def test_outputs_final_iterate(self):
        p = qp_generate(6, 3, 0)
        tr = run_ga(p, Polytope.from_problem(p), OfflineConfig(T=10), RngStream(0))
        assert tr.chosen_index == 10
        assert np.array_equal(tr.chosen_point, tr.iterates[-1])
        np.testing.assert_allclose(tr.steps, 1.0 / np.sqrt(np.arange(1, 11)))

    def test_deterministic(self):
        p = qp_generate(6, 3, 0)
        fset = Polytope.from_problem(p)
        a = run_ga(p, fset, OfflineConfig(T=20), RngStream(3))
        b = run_ga(p, fset, OfflineConfig(T=20), RngStream(3))
        assert a.values.tobytes() == b.values.tobytes()


class TestGreedy:
    def test_linear_on_box_reaches_corner(self):
        w = np.array([1.0, 2.0, 0.5])
        u = np.array([1.0, 0.5, 2.0])
        tr = run_cg(linear(w), Box(u), OfflineConfig(T=7))
        np.testing.assert_allclose(tr.iterates[-1], u, atol=1e-12)

    def test_cg_approximation_on_2d_qp(self):
        for seed in range(5):
            p = qp_generate(2, 1, seed, 0.0)
            fset = Polytope.from_problem(p)
            tr = run_cg(p, fset, OfflineConfig(T=100))
            assert tr.final_value >= (1 - math.exp(-1)) * grid_opt_2d(p, fset) - 1e-2

    def test_scg_matches_cg_on_linear(self):
        w = np.array([0.3, 1.0, 0.2, 0.7])
        obj = linear(w)
        fset = Polytope(np.array([[1.0, 1.0, 0.5, 0.2]]), np.ones(1))
        a = run_cg(obj, fset, OfflineConfig(T=12))
        b = run_scg(obj, fset, OfflineConfig(T=12), RngStream(0))
        assert np.array_equal(a.iterates, b.iterates)

    def test_scg_momentum_unrolled(self):
        rho = [scg_rho(t) for t in (1, 2, 3)]
        assert rho[0] == pytest.approx(4 ** (-2 / 3))
        d, coeff = 1.0, 1.0
        for r in rho:
            d = (1 - r) * d
            coeff *= 1 - r
        assert d == pytest.approx((1 - 4 ** (-2 / 3)) * (1 - 5 ** (-2 / 3)) * (1 - 6 ** (-2 / 3)), rel=1e-15)
        assert d == coeff

    def test_cg_deterministic(self):
        p = qp_generate(8, 4, 0)
        fset = Polytope.from_problem(p)
        assert np.array_equal(run_cg(p, fset, OfflineConfig(T=20)).iterates,
                              run_cg(p, fset, OfflineConfig(T=20)).iterates)

    def test_scg_deterministic(self):
        p = qp_generate(8, 4, 0)
        fset = Polytope.from_problem(p)
        a = run_scg(p, fset, OfflineConfig(T=20), RngStream(9))
        b = run_scg(p, fset, OfflineConfig(T=20), RngStream(9))
        assert np.array_equal(a.iterates, b.iterates)

    def test_non_down_closed_set_records_projected_points(self):
        obj = SpecialCaseObjective(3, 0.0)
        C = Cardinality(7, 3)
        tr = run_cg(obj, C, OfflineConfig(T=10))
        for x in tr.iterates:
            assert C.contains(x, 1e-7)
        assert tr.iterates[-1].sum() == pytest.approx(3.0)


class TestBFW:
    def test_step(self):
        p = qp_generate(5, 2, 0)
        tr = run_bfw(p, Polytope.from_problem(p), OfflineConfig(T=16, delta_bfw=1.0), RngStream(0))
        assert np.all(tr.steps == 0.25)
        assert np.all(tr.weights[:-1] == 0.25)
        tau = max(1.0, p.meta.L * 5.0)
        assert tr.weights[-1] == pytest.approx((1 + math.log(tau)) / 0.25)

    def test_rho_cap(self):
        assert 2.0 / 4.0 ** (4.0 / 9.0) == pytest.approx(1.0800597388923063, rel=1e-15)
        assert bfw_rho(1, 0.5) == 1.0
        assert bfw_rho(100, 1.0) == pytest.approx(2.0 / 103 ** (1 / 3))

    def test_v0_start_changes_first_direction(self):
        p = qp_generate(6, 3, 0)
        fset = Polytope.from_problem(p)
        # rho_1 < 1 for small delta, so the initial momentum enters v_1
        assert bfw_rho(1, 0.1) < 1.0
        x1 = fset.sample(1)
        a = run_bfw(p, fset, OfflineConfig(T=5, v0="zero", delta_bfw=0.1, start=x1), RngStream(0))
        b = run_bfw(p, fset, OfflineConfig(T=5, v0="start", delta_bfw=0.1, start=x1), RngStream(0))
        assert np.array_equal(a.iterates[0], b.iterates[0])
        assert not np.array_equal(a.iterates, b.iterates)

    def test_feasible_without_projection(self):
        obj = SpecialCaseObjective(4, 1.0)
        C = Cardinality(9, 4)
        tr = run_bfw(obj, C, OfflineConfig(T=50), RngStream(0))
        assert all(C.contains(x, 1e-9) for x in tr.iterates)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"T": 0}, {"batch": 0}, {"c": 0.0}, {"delta_bfw": 0.0}, {"start": "elsewhere"}, {"v0": "one"},
        {"gamma": 1.5}, {"eta_override": -1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ArgumentError):
            OfflineConfig(**kwargs)

    def test_start_wrong_length(self):
        with pytest.raises(ArgumentError):
            run_ga(concave_1d(), Box(np.ones(1)), OfflineConfig(T=2, start=np.zeros(3)), RngStream(0))


@settings(max_examples=15)
@given(st.sampled_from(sorted(SOLVERS)), st.integers(0, 10_000), st.sampled_from(["polytope", "cardinality"]))
def test_every_iterate_feasible(name, seed, kind):
    if kind == "polytope":
        obj = qp_generate(8, 4, seed % 100)
        fset = Polytope.from_problem(obj)
    else:
        obj = SpecialCaseObjective(3, 1.0)
        fset = Cardinality(7, 3)
    tr = SOLVERS[name](obj, fset, OfflineConfig(T=15, batch=2), RngStream(seed))
    assert tr.iterates.shape == (16, fset.n) and tr.values.shape == (15,)
    for x in tr.iterates:
        assert fset.contains(x, 1e-7)
    np.testing.assert_allclose(tr.values, [obj.value(x) for x in tr.iterates[1:]])


class TestEstimators:
    def test_get_params_and_clone(self):
        est = BoostingGradientAscent(T=20, batch=3, random_state=4)
        params = est.get_params()
        assert params["T"] == 20 and params["batch"] == 3
        twin = clone(est)
        assert twin.get_params() == params

    @pytest.mark.parametrize("cls", [BoostingGradientAscent, GradientAscent, ContinuousGreedy,
                                     StochasticContinuousGreedy, BoostingFrankWolfe])
    def test_fit_matches_functional_core(self, cls):
        p = qp_generate(6, 3, 0)
        fset = Polytope.from_problem(p)
        est = cls(T=15, random_state=2).fit(p, fset)
        runner = {BoostingGradientAscent: run_bga, GradientAscent: run_ga, ContinuousGreedy: run_cg,
                  StochasticContinuousGreedy: run_scg, BoostingFrankWolfe: run_bfw}[cls]
        tr = runner(p, fset, OfflineConfig(T=15), RngStream(2))
        assert np.array_equal(est.solution_, tr.chosen_point)
        assert est.score(p) == pytest.approx(p.value(tr.chosen_point))

    def test_set_params(self):
        est = BoostingFrankWolfe().set_params(delta=2.0, v0="start")
        assert est.delta == 2.0 and est._config().v0 == "start"

    def test_unfitted_score(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            GradientAscent().score(concave_1d())

    def test_dimension_mismatch(self):
        with pytest.raises(ArgumentError):
            GradientAscent().fit(concave_1d(), Box(np.ones(2)))
