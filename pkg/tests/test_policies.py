import numpy as np
import pytest

import lqshield as lq

from conftest import random_stabilizable


@pytest.fixture(scope="module")
def syn3():
    rng = np.random.default_rng(13)
    return lq.synthesize(random_stabilizable(rng, 3))


class TestLqrPolicy:
    def test_zero_maps_to_zero(self, syn3):
        assert np.allclose(lq.lqr_policy(syn3).act(0, np.zeros(3)), 0.0)

    def test_scalar_gain(self, scalar_syn):
        u = lq.lqr_policy(scalar_syn).act(0, np.array([1.0]))
        assert u[0] == pytest.approx(-0.6180339887, abs=1e-9)

    def test_zero_gain(self):
        pol = lq.gain_policy(np.zeros((2, 3)))
        assert np.allclose(pol.act(0, np.ones(3)), 0.0)


class TestAuxiliaryOptimal:
    def test_no_disturbance_equals_lqr(self, syn3):
        aux = lq.auxiliary_optimal_policy(syn3, [np.zeros(3)] * 10)
        lqr = lq.lqr_policy(syn3)
        rng = np.random.default_rng(0)
        for t in (0, 3, 9, 15):
            x = rng.standard_normal(3)
            assert np.allclose(aux.act(t, x), lqr.act(t, x), atol=1e-12)

    def test_single_remaining_disturbance(self, syn3):
        rng = np.random.default_rng(1)
        w = rng.standard_normal(3)
        aux = lq.auxiliary_optimal_policy(syn3, [w])
        x = rng.standard_normal(3)
        B, P, H, A = syn3.model.B, syn3.P, syn3.H, syn3.model.A
        expected = -np.linalg.solve(H, B.T @ (P @ A @ x + P @ w))
        assert np.allclose(aux.act(0, x), expected, atol=1e-12)

    def test_beats_lqr_under_disturbance(self, scalar_model, scalar_syn):
        w = [np.array([1.0])] + [np.zeros(1)] * 9
        resid = lq.disturbance_residual(w)
        aux = lq.auxiliary_optimal_policy(scalar_syn, w)
        c_aux = lq.simulate(scalar_model, resid, aux, [0.5], 300).total_cost
        c_lqr = lq.simulate(scalar_model, resid, lq.lqr_policy(scalar_syn), [0.5], 300).total_cost
        assert c_aux <= c_lqr

    def test_optimal_against_dp_oracle(self, bench2_model, bench2_syn):
        """Exact finite-horizon dynamic programming with terminal value
        x'Px reproduces both the policy's actions and its cost."""
        rng = np.random.default_rng(5)
        T = 12
        w = [0.4 * rng.standard_normal(2) for _ in range(T)]
        x0 = rng.standard_normal(2)
        syn = bench2_syn
        A, B, Q, R, P, H = (
            bench2_model.A,
            bench2_model.B,
            bench2_model.Q,
            bench2_model.R,
            syn.P,
            syn.H,
        )
        # backward affine value recursion V_t(x) = x'Px + p_t'x + q_t
        p = np.zeros((T + 1, 2))
        q = np.zeros(T + 1)
        for t in range(T - 1, -1, -1):
            c = P @ w[t] + p[t + 1] / 2.0
            p[t] = 2.0 * (A - B @ np.linalg.solve(H, B.T @ P @ A)).T @ c
            q[t] = (
                q[t + 1]
                + w[t] @ P @ w[t]
                + p[t + 1] @ w[t]
                - c @ B @ np.linalg.solve(H, B.T @ c)
            )
        dp_cost = float(x0 @ P @ x0 + p[0] @ x0 + q[0])
        opt = lq.opt_cost_time_only(syn, w, x0)
        assert opt == pytest.approx(dp_cost, rel=1e-9)
        # the policy's action matches the DP minimizer at t = 0
        aux = lq.auxiliary_optimal_policy(syn, w)
        u_dp = -np.linalg.solve(H, B.T @ (P @ (A @ x0) + P @ w[0] + p[1] / 2.0))
        assert np.allclose(aux.act(0, x0), u_dp, atol=1e-10)


class TestParameterizedBlackbox:
    def test_zero_estimates_equal_lqr(self, syn3):
        bb = lq.parameterized_blackbox(syn3, [np.zeros(3)] * 5)
        lqr = lq.lqr_policy(syn3)
        rng = np.random.default_rng(2)
        for _ in range(1000):
            x = rng.standard_normal(3)
            assert np.max(np.abs(bb.act(0, x) - lqr.act(0, x))) < 1e-12

    def test_matches_auxiliary_for_true_disturbances(self, syn3):
        rng = np.random.default_rng(3)
        w = [rng.standard_normal(3) for _ in range(6)]
        bb = lq.parameterized_blackbox(syn3, w)
        aux = lq.auxiliary_optimal_policy(syn3, w)
        for t in range(8):
            x = rng.standard_normal(3)
            assert np.allclose(bb.act(t, x), aux.act(t, x), atol=1e-12)

    def test_feedforward_scales_linearly(self, syn3):
        rng = np.random.default_rng(4)
        w = [rng.standard_normal(3) for _ in range(6)]
        bb1 = lq.parameterized_blackbox(syn3, w)
        bb2 = lq.parameterized_blackbox(syn3, [2 * v for v in w])
        K = syn3.K
        for t in range(6):
            x = rng.standard_normal(3)
            off1 = bb1.act(t, x) + K @ x
            off2 = bb2.act(t, x) + K @ x
            assert np.allclose(off2, 2 * off1, atol=1e-12)


class TestNaiveConvex:
    def test_endpoints(self, syn3):
        rng = np.random.default_rng(5)
        black = lq.gain_policy(rng.standard_normal((3, 3)), "black")
        advice = lq.lqr_policy(syn3)
        x = rng.standard_normal(3)
        assert np.allclose(
            lq.naive_convex_policy(black, advice, 0.0).act(0, x), advice.act(0, x)
        )
        assert np.allclose(
            lq.naive_convex_policy(black, advice, 1.0).act(0, x), black.act(0, x)
        )

    def test_midpoint_of_gains(self):
        rng = np.random.default_rng(6)
        K1, K2 = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
        mix = lq.naive_convex_policy(lq.gain_policy(K2), lq.gain_policy(K1), 0.5)
        x = rng.standard_normal(3)
        assert np.allclose(mix.act(0, x), -0.5 * (K1 + K2) @ x, atol=1e-14)

    def test_affine_in_lambda(self, syn3):
        rng = np.random.default_rng(7)
        black = lq.gain_policy(rng.standard_normal((3, 3)), "black")
        advice = lq.lqr_policy(syn3)
        x = rng.standard_normal(3)
        u0 = advice.act(0, x)
        u1 = black.act(0, x)
        for lam in (0.2, 0.5, 0.77):
            mixed = lq.naive_convex_policy(black, advice, lam).act(0, x)
            assert np.allclose(mixed, lam * u1 + (1 - lam) * u0, atol=0)

    def test_rejects_bad_lambda(self, syn3):
        with pytest.raises(ValueError):
            lq.naive_convex_policy(lq.lqr_policy(syn3), lq.lqr_policy(syn3), 1.5)


class TestEpsilonConsistent:
    def test_zero_epsilon_is_identity(self, syn3):
        base = lq.lqr_policy(syn3)
        bb = lq.epsilon_consistent_blackbox(base, 0.0, "rotation", 0)
        rng = np.random.default_rng(8)
        x = rng.standard_normal(3)
        assert np.array_equal(bb.act(0, x), base.act(0, x))

    @pytest.mark.parametrize("mode", ["rotation", "scaling", "offset_gain"])
    def test_error_bound_by_construction(self, syn3, mode):
        base = lq.lqr_policy(syn3)
        bb = lq.epsilon_consistent_blackbox(base, 0.1, mode, 3)
        rng = np.random.default_rng(9)
        for _ in range(10_000):
            x = rng.standard_normal(3) * rng.uniform(0.01, 10)
            err = np.linalg.norm(bb.act(0, x) - base.act(0, x))
            assert err <= 0.1 * np.linalg.norm(x) * (1 + 1e-12)

    def test_preserves_zero(self, syn3):
        bb = lq.epsilon_consistent_blackbox(lq.lqr_policy(syn3), 0.3, "rotation", 1)
        assert np.allclose(bb.act(0, np.zeros(3)), 0.0)

    def test_deterministic_function_of_state(self, syn3):
        bb = lq.epsilon_consistent_blackbox(lq.lqr_policy(syn3), 0.2, "rotation", 5)
        x = np.array([0.3, -1.2, 0.7])
        assert np.array_equal(bb.act(0, x), bb.act(0, x.copy()))

    def test_measured_epsilon_within_declared(self, syn3):
        base = lq.lqr_policy(syn3)
        bb = lq.epsilon_consistent_blackbox(base, 0.2, "rotation", 11)
        rep = lq.measure_epsilon(bb, base, lq.gaussian_state_sampler(3), 2000, 17)
        assert rep.epsilon_hat <= 0.2 * (1 + 1e-9)
        assert rep.epsilon_hat > 0.19  # rotation mode is tight


class TestMeasureEpsilon:
    def test_identical_policies(self, syn3):
        pol = lq.lqr_policy(syn3)
        rep = lq.measure_epsilon(pol, pol, lq.gaussian_state_sampler(3), 100, 0)
        assert rep.epsilon_hat == 0.0

    def test_gain_offset_svd_tight(self, syn3):
        rng = np.random.default_rng(12)
        D = rng.standard_normal((syn3.m, 3))
        D *= 0.05 / np.linalg.norm(D, 2)
        perturbed = lq.gain_policy(syn3.K + D, "offset")
        base = lq.lqr_policy(syn3)
        # sampling along the top right-singular direction attains the bound
        _, _, Vt = np.linalg.svd(D)
        top = Vt[0]

        def sampler(rng_):
            if rng_.uniform() < 0.2:
                return top * rng_.uniform(0.5, 2.0)
            return rng_.standard_normal(3)

        rep = lq.measure_epsilon(perturbed, base, sampler, 500, 3)
        assert rep.epsilon_hat <= 0.05 * (1 + 1e-9)
        assert rep.epsilon_hat == pytest.approx(0.05, rel=1e-6)


class TestWrappers:
    def test_saturated_clamps(self, syn3):
        pol = lq.saturated(lq.gain_policy(10 * np.eye(3)), 2.0)
        u = pol.act(0, np.ones(3))
        assert np.max(np.abs(u)) <= 2.0

    def test_nonnegative_projects(self):
        pol = lq.nonnegative(lq.Policy(act=lambda t, x: np.array([-1.0, 2.0])))
        assert np.allclose(pol.act(0, np.zeros(2)), [0.0, 2.0])
