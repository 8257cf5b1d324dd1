import numpy as np
import pytest

from armsteer.camera import EstimatorState, TrueParams, project
from armsteer.controller import (
    ControllerConfig,
    HumanIntent,
    adapt_step,
    control_step,
    disable_adaptation,
    lyapunov_value,
    nullspace_term,
    task_term,
)
from armsteer.errors import ConfigurationError
from armsteer.kinematics import jacobian_bundle, pseudo_inverse, null_projector, JacobianBundle
from armsteer.presets import TASK1_START_Q, default_camera, ur5
from armsteer.simulator import EstimatorInit

from conftest import nonsingular_ur5_q


def identity_bundle(n=3):
    J = np.eye(n)
    return JacobianBundle(J=J, J_pinv=np.eye(n), N=np.zeros((n, n)),
                          sigma_min=1.0, damped=False)


def planar_image_estimator():
    # Jhat_s = [I2 | 0] and zhat = 1 regardless of r
    theta_k = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0, 0])
    theta_z = np.array([0.0, 0, 0, 1.0])
    return EstimatorState(theta_z, theta_k)


class TestTaskTerm:
    def test_all_identity_case(self):
        cfg = ControllerConfig(kp=1.0)
        est = planar_image_estimator()
        res = task_term(identity_bundle(), est, x=np.array([1.0, 0.0]),
                        x_d=np.zeros(2), r=np.zeros(3), cfg=cfg)
        assert np.allclose(res.u_T, [-1.0, 0.0, 0.0], atol=1e-12)
        assert res.z_hat == pytest.approx(1.0)

    def test_zero_error(self):
        cfg = ControllerConfig(kp=2.0)
        est = planar_image_estimator()
        x = np.array([321.0, 123.0])
        res = task_term(identity_bundle(), est, x, x, np.zeros(3), cfg)
        assert np.allclose(res.u_T, np.zeros(3))

    def test_two_path_oracle(self):
        """The composed implementation must match a step-by-step oracle."""
        robot, cam = ur5(), default_camera()
        cfg = ControllerConfig(kp=2.0, c_d=1.0)
        tp = TrueParams.from_camera(cam)
        rng = np.random.default_rng(12)
        for _ in range(10):
            q = nonsingular_ur5_q(rng, robot)
            est = EstimatorInit(mode="random").build(tp, rng)
            from armsteer.kinematics import forward_kinematics

            r = forward_kinematics(robot, q)
            try:
                x, _ = project(cam, r)
            except Exception:
                continue
            x_d = np.array([720.0, 540.0])
            bundle = jacobian_bundle(robot, q)
            res = task_term(bundle, est, x, x_d, r, cfg)

            # independent composition with numpy primitives only
            z_raw = est.theta_z_hat[:3] @ r + est.theta_z_hat[3]
            z_hat = max(z_raw, cfg.z_floor)
            M_hat = est.theta_k_hat[:6].reshape(2, 3)
            a_hat = est.theta_k_hat[6:9]
            J_s_hat = M_hat - np.outer(x, a_hat)
            u_expected = -z_hat * np.linalg.pinv(bundle.J) @ np.linalg.pinv(J_s_hat) @ (
                np.diag(cfg.kp) @ (x - x_d)
            )
            scale = max(1.0, np.abs(u_expected).max())
            assert np.abs(res.u_T - u_expected).max() < 1e-12 * scale


class TestAdaptStep:
    def test_zero_error_freezes_estimates(self):
        cfg = ControllerConfig(kp=2.0)
        est = planar_image_estimator()
        x = np.array([10.0, 20.0])
        out = adapt_step(est, np.array([1.0, 2.0]), np.array([0.1, 0.2, 0.3]),
                         x, x, np.ones(3), cfg, dt=1 / 30)
        assert np.array_equal(out.theta_z_hat, est.theta_z_hat)
        assert np.array_equal(out.theta_k_hat, est.theta_k_hat)

    def test_hand_evaluated_depth_update(self):
        cfg = ControllerConfig(kp=2.0, l_z=0.001)
        est = planar_image_estimator()  # zhat = 1 at r = 0
        out = adapt_step(est, x_dot=np.array([1.0, 0.0]), r_dot=np.zeros(3),
                         x=np.array([2.0, 0.0]), x_d=np.zeros(2), r=np.zeros(3),
                         cfg=cfg, dt=1.0)
        delta = out.theta_z_hat - est.theta_z_hat
        assert np.allclose(delta, [0.0, 0.0, 0.0, -0.002], atol=1e-15)
        assert np.array_equal(out.theta_k_hat, est.theta_k_hat)  # r_dot = 0

    def test_zero_rates_freeze(self):
        cfg = ControllerConfig(kp=2.0)
        est = planar_image_estimator()
        out = adapt_step(est, np.zeros(2), np.zeros(3), np.array([5.0, 5.0]),
                         np.zeros(2), np.ones(3), cfg, dt=1 / 30)
        assert np.array_equal(out.theta_z_hat, est.theta_z_hat)
        assert np.array_equal(out.theta_k_hat, est.theta_k_hat)

    def test_ablation_mode(self):
        cfg = disable_adaptation(ControllerConfig(kp=2.0))
        est = planar_image_estimator()
        out = adapt_step(est, np.ones(2), np.ones(3), np.array([5.0, 5.0]),
                         np.zeros(2), np.ones(3), cfg, dt=1 / 30)
        assert out is est

    def test_bad_dt(self):
        cfg = ControllerConfig(kp=2.0)
        with pytest.raises(ConfigurationError):
            adapt_step(planar_image_estimator(), np.zeros(2), np.zeros(3),
                       np.zeros(2), np.zeros(2), np.zeros(3), cfg, dt=0.0)


class TestNullspaceTerm:
    def test_zero_intent(self):
        cfg = ControllerConfig(kp=2.0, c_d=1.0)
        bundle = identity_bundle()
        assert np.allclose(nullspace_term(bundle, HumanIntent(d=np.zeros(3)), cfg),
                           np.zeros(3))

    def test_diagonal_projector_toy(self):
        J = np.array([[1.0, 0.0, 0.0]])
        J_pinv, sigma, damped = pseudo_inverse(J)
        bundle = JacobianBundle(J, J_pinv, null_projector(J, J_pinv), sigma, damped)
        cfg = ControllerConfig(kp=2.0, c_d=1.0)
        u_N = nullspace_term(bundle, HumanIntent(d=np.array([5.0, 1.0, 2.0])), cfg)
        assert np.allclose(u_N, [0.0, 1.0, 2.0], atol=1e-12)

    def test_null_motion_invisible_to_task(self, ur5):
        rng = np.random.default_rng(13)
        cfg = ControllerConfig(kp=2.0, c_d=0.7)
        for _ in range(10):
            q = nonsingular_ur5_q(rng, ur5)
            bundle = jacobian_bundle(ur5, q)
            d = rng.standard_normal(6)
            u_N = nullspace_term(bundle, HumanIntent(d=d), cfg)
            assert np.abs(bundle.J @ u_N).max() < 1e-9 * max(1.0, np.abs(d).max())


class TestControlStep:
    def _setup(self, rng, est=None):
        robot, cam = ur5(), default_camera()
        q = TASK1_START_Q
        from armsteer.kinematics import forward_kinematics

        r = forward_kinematics(robot, q)
        x, _ = project(cam, r)
        bundle = jacobian_bundle(robot, q)
        tp = TrueParams.from_camera(cam)
        if est is None:
            est = EstimatorState(tp.theta_z, tp.theta_k)
        return bundle, est, x, r, tp

    def test_converged_no_intent_is_zero(self):
        rng = np.random.default_rng(14)
        bundle, est, x, r, tp = self._setup(rng)
        cfg = ControllerConfig(kp=2.0)
        out, _ = control_step(bundle, est, x, x, r, HumanIntent(d=np.zeros(6)),
                              cfg, np.zeros(2), np.zeros(3), 1 / 30)
        assert np.allclose(out.u, np.zeros(6), atol=1e-12)

    def test_damping_residual_vanishes_undamped(self):
        rng = np.random.default_rng(15)
        cfg = ControllerConfig(kp=2.0, c_d=1.3)
        bundle, est, x, r, tp = self._setup(rng)
        d = rng.standard_normal(6)
        out, _ = control_step(bundle, est, x, np.array([720.0, 540.0]), r,
                              HumanIntent(d=d), cfg, np.zeros(2), np.zeros(3), 1 / 30)
        assert not out.jac_damped
        assert out.null_residual < 1e-9 * (1 + np.linalg.norm(d))

    def test_output_decomposition_exact(self):
        rng = np.random.default_rng(16)
        bundle, est, x, r, tp = self._setup(rng)
        cfg = ControllerConfig(kp=2.0)
        d = rng.standard_normal(6)
        out, _ = control_step(bundle, est, x, np.array([700.0, 500.0]), r,
                              HumanIntent(d=d), cfg, np.zeros(2), np.zeros(3), 1 / 30)
        assert np.array_equal(out.u, out.u_T + out.u_N)

    def test_output_bounded_by_gain_chain(self):
        """|u_T| <= zhat |J+| |Jhat_s+| |K_p| |e| with operator norms."""
        rng = np.random.default_rng(17)
        robot, cam = ur5(), default_camera()
        tp = TrueParams.from_camera(cam)
        cfg = ControllerConfig(kp=2.0)
        est = EstimatorInit(mode="random").build(tp, rng)
        bundle, _, x, r, _ = self._setup(rng, est)
        x_d = np.array([720.0, 540.0])
        out, _ = control_step(bundle, est, x, x_d, r, HumanIntent(d=np.zeros(6)),
                              cfg, np.zeros(2), np.zeros(3), 1 / 30)
        from armsteer.camera import estimate_image_jacobian

        _, J_s_pinv, _ = estimate_image_jacobian(est, x, cfg.sigma_floor)
        bound = (out.z_hat * np.linalg.norm(bundle.J_pinv, 2)
                 * np.linalg.norm(J_s_pinv, 2) * cfg.kp.max()
                 * np.linalg.norm(x - x_d))
        assert np.linalg.norm(out.u_T) <= bound * (1 + 1e-12)
        assert np.all(np.isfinite(out.u))

    def test_degenerate_image_estimate_flagged_and_adapting(self):
        rng = np.random.default_rng(18)
        bundle, _, x, r, tp = self._setup(rng)
        est = EstimatorState(tp.theta_z, np.zeros(9))  # rank-0 Jhat_s
        cfg = ControllerConfig(kp=2.0)
        out, new_est = control_step(bundle, est, x, np.array([700.0, 500.0]), r,
                                    HumanIntent(d=np.zeros(6)), cfg,
                                    np.array([1.0, 1.0]), np.array([0.1, 0.1, 0.1]),
                                    1 / 30)
        assert out.img_damped
        assert np.all(np.isfinite(out.u))
        assert not np.array_equal(new_est.theta_k_hat, est.theta_k_hat)


class TestLyapunov:
    def test_zero_at_convergence(self):
        cam = default_camera()
        tp = TrueParams.from_camera(cam)
        est = EstimatorState(tp.theta_z, tp.theta_k)
        cfg = ControllerConfig(kp=2.0)
        assert lyapunov_value(np.zeros(2), est, tp, cfg) == pytest.approx(0.0)

    def test_pure_error_term(self):
        cam = default_camera()
        tp = TrueParams.from_camera(cam)
        est = EstimatorState(tp.theta_z, tp.theta_k)
        cfg = ControllerConfig(kp=2.0, l_z=0.7, l_k=3.0)
        assert lyapunov_value(np.array([3.0, 4.0]), est, tp, cfg) == pytest.approx(12.5)

    def test_weighted_parameter_terms(self):
        cam = default_camera()
        tp = TrueParams.from_camera(cam)
        dz = np.array([1.0, 0, 0, 0])
        est = EstimatorState(tp.theta_z - dz, tp.theta_k)
        cfg = ControllerConfig(kp=2.0, l_z=0.5)
        assert lyapunov_value(np.zeros(2), est, tp, cfg) == pytest.approx(1.0)

    def test_per_step_decrease_matches_error_power_at_second_order(
        self, task1_scenario
    ):
        """|dV + e^T K_p e dt| shrinks quadratically with dt."""
        from dataclasses import replace
        from armsteer.simulator import run

        def max_dev(dt):
            scn = replace(task1_scenario,
                          sim=replace(task1_scenario.sim, dt=dt, duration=2.0),
                          intents=task1_scenario.intents)
            log, _ = run(scn)
            dev = 0.0
            for a, b in zip(log.records[:-1], log.records[1:]):
                power = a.e @ (task1_scenario.controller.kp * a.e)
                dev = max(dev, abs((b.V - a.V) + power * dt))
            return dev

        coarse = max_dev(1 / 30)
        fine = max_dev(1 / 120)
        assert fine < coarse / 2.5  # superlinear improvement => O(dt^2) residual
