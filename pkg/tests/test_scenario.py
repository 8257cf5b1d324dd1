import numpy as np
import pytest
import yaml

from armsteer.errors import ConfigurationError
from armsteer.scenario import parse_scenario, parse_scenario_dict
from armsteer.simulator import CircleTarget, run
from armsteer.telemetry import TelemetryLog, TelemetryRecord, summarize

from conftest import SCENARIO_DIR

MINIMAL = {
    "schema_version": 1,
    "robot": {"preset": "ur5"},
    "target": {"type": "setpoint", "pixel": [720.0, 540.0]},
}


class TestDefaults:
    def test_minimal_file_gets_table_defaults(self):
        scn = parse_scenario_dict(MINIMAL)
        assert scn.sim.dt == pytest.approx(1.0 / 30.0, abs=0)
        assert np.allclose(scn.controller.kp, [2.0, 2.0])
        assert scn.controller.c_d == 1.0
        assert np.allclose(scn.controller.l_z, 0.001 * np.ones(4))
        assert np.allclose(scn.controller.l_k, 0.001 * np.ones(9))
        assert scn.controller.adaptation_enabled
        assert scn.estimator_init.mode == "random"
        assert scn.estimator_init.scale_range == (0.25, 4.0)

    def test_initial_q_defaults_to_preset_pose(self):
        scn = parse_scenario_dict(MINIMAL)
        assert scn.q0.shape == (6,)

    def test_camera_defaults(self):
        scn = parse_scenario_dict(MINIMAL)
        assert scn.camera.P.shape == (3, 4)
        assert scn.camera.image_size == (1440, 1080)


class TestValidation:
    def test_negative_damping_names_field(self):
        data = dict(MINIMAL, gains={"c_d": -1.0})
        with pytest.raises(ConfigurationError, match="gains.*c_d"):
            parse_scenario_dict(data)

    def test_unknown_top_level_key(self):
        data = dict(MINIMAL, warp_drive=True)
        with pytest.raises(ConfigurationError, match="warp_drive"):
            parse_scenario_dict(data)

    def test_unknown_nested_key_reports_path(self):
        data = dict(MINIMAL, gains={"kp": 2.0, "flux": 1.0})
        with pytest.raises(ConfigurationError, match="gains"):
            parse_scenario_dict(data)

    def test_non_redundant_robot_rejected(self):
        data = dict(MINIMAL, robot={"preset": "planar3r"})
        with pytest.raises(ConfigurationError, match="null space"):
            parse_scenario_dict(data)

    def test_singular_start_rejected(self):
        # sigma_min at the default pose is ~0.3; a higher damping threshold
        # must reject the start as effectively singular
        data = dict(MINIMAL, gains={"jac_damping": 0.5})
        with pytest.raises(ConfigurationError, match="singular"):
            parse_scenario_dict(data)

    def test_depth_positivity_probe(self):
        # depth row makes the whole workspace sit behind the camera
        P = [[500.0, 0, 0, 720], [0, 500.0, 0, 540], [0, 0, 1.0, -50.0]]
        data = dict(MINIMAL, camera={"P": P})
        with pytest.raises(ConfigurationError, match="depth"):
            parse_scenario_dict(data)

    def test_intent_length_checked(self):
        data = dict(MINIMAL,
                    intents=[{"t_start": 0.0, "t_end": 1.0, "d": [0.1, 0.2]}])
        with pytest.raises(ConfigurationError, match="intents"):
            parse_scenario_dict(data)

    def test_intent_time_order(self):
        data = dict(MINIMAL,
                    intents=[{"t_start": 2.0, "t_end": 1.0, "d": [0.0] * 6}])
        with pytest.raises(ConfigurationError, match="t_end"):
            parse_scenario_dict(data)

    def test_bad_schema_version(self):
        with pytest.raises(ConfigurationError, match="schema_version"):
            parse_scenario_dict(dict(MINIMAL, schema_version=99))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            parse_scenario(tmp_path / "nope.yaml")

    def test_estimator_noise_bound(self):
        data = dict(MINIMAL, estimator={"mode": "random", "noise": 0.5})
        with pytest.raises(ConfigurationError, match="noise"):
            parse_scenario_dict(data)


class TestCircleSpec:
    def test_parametric_circle_values(self):
        data = dict(MINIMAL, target={
            "type": "circle", "center": [720.0, 540.0], "radius_px": 100.0,
            "angular_rate": float(np.pi / 15), "t_start": 0.0,
        })
        scn = parse_scenario_dict(data)
        assert isinstance(scn.target, CircleTarget)
        assert np.allclose(scn.target.at(0.0), [820.0, 540.0], atol=1e-9)
        assert np.allclose(scn.target.at(7.5), [720.0, 640.0], atol=1e-9)
        assert np.allclose(scn.target.at(15.0), [620.0, 540.0], atol=1e-9)


class TestEcho:
    def test_round_trip_reproduces_run_bit_exactly(self, task1_scenario, tmp_path):
        echo = task1_scenario.echo_yaml()
        path = tmp_path / "echo.yaml"
        path.write_text(echo)
        again = parse_scenario(path)
        from dataclasses import replace

        short = replace(task1_scenario,
                        sim=replace(task1_scenario.sim, duration=2.0))
        short_again = replace(again, sim=replace(again.sim, duration=2.0))
        log_a, _ = run(short)
        log_b, _ = run(short_again)
        assert log_a.to_csv_bytes() == log_b.to_csv_bytes()

    def test_echo_is_valid_yaml_with_all_sections(self, task2_scenario):
        data = yaml.safe_load(task2_scenario.echo_yaml())
        for key in ("schema_version", "robot", "camera", "initial_q", "estimator",
                    "gains", "target", "intents", "sim"):
            assert key in data
        assert data["target"]["type"] == "circle"
        assert len(data["robot"]["dh"]) == 6


def make_error_log(error_norms, dt=1.0 / 30.0):
    records = []
    for k, e in enumerate(error_norms):
        records.append(TelemetryRecord(
            t=k * dt, q=np.zeros(6), r=np.zeros(3), x=np.array([e, 0.0]),
            x_d=np.zeros(2), e=np.array([e, 0.0]), d=np.zeros(6), u=np.zeros(6),
            u_T=np.zeros(6), u_N=np.zeros(6), z_hat=1.0, z_true=1.0, V=0.5 * e * e,
            null_residual=0.0, sigma_min=0.3, depth_clamped=False,
            jac_damped=False, img_damped=False,
        ))
    return TelemetryLog(records)


class TestSummarize:
    def test_all_zero_log(self):
        m = summarize(make_error_log(np.zeros(100)))
        assert m.convergence_time_s == 0.0
        assert m.steady_state_mean_px == 0.0

    def test_exponential_decay_closed_form(self):
        dt = 1.0 / 30.0
        t = np.arange(0, 6, dt)
        e0, rate = 100.0, 2.0
        m = summarize(make_error_log(e0 * np.exp(-rate * t), dt))
        expected = np.log(e0 / 5.0) / rate
        assert m.convergence_time_s == pytest.approx(expected, abs=dt)

    def test_never_converges(self):
        m = summarize(make_error_log(10.0 * np.ones(50)))
        assert m.convergence_time_s is None

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError):
            summarize(TelemetryLog())


class TestShippedScenarios:
    def test_task1_parses(self):
        scn = parse_scenario(SCENARIO_DIR / "task1.yaml")
        assert scn.robot.n == 6
        assert np.allclose(scn.controller.kp, [2.0, 2.0])
        assert scn.controller.c_d == 1.0

    def test_task2_matches_published_parameters(self):
        scn = parse_scenario(SCENARIO_DIR / "task2.yaml")
        assert np.allclose(scn.controller.kp, [5.0, 5.0])
        assert scn.controller.c_d == 0.5
        assert isinstance(scn.target, CircleTarget)
        assert scn.target.radius_px == 100.0
        assert scn.target.angular_rate == pytest.approx(np.pi / 15)
