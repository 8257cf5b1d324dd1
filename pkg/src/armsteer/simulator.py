"""Deterministic fixed-step simulation of the kinematic plant qdot = u.

The plant applies the commanded joint velocity exactly; the camera measures
the feature pixel each step; human intents are zero-order-held and drained at
step boundaries; adaptation runs once per step on backward-difference rates.
Euler is the default integrator (mirroring a 30 Hz control loop); RK4 holds
the estimates and intent constant across substeps and re-measures the camera
at substates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import camera as cam_mod
from .camera import CameraModel, EstimatorState, TrueParams
from .controller import ControllerConfig, HumanIntent, control_step, nullspace_term, task_term
from .errors import ConfigurationError, DivergenceError, NumericalIntegrityError
from .kinematics import RobotModel, bundle_from_jacobian, fk_and_jacobian
from .telemetry import SummaryMetrics, TelemetryLog, TelemetryRecord, summarize

DEFAULT_DT = 1.0 / 30.0
DEFAULT_MAX_JOINT_SPEED = 1e3  # rad/s, divergence guard


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    duration: float = 10.0
    integrator: str = "euler"  # euler | rk4
    seed: int = 0
    decimation: int = 1
    max_joint_speed: float = DEFAULT_MAX_JOINT_SPEED

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive", path="sim.dt")
        if self.duration < self.dt:
            raise ConfigurationError("duration must be at least dt", path="sim.duration")
        if self.integrator not in ("euler", "rk4"):
            raise ConfigurationError(
                f"unknown integrator {self.integrator!r}", path="sim.integrator"
            )
        if self.decimation < 1:
            raise ConfigurationError("decimation must be >= 1", path="sim.decimation")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class SetpointTarget:
    pixel: np.ndarray

    def at(self, t: float) -> np.ndarray:
        return np.asarray(self.pixel, dtype=float)


@dataclass(frozen=True)
class CircleTarget:
    """Circular pixel path applied as a series of setpoints.

    Before ``t_start`` the target holds the angle-zero point, i.e.
    center + (radius, 0).
    """

    center: np.ndarray
    radius_px: float
    angular_rate: float
    t_start: float = 0.0

    def at(self, t: float) -> np.ndarray:
        center = np.asarray(self.center, dtype=float)
        phase = self.angular_rate * max(t - self.t_start, 0.0)
        return center + self.radius_px * np.array([np.cos(phase), np.sin(phase)])


@dataclass(frozen=True)
class IntentSegment:
    t_start: float
    t_end: float
    d: np.ndarray


class IntentSchedule:
    """Piecewise-constant scripted intents; outside all segments d = 0."""

    def __init__(self, segments: Sequence[IntentSegment], n: int):
        self.segments = list(segments)
        self.n = n
        for seg in self.segments:
            if len(seg.d) != n:
                raise ConfigurationError(
                    f"intent segment d has length {len(seg.d)}, robot has {n} joints"
                )

    @classmethod
    def empty(cls, n: int) -> "IntentSchedule":
        return cls([], n)

    def at(self, t: float) -> np.ndarray:
        d = np.zeros(self.n)
        for seg in self.segments:  # later segments win on overlap
            if seg.t_start <= t < seg.t_end:
                d = np.asarray(seg.d, dtype=float)
        return d

    @property
    def is_empty(self) -> bool:
        return not self.segments


@dataclass(frozen=True)
class EstimatorInit:
    """How the estimator starts: perfect, seeded-random, or explicit vectors.

    Random mode draws per-component multiplicative factors log-uniform in
    ``scale_range`` plus a bounded sign-preserving jitter.
    """

    mode: str = "random"  # true | random | explicit
    scale_range: tuple[float, float] = (0.25, 4.0)
    noise: float = 0.1
    theta_z: Optional[np.ndarray] = None
    theta_k: Optional[np.ndarray] = None

    def build(self, true_params: TrueParams, rng: np.random.Generator) -> EstimatorState:
        if self.mode == "true":
            return EstimatorState(true_params.theta_z.copy(), true_params.theta_k.copy())
        if self.mode == "explicit":
            if self.theta_z is None or self.theta_k is None:
                raise ConfigurationError(
                    "explicit estimator init requires theta_z and theta_k"
                )
            return EstimatorState(np.asarray(self.theta_z, float),
                                  np.asarray(self.theta_k, float))
        if self.mode == "random":
            lo, hi = self.scale_range
            if not (0 < lo <= hi):
                raise ConfigurationError("scale_range must satisfy 0 < lo <= hi")

            def perturb(theta):
                factors = np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(theta)))
                jitter = self.noise * rng.uniform(-1.0, 1.0, size=len(theta))
                return theta * (factors + jitter)

            return EstimatorState(perturb(true_params.theta_z),
                                  perturb(true_params.theta_k))
        raise ConfigurationError(f"unknown estimator init mode {self.mode!r}")


class Simulation:
    """One stepping context: plant, camera, controller, and estimator state.

    The same object backs headless runs and the live session service, so a
    recorded per-step intent trace replays to identical telemetry.
    """

    def __init__(self, scenario):
        self.robot: RobotModel = scenario.robot
        self.camera: CameraModel = scenario.camera
        self.cfg: ControllerConfig = scenario.controller
        self.sim_cfg: SimConfig = scenario.sim
        self.target = scenario.target
        self.q0 = np.asarray(scenario.q0, dtype=float)
        self.estimator_init: EstimatorInit = scenario.estimator_init
        self.true_params = TrueParams.from_camera(self.camera, self.cfg.n_k)
        self.reset()

    def reset(self) -> None:
        rng = np.random.default_rng(self.sim_cfg.seed)
        self.est = self.estimator_init.build(self.true_params, rng)
        # separate stream so measurement noise never shifts the estimator init
        self._meas_rng = np.random.default_rng([self.sim_cfg.seed, 1])
        self.q = self.q0.copy()
        self.k = 0
        self._x_prev: Optional[np.ndarray] = None
        self._r_prev: Optional[np.ndarray] = None
        self._target_override: Optional[np.ndarray] = None

    @property
    def t(self) -> float:
        return self.k * self.sim_cfg.dt

    @property
    def n(self) -> int:
        return self.robot.n

    def target_at(self, t: float) -> np.ndarray:
        if self._target_override is not None:
            return self._target_override
        return self.target.at(t)

    def set_target(self, pixel) -> None:
        """Override the target with a fixed setpoint from now on."""
        self._target_override = np.asarray(pixel, dtype=float)

    def _velocity(self, q: np.ndarray, d: np.ndarray, x_d: np.ndarray) -> np.ndarray:
        # Frozen-estimator vector field used by RK4 substeps.
        r, J = fk_and_jacobian(self.robot, q)
        x, _ = cam_mod.project(self.camera, r)
        bundle = bundle_from_jacobian(J, self.cfg.jac_damping)
        task = task_term(bundle, self.est, x, x_d, r, self.cfg)
        u_N = nullspace_term(bundle, HumanIntent(d=d), self.cfg)
        return task.u_T + u_N

    def step(self, d: Optional[np.ndarray] = None) -> TelemetryRecord:
        """Advance one control period; returns the record for the step start."""
        dt = self.sim_cfg.dt
        d = np.zeros(self.n) if d is None else np.asarray(d, dtype=float)
        if d.shape != (self.n,):
            raise ConfigurationError(f"intent d must have length {self.n}")
        if not np.all(np.isfinite(self.q)):
            raise NumericalIntegrityError(
                f"non-finite joint state entering step {self.k}"
            )
        t = self.t
        r, J = fk_and_jacobian(self.robot, self.q)
        x, z_true = cam_mod.project(self.camera, r)
        if self.camera.quantize or self.camera.noise_px > 0.0:
            # measurement options apply at step boundaries only; RK4 substeps
            # keep the continuous projection
            x = cam_mod.measure_pixel(self.camera, x, self._meas_rng)
        x_d = self.target_at(t)
        if self.k == 0:
            x_dot = np.zeros(2)
            r_dot = np.zeros(3)
        else:
            x_dot = (x - self._x_prev) / dt
            r_dot = (r - self._r_prev) / dt
        bundle = bundle_from_jacobian(J, self.cfg.jac_damping)
        out, new_est = control_step(
            bundle, self.est, x, x_d, r, HumanIntent(d=d), self.cfg,
            x_dot, r_dot, dt, true_params=self.true_params,
        )
        rec = TelemetryRecord(
            t=t, q=self.q.copy(), r=r, x=x, x_d=x_d, e=out.e, d=d,
            u=out.u, u_T=out.u_T, u_N=out.u_N,
            z_hat=out.z_hat, z_true=z_true, V=out.V,
            null_residual=out.null_residual, sigma_min=bundle.sigma_min,
            depth_clamped=out.depth_clamped, jac_damped=out.jac_damped,
            img_damped=out.img_damped,
        )
        speed = float(np.max(np.abs(out.u)))
        if speed > self.sim_cfg.max_joint_speed:
            raise DivergenceError(
                f"joint speed {speed:.3g} rad/s exceeds limit "
                f"{self.sim_cfg.max_joint_speed:.3g} at t={t:.3f}"
            )
        if self.sim_cfg.integrator == "euler":
            q_next = self.q + dt * out.u
        else:
            k1 = out.u
            k2 = self._velocity(self.q + 0.5 * dt * k1, d, x_d)
            k3 = self._velocity(self.q + 0.5 * dt * k2, d, x_d)
            k4 = self._velocity(self.q + dt * k3, d, x_d)
            q_next = self.q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(q_next)):
            raise NumericalIntegrityError(f"non-finite joint state at t={t:.3f}")
        self.q = q_next
        self.est = new_est
        self._x_prev = x
        self._r_prev = r
        self.k += 1
        return rec


def run(
    scenario,
    intents: Optional[IntentSchedule] = None,
    threshold_px: Optional[float] = None,
) -> tuple[TelemetryLog, SummaryMetrics]:
    """Run a scenario headless; deterministic given (config, seed).

    ``intents`` overrides the scenario's schedule (used for paired d = 0
    runs). Divergence and integrity errors carry the partial log.
    """
    schedule = intents if intents is not None else scenario.intents
    sim = Simulation(scenario)
    log = TelemetryLog()
    try:
        for k in range(sim.sim_cfg.steps):
            d = schedule.at(k * sim.sim_cfg.dt)
            rec = sim.step(d)
            if k % sim.sim_cfg.decimation == 0:
                log.append(rec)
    except (DivergenceError, NumericalIntegrityError) as err:
        err.telemetry = log
        raise
    kwargs = {} if threshold_px is None else {"threshold_px": threshold_px}
    return log, summarize(log, **kwargs)


def compare_intent_off(scenario) -> tuple[TelemetryLog, TelemetryLog, float]:
    """Paired runs with the intent schedule on vs d = 0.

    Returns (log_on, log_off, max pixel-trajectory divergence). The task/null
    decoupling property makes the divergence an integration artifact only.
    """
    log_on, _ = run(scenario)
    log_off, _ = run(scenario, intents=IntentSchedule.empty(scenario.robot.n))
    div = max(
        float(np.linalg.norm(a.x - b.x))
        for a, b in zip(log_on, log_off)
    )
    return log_on, log_off, div
