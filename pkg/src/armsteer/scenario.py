"""Scenario files: parsing, validation, defaults, and the effective-config echo.

A scenario is a YAML mapping with a ``schema_version``. Unknown keys are
rejected with their config path; every validation failure names the offending
path. Parsing materializes all defaults (Table-style gains, 30 Hz loop,
built-in robot/camera presets expanded to explicit numbers), so the echoed
effective config reproduces the run bit-exactly when re-consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .camera import CameraModel, THETA_K_SHARED
from .controller import ControllerConfig
from .errors import ConfigurationError
from .kinematics import DHRow, RobotModel, TASK_DIM, fk_and_jacobian
from .presets import ROBOT_PRESETS, TASK1_START_Q, default_camera, planar_arm, ur5
from .simulator import (
    CircleTarget,
    EstimatorInit,
    IntentSchedule,
    IntentSegment,
    SetpointTarget,
    SimConfig,
)

SCHEMA_VERSION = 1

# probe sweep for depth-positivity validation; fixed seed keeps validation
# deterministic and independent of the simulation seed
_PROBE_SAMPLES = 64
_PROBE_SPREAD_RAD = 0.3
_PROBE_SEED = 0x5EED


@dataclass(frozen=True)
class Scenario:
    """Fully-validated, defaults-materialized run description."""

    name: str
    robot: RobotModel
    camera: CameraModel
    q0: np.ndarray
    estimator_init: EstimatorInit
    controller: ControllerConfig
    target: Any  # SetpointTarget | CircleTarget
    intents: IntentSchedule
    sim: SimConfig

    def effective_dict(self) -> dict:
        """Everything needed to reproduce the run, presets expanded."""
        target: dict[str, Any]
        if isinstance(self.target, CircleTarget):
            target = {
                "type": "circle",
                "center": [float(v) for v in self.target.center],
                "radius_px": float(self.target.radius_px),
                "angular_rate": float(self.target.angular_rate),
                "t_start": float(self.target.t_start),
            }
        else:
            target = {"type": "setpoint",
                      "pixel": [float(v) for v in self.target.pixel]}
        est: dict[str, Any] = {"mode": self.estimator_init.mode}
        if self.estimator_init.mode == "random":
            est["scale_range"] = [float(v) for v in self.estimator_init.scale_range]
            est["noise"] = float(self.estimator_init.noise)
        elif self.estimator_init.mode == "explicit":
            est["theta_z"] = [float(v) for v in self.estimator_init.theta_z]
            est["theta_k"] = [float(v) for v in self.estimator_init.theta_k]
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "robot": {
                "dh": [
                    {"a": row.a, "alpha": row.alpha, "d": row.d, "theta": row.theta}
                    for row in self.robot.dh
                ],
                "feature_offset": [float(v) for v in self.robot.feature_offset],
                "name": self.robot.name,
            },
            "camera": {
                "P": [[float(v) for v in row] for row in self.camera.P],
                "image_size": [int(v) for v in self.camera.image_size],
                "quantize": bool(self.camera.quantize),
                "noise_px": float(self.camera.noise_px),
            },
            "initial_q": [float(v) for v in self.q0],
            "estimator": est,
            "gains": {
                "kp": [float(v) for v in self.controller.kp],
                "c_d": float(self.controller.c_d),
                "l_z": [float(v) for v in self.controller.l_z],
                "l_k": [float(v) for v in self.controller.l_k],
                "n_k": int(self.controller.n_k),
                "z_floor": float(self.controller.z_floor),
                "sigma_floor": float(self.controller.sigma_floor),
                "jac_damping": float(self.controller.jac_damping),
                "adaptation_enabled": bool(self.controller.adaptation_enabled),
            },
            "target": target,
            "intents": [
                {"t_start": float(seg.t_start), "t_end": float(seg.t_end),
                 "d": [float(v) for v in seg.d]}
                for seg in self.intents.segments
            ],
            "sim": {
                "dt": float(self.sim.dt),
                "duration": float(self.sim.duration),
                "integrator": self.sim.integrator,
                "seed": int(self.sim.seed),
                "decimation": int(self.sim.decimation),
                "max_joint_speed": float(self.sim.max_joint_speed),
            },
        }

    def echo_yaml(self) -> str:
        return yaml.safe_dump(self.effective_dict(), sort_keys=False)


def _reject_unknown(mapping: dict, allowed: set[str], path: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {key!r}", path=path)


def _vector(value, length, path) -> np.ndarray:
    try:
        vec = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError("expected a numeric list", path=path)
    if vec.shape != (length,):
        raise ConfigurationError(f"expected {length} values, got shape {vec.shape}",
                                 path=path)
    if not np.all(np.isfinite(vec)):
        raise ConfigurationError("values must be finite", path=path)
    return vec


def _parse_robot(data: Optional[dict]) -> RobotModel:
    if data is None:
        return ur5()
    if not isinstance(data, dict):
        raise ConfigurationError("robot must be a mapping", path="robot")
    _reject_unknown(data, {"preset", "dh", "feature_offset", "link_lengths", "name"},
                    "robot")
    offset = data.get("feature_offset", (0.0, 0.0, 0.0))
    offset = _vector(offset, 3, "robot.feature_offset")
    if "preset" in data:
        preset = data["preset"]
        if preset not in ROBOT_PRESETS:
            raise ConfigurationError(
                f"unknown preset {preset!r} (available: {sorted(ROBOT_PRESETS)})",
                path="robot.preset",
            )
        if preset == "planar3r":
            lengths = data.get("link_lengths", (1.0, 1.0, 1.0))
            model = planar_arm(tuple(float(v) for v in lengths))
            return replace(model, feature_offset=offset)
        return ur5(feature_offset=offset)
    if "dh" not in data:
        raise ConfigurationError("robot needs a preset or dh rows", path="robot")
    rows = []
    for i, row in enumerate(data["dh"]):
        if not isinstance(row, dict):
            raise ConfigurationError("dh row must be a mapping {a, alpha, d, theta}",
                                     path=f"robot.dh[{i}]")
        _reject_unknown(row, {"a", "alpha", "d", "theta"}, f"robot.dh[{i}]")
        rows.append(DHRow(a=float(row.get("a", 0.0)), alpha=float(row.get("alpha", 0.0)),
                          d=float(row.get("d", 0.0)), theta=float(row.get("theta", 0.0))))
    return RobotModel(dh=tuple(rows), feature_offset=offset,
                      name=str(data.get("name", "custom")))


def _parse_camera(data: Optional[dict]) -> CameraModel:
    if data is None:
        return default_camera()
    if not isinstance(data, dict):
        raise ConfigurationError("camera must be a mapping", path="camera")
    _reject_unknown(data, {"preset", "P", "image_size", "quantize", "noise_px"},
                    "camera")
    size = data.get("image_size", (1440, 1080))
    size = (int(size[0]), int(size[1]))
    quantize = bool(data.get("quantize", False))
    noise_px = float(data.get("noise_px", 0.0))
    if noise_px < 0:
        raise ConfigurationError("noise_px must be non-negative",
                                 path="camera.noise_px")
    if "P" in data:
        P = np.asarray(data["P"], dtype=float)
        if P.shape != (3, 4):
            raise ConfigurationError(f"P must be 3x4, got {P.shape}", path="camera.P")
        return CameraModel(P=P, image_size=size, quantize=quantize,
                           noise_px=noise_px)
    if data.get("preset", "default") != "default":
        raise ConfigurationError(f"unknown camera preset {data['preset']!r}",
                                 path="camera.preset")
    cam = default_camera()
    return CameraModel(P=cam.P, image_size=size, quantize=quantize,
                       noise_px=noise_px)


def _parse_gains(data: Optional[dict]) -> ControllerConfig:
    data = dict(data or {})
    _reject_unknown(data, {"kp", "c_d", "l_z", "l_k", "n_k", "z_floor",
                           "sigma_floor", "jac_damping", "adaptation_enabled"},
                    "gains")
    kwargs = dict(
        kp=data.get("kp", 2.0),
        c_d=float(data.get("c_d", 1.0)),
        l_z=data.get("l_z", 0.001),
        l_k=data.get("l_k", 0.001),
        n_k=int(data.get("n_k", THETA_K_SHARED)),
        z_floor=float(data.get("z_floor", 0.05)),
        sigma_floor=float(data.get("sigma_floor", 1e-6)),
        jac_damping=float(data.get("jac_damping", 1e-6)),
        adaptation_enabled=bool(data.get("adaptation_enabled", True)),
    )
    try:
        return ControllerConfig(**kwargs)
    except ConfigurationError as err:
        raise ConfigurationError(str(err), path="gains")


def _parse_target(data: Optional[dict]):
    if data is None:
        return SetpointTarget(pixel=np.array([720.0, 540.0]))
    if not isinstance(data, dict):
        raise ConfigurationError("target must be a mapping", path="target")
    kind = data.get("type", "setpoint")
    if kind == "setpoint":
        _reject_unknown(data, {"type", "pixel"}, "target")
        return SetpointTarget(pixel=_vector(data.get("pixel", [720.0, 540.0]), 2,
                                            "target.pixel"))
    if kind == "circle":
        _reject_unknown(data, {"type", "center", "radius_px", "angular_rate",
                               "t_start"}, "target")
        radius = float(data.get("radius_px", 100.0))
        if radius <= 0:
            raise ConfigurationError("radius_px must be positive",
                                     path="target.radius_px")
        return CircleTarget(
            center=_vector(data.get("center", [720.0, 540.0]), 2, "target.center"),
            radius_px=radius,
            angular_rate=float(data.get("angular_rate", np.pi / 15)),
            t_start=float(data.get("t_start", 0.0)),
        )
    raise ConfigurationError(f"unknown target type {kind!r}", path="target.type")


def _parse_estimator(data: Optional[dict]) -> EstimatorInit:
    data = dict(data or {})
    _reject_unknown(data, {"mode", "scale_range", "noise", "theta_z", "theta_k"},
                    "estimator")
    mode = data.get("mode", "random")
    if mode not in ("true", "random", "explicit"):
        raise ConfigurationError(f"unknown estimator mode {mode!r}",
                                 path="estimator.mode")
    if mode == "explicit":
        if "theta_z" not in data or "theta_k" not in data:
            raise ConfigurationError("explicit mode needs theta_z and theta_k",
                                     path="estimator")
        tz = _vector(data["theta_z"], 4, "estimator.theta_z")
        tk = np.asarray(data["theta_k"], dtype=float)
        return EstimatorInit(mode="explicit", theta_z=tz, theta_k=tk)
    rng_range = data.get("scale_range", (0.25, 4.0))
    lo, hi = float(rng_range[0]), float(rng_range[1])
    if not 0 < lo <= hi:
        raise ConfigurationError("scale_range must satisfy 0 < lo <= hi",
                                 path="estimator.scale_range")
    noise = float(data.get("noise", 0.1))
    if not 0 <= noise < lo:
        raise ConfigurationError("noise must lie in [0, scale_range lo) to preserve "
                                 "signs", path="estimator.noise")
    return EstimatorInit(mode=mode, scale_range=(lo, hi), noise=noise)


def _parse_intents(data, n: int) -> IntentSchedule:
    if data is None:
        return IntentSchedule.empty(n)
    if not isinstance(data, list):
        raise ConfigurationError("intents must be a list of segments", path="intents")
    segments = []
    for i, seg in enumerate(data):
        path = f"intents[{i}]"
        if not isinstance(seg, dict):
            raise ConfigurationError("segment must be a mapping", path=path)
        _reject_unknown(seg, {"t_start", "t_end", "d"}, path)
        try:
            t0, t1 = float(seg["t_start"]), float(seg["t_end"])
            d = _vector(seg["d"], n, f"{path}.d")
        except KeyError as missing:
            raise ConfigurationError(f"missing {missing}", path=path)
        if t1 <= t0:
            raise ConfigurationError("t_end must exceed t_start", path=path)
        segments.append(IntentSegment(t_start=t0, t_end=t1, d=d))
    return IntentSchedule(segments, n)


def _parse_sim(data: Optional[dict]) -> SimConfig:
    data = dict(data or {})
    _reject_unknown(data, {"dt", "duration", "integrator", "seed", "decimation",
                           "max_joint_speed"}, "sim")
    return SimConfig(
        dt=float(data.get("dt", 1.0 / 30.0)),
        duration=float(data.get("duration", 10.0)),
        integrator=str(data.get("integrator", "euler")),
        seed=int(data.get("seed", 0)),
        decimation=int(data.get("decimation", 1)),
        max_joint_speed=float(data.get("max_joint_speed", 1e3)),
    )


def validate_scenario(scn: Scenario) -> None:
    """Cross-field checks: redundancy, nonsingular start, depth positivity."""
    if scn.robot.n <= TASK_DIM:
        raise ConfigurationError(
            f"robot has {scn.robot.n} joints; the point task needs n > {TASK_DIM} "
            "for a nontrivial null space", path="robot",
        )
    if scn.q0.shape != (scn.robot.n,):
        raise ConfigurationError(
            f"initial_q has length {len(scn.q0)}, robot has {scn.robot.n} joints",
            path="initial_q",
        )
    r0, J0 = fk_and_jacobian(scn.robot, scn.q0)
    sigma = np.linalg.svd(J0, compute_uv=False)[-1]
    if sigma <= scn.controller.jac_damping:
        raise ConfigurationError(
            f"initial configuration is singular (sigma_min {sigma:.3g})",
            path="initial_q",
        )
    rng = np.random.default_rng(_PROBE_SEED)
    probes = scn.q0 + rng.uniform(-_PROBE_SPREAD_RAD, _PROBE_SPREAD_RAD,
                                  size=(_PROBE_SAMPLES, scn.robot.n))
    probes[0] = scn.q0
    for i, q in enumerate(probes):
        r, _ = fk_and_jacobian(scn.robot, q)
        z = float(scn.camera.a @ r + scn.camera.b)
        if z <= 0:
            raise ConfigurationError(
                f"feature depth {z:.3g} not positive at probe configuration {i} "
                "(workspace reaches behind the camera)", path="camera",
            )


def parse_scenario_dict(data: dict, name: str = "scenario") -> Scenario:
    """Build a validated Scenario from a parsed mapping."""
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a mapping", path="")
    _reject_unknown(data, {"schema_version", "name", "robot", "camera", "initial_q",
                           "estimator", "gains", "target", "intents", "sim"}, "")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {version}",
                                 path="schema_version")
    robot = _parse_robot(data.get("robot"))
    camera = _parse_camera(data.get("camera"))
    if "initial_q" in data:
        q0 = _vector(data["initial_q"], robot.n, "initial_q")
    elif robot.name == "ur5":
        q0 = TASK1_START_Q.copy()
    else:
        q0 = np.zeros(robot.n)
    scn = Scenario(
        name=str(data.get("name", name)),
        robot=robot,
        camera=camera,
        q0=q0,
        estimator_init=_parse_estimator(data.get("estimator")),
        controller=_parse_gains(data.get("gains")),
        target=_parse_target(data.get("target")),
        intents=_parse_intents(data.get("intents"), robot.n),
        sim=_parse_sim(data.get("sim")),
    )
    validate_scenario(scn)
    return scn


def parse_scenario(path) -> Scenario:
    """Load, validate, and materialize a scenario file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"scenario file not found: {path}")
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ConfigurationError(f"invalid YAML: {err}")
    return parse_scenario_dict(data or {}, name=path.stem)
