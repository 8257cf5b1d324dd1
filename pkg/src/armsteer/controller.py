"""Adaptive vision-space control with null-space human interaction.

The joint-velocity command is u = u_T + u_N:

    u_T = -zhat J+ Jhat_s+ K_p (x - x_d)        vision-space task term
    u_N = N (d / c_d)                           null-space interactive term

with online estimates updated by gradient-style laws driven by the pixel
error (zhat from the clamped depth estimate):

    theta_z_hat' = -(1/zhat) L_z Y_z(xdot, r)^T (x - x_d)
    theta_k_hat' = +(1/zhat) L_k Y_k(rdot, x)^T (x - x_d)

Because J N = 0 and N J+ = 0, the task only sees u_T and the null space only
sees u_N: the human steers the body without touching the pixel task, and the
damping relation N (c_d qdot - d) = 0 holds at every undamped step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import camera as cam_mod
from .camera import EstimatorState, TrueParams
from .errors import ConfigurationError, NumericalIntegrityError
from .kinematics import JacobianBundle


def _diag_vector(value, size, name) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.ndim == 0:
        vec = np.full(size, float(vec))
    if vec.shape != (size,):
        raise ConfigurationError(f"{name} must be a scalar or length-{size} vector")
    if np.any(vec <= 0):
        raise ConfigurationError(f"{name} diagonal must be strictly positive")
    return vec


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and safeguards. Diagonal gains are stored as their diagonals."""

    kp: np.ndarray  # (2,)  1/s
    c_d: float = 1.0
    l_z: np.ndarray = 0.001  # (4,)
    l_k: np.ndarray = 0.001  # (n_k,)
    n_k: int = cam_mod.THETA_K_SHARED
    z_floor: float = 0.05
    sigma_floor: float = 1e-6
    jac_damping: float = 1e-6
    adaptation_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kp", _diag_vector(self.kp, 2, "kp"))
        object.__setattr__(self, "l_z", _diag_vector(self.l_z, 4, "l_z"))
        object.__setattr__(self, "l_k", _diag_vector(self.l_k, self.n_k, "l_k"))
        for name in ("c_d", "z_floor", "sigma_floor", "jac_damping"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass(frozen=True)
class HumanIntent:
    """Joint-space effort descriptor d; the zero vector means no intervention."""

    d: np.ndarray
    source: str = "scripted"  # slider | cartesian_drag | scripted
    timestamp: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if not np.all(np.isfinite(d)):
            raise ConfigurationError("intent d must be finite")
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class ControlOutput:
    """One control evaluation plus diagnostics; u = u_T + u_N exactly."""

    u: np.ndarray
    u_T: np.ndarray
    u_N: np.ndarray
    e: np.ndarray
    z_hat: float
    null_residual: float
    depth_clamped: bool
    img_damped: bool
    jac_damped: bool
    V: Optional[float] = None  # needs TrueParams; harness only


@dataclass(frozen=True)
class TaskTermResult:
    u_T: np.ndarray
    z_hat: float
    depth_clamped: bool
    J_s_hat: np.ndarray
    J_s_pinv: np.ndarray
    img_damped: bool


def task_term(
    bundle: JacobianBundle,
    est: EstimatorState,
    x: np.ndarray,
    x_d: np.ndarray,
    r: np.ndarray,
    cfg: ControllerConfig,
) -> TaskTermResult:
    """Vision-space term u_T = -zhat J+ Jhat_s+ K_p (x - x_d).

    Degeneracies never raise: the depth clamp and damped image-Jacobian
    inverse keep the output finite, and their flags ride along for telemetry.
    """
    e = np.asarray(x, dtype=float) - np.asarray(x_d, dtype=float)
    z_hat, clamped = cam_mod.estimate_depth(est, r, cfg.z_floor)
    J_s_hat, J_s_pinv, img_damped = cam_mod.estimate_image_jacobian(
        est, x, cfg.sigma_floor
    )
    u_T = -z_hat * (bundle.J_pinv @ (J_s_pinv @ (cfg.kp * e)))
    return TaskTermResult(u_T, z_hat, clamped, J_s_hat, J_s_pinv, img_damped)


def nullspace_term(bundle: JacobianBundle, intent: HumanIntent, cfg: ControllerConfig) -> np.ndarray:
    """Null-space term u_N = N (d / c_d); zero intent yields zero command."""
    return bundle.N @ (intent.d / cfg.c_d)


def adapt_step(
    est: EstimatorState,
    x_dot: np.ndarray,
    r_dot: np.ndarray,
    x: np.ndarray,
    x_d: np.ndarray,
    r: np.ndarray,
    cfg: ControllerConfig,
    dt: float,
) -> EstimatorState:
    """Explicit-Euler update of both estimates over one control period.

    The laws are driven by the pixel error, so a converged task (x = x_d) or
    zero measured rates leave the estimates untouched. No update in ablation
    mode (adaptation_enabled = False).
    """
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    if not cfg.adaptation_enabled:
        return est
    e = np.asarray(x, dtype=float) - np.asarray(x_d, dtype=float)
    z_hat, _ = cam_mod.estimate_depth(est, r, cfg.z_floor)
    Yz = cam_mod.regressor_Yz(x_dot, r)
    Yk = cam_mod.regressor_Yk(r_dot, x, cfg.n_k)
    theta_z = est.theta_z_hat + dt * (-(1.0 / z_hat) * cfg.l_z * (Yz.T @ e))
    theta_k = est.theta_k_hat + dt * ((1.0 / z_hat) * cfg.l_k * (Yk.T @ e))
    return EstimatorState(theta_z_hat=theta_z, theta_k_hat=theta_k)


def lyapunov_value(
    e: np.ndarray,
    est: EstimatorState,
    true_params: TrueParams,
    cfg: ControllerConfig,
) -> float:
    """V = 0.5 e.e + 0.5 dk^T L_k^-1 dk + 0.5 dz^T L_z^-1 dz, d* = theta - hat."""
    e = np.asarray(e, dtype=float)
    dz = true_params.theta_z - est.theta_z_hat
    dk = true_params.theta_k - est.theta_k_hat
    return float(
        0.5 * e @ e + 0.5 * dk @ (dk / cfg.l_k) + 0.5 * dz @ (dz / cfg.l_z)
    )


def control_step(
    bundle: JacobianBundle,
    est: EstimatorState,
    x: np.ndarray,
    x_d: np.ndarray,
    r: np.ndarray,
    intent: HumanIntent,
    cfg: ControllerConfig,
    x_dot: np.ndarray,
    r_dot: np.ndarray,
    dt: float,
    true_params: Optional[TrueParams] = None,
) -> tuple[ControlOutput, EstimatorState]:
    """Full controller evaluation: u = u_T + u_N plus the estimator update.

    ``x_dot`` and ``r_dot`` are the previous-step measured rates (backward
    differences); the caller passes zeros on the first step. When TrueParams
    are supplied (test harness) the output carries the Lyapunov value.
    """
    task = task_term(bundle, est, x, x_d, r, cfg)
    u_N = nullspace_term(bundle, intent, cfg)
    u = task.u_T + u_N
    if not np.all(np.isfinite(u)):
        raise NumericalIntegrityError("non-finite control command")
    e = np.asarray(x, dtype=float) - np.asarray(x_d, dtype=float)
    null_residual = float(np.linalg.norm(bundle.N @ (cfg.c_d * u - intent.d)))
    new_est = adapt_step(est, x_dot, r_dot, x, x_d, r, cfg, dt)
    V = lyapunov_value(e, est, true_params, cfg) if true_params is not None else None
    out = ControlOutput(
        u=u,
        u_T=task.u_T,
        u_N=u_N,
        e=e,
        z_hat=task.z_hat,
        null_residual=null_residual,
        depth_clamped=task.depth_clamped,
        img_damped=task.img_damped,
        jac_damped=bundle.damped,
        V=V,
    )
    return out, new_est


def disable_adaptation(cfg: ControllerConfig) -> ControllerConfig:
    """Ablation variant of a config (adaptation off, everything else equal)."""
    return replace(cfg, adaptation_enabled=False)
