"""Pinhole eye-to-hand camera and the linear-in-parameters machinery.

The ground-truth camera is a 3x4 projection matrix P. Splitting P as

    P = [ M  m4 ]      M: 2x3, m4: 2,  a: 3, b: scalar
        [ a^T  b ]

gives depth z(r) = a.r + b and pixel x = (M r + m4) / z. Differentiating,

    z(r) xdot = (M - x a^T) rdot = J_s(r) rdot,

and both sides are linear in camera parameters: z xdot = Y_z(xdot, r) theta_z
with theta_z = (a, b), and J_s rdot = Y_k(rdot, x) theta_k. Two theta_k
layouts are supported and are selected by vector length:

    9  (shared depth row):  theta_k = (M row 1, M row 2, a)
    12 (per-pixel-row):     theta_k = (M row 1, a_1, M row 2, a_2)

The true camera satisfies a_1 = a_2 = a, so the 12-form is over-parameterized
but satisfies the same identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BehindCameraError, ConfigurationError

DEPTH_EPS = 1e-9  # projection validity floor, distinct from the control clamp

THETA_K_SHARED = 9
THETA_K_PER_ROW = 12


@dataclass(frozen=True)
class CameraModel:
    """Ground-truth 3x4 projection matrix plus the sensor size in pixels.

    Measurements are continuous by default; ``quantize`` rounds to whole
    pixels and ``noise_px`` adds uniform noise, for robustness experiments.
    """

    P: np.ndarray
    image_size: tuple[int, int] = (1440, 1080)
    quantize: bool = False
    noise_px: float = 0.0

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (3, 4):
            raise ConfigurationError(f"P must be 3x4, got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ConfigurationError("P must be finite")
        if self.noise_px < 0:
            raise ConfigurationError("noise_px must be non-negative")
        object.__setattr__(self, "P", P)

    @property
    def M(self) -> np.ndarray:
        return self.P[:2, :3]

    @property
    def m4(self) -> np.ndarray:
        return self.P[:2, 3]

    @property
    def a(self) -> np.ndarray:
        return self.P[2, :3]

    @property
    def b(self) -> float:
        return float(self.P[2, 3])


@dataclass(frozen=True)
class TrueParams:
    """Ground-truth parameter vectors; test-harness only, hidden from control."""

    theta_z: np.ndarray
    theta_k: np.ndarray

    @classmethod
    def from_camera(cls, cam: CameraModel, n_k: int = THETA_K_SHARED) -> "TrueParams":
        theta_z = np.concatenate([cam.a, [cam.b]])
        if n_k == THETA_K_SHARED:
            theta_k = np.concatenate([cam.M[0], cam.M[1], cam.a])
        elif n_k == THETA_K_PER_ROW:
            theta_k = np.concatenate([cam.M[0], cam.a, cam.M[1], cam.a])
        else:
            raise ConfigurationError(f"unsupported theta_k dimension {n_k}")
        return cls(theta_z=theta_z, theta_k=theta_k)


@dataclass(frozen=True)
class EstimatorState:
    """Current estimates of the depth and camera parameter vectors."""

    theta_z_hat: np.ndarray
    theta_k_hat: np.ndarray

    def __post_init__(self):
        tz = np.asarray(self.theta_z_hat, dtype=float)
        tk = np.asarray(self.theta_k_hat, dtype=float)
        if tz.shape != (4,):
            raise ConfigurationError("theta_z_hat must be a 4-vector")
        if tk.shape not in ((THETA_K_SHARED,), (THETA_K_PER_ROW,)):
            raise ConfigurationError(
                f"theta_k_hat must have length {THETA_K_SHARED} or {THETA_K_PER_ROW}"
            )
        if not (np.all(np.isfinite(tz)) and np.all(np.isfinite(tk))):
            raise ConfigurationError("estimates must be finite")
        object.__setattr__(self, "theta_z_hat", tz)
        object.__setattr__(self, "theta_k_hat", tk)

    @property
    def n_k(self) -> int:
        return len(self.theta_k_hat)


def project(cam: CameraModel, r: np.ndarray) -> tuple[np.ndarray, float]:
    """Project a base-frame point: returns (pixel, depth).

    Raises BehindCameraError when the depth is at or below the validity floor;
    scenarios are required to keep the workspace in front of the camera.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ConfigurationError("r must be a 3-vector")
    z = float(cam.a @ r + cam.b)
    if z <= DEPTH_EPS:
        raise BehindCameraError(f"feature depth {z:.4g} is not in front of the camera")
    x = (cam.M @ r + cam.m4) / z
    return x, z


def measure_pixel(cam: CameraModel, x: np.ndarray,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Apply the camera's measurement options to an ideal pixel.

    Noise is drawn first (needs ``rng`` when enabled), then quantization
    rounds to whole pixels. With both options off this is the identity.
    """
    x = np.asarray(x, dtype=float)
    if cam.noise_px > 0.0:
        if rng is None:
            raise ConfigurationError("pixel noise requires a seeded generator")
        x = x + rng.uniform(-cam.noise_px, cam.noise_px, size=2)
    if cam.quantize:
        x = np.round(x)
    return x


def true_image_jacobian(cam: CameraModel, r: np.ndarray) -> np.ndarray:
    """J_s(r) = M - x a^T, satisfying z(r) xdot = J_s(r) rdot."""
    x, _ = project(cam, r)
    return cam.M - np.outer(x, cam.a)


def regressor_Yz(x_dot: np.ndarray, r: np.ndarray) -> np.ndarray:
    """2x4 depth regressor: Y_z theta_z = z(r) xdot for the true (a, b)."""
    x_dot = np.asarray(x_dot, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.outer(x_dot, np.concatenate([r, [1.0]]))


def regressor_Yk(r_dot: np.ndarray, x: np.ndarray, n_k: int = THETA_K_SHARED) -> np.ndarray:
    """2 x n_k camera regressor: Y_k theta_k = J_s(r) rdot for the true theta_k.

    Uses the measured pixel x, which the virtual camera always provides.
    """
    r_dot = np.asarray(r_dot, dtype=float)
    x = np.asarray(x, dtype=float)
    Y = np.zeros((2, n_k))
    if n_k == THETA_K_SHARED:
        Y[0, 0:3] = r_dot
        Y[1, 3:6] = r_dot
        Y[0, 6:9] = -x[0] * r_dot
        Y[1, 6:9] = -x[1] * r_dot
    elif n_k == THETA_K_PER_ROW:
        Y[0, 0:3] = r_dot
        Y[0, 3:6] = -x[0] * r_dot
        Y[1, 6:9] = r_dot
        Y[1, 9:12] = -x[1] * r_dot
    else:
        raise ConfigurationError(f"unsupported theta_k dimension {n_k}")
    return Y


def estimate_depth(est: EstimatorState, r: np.ndarray, z_floor: float = 0.05) -> tuple[float, bool]:
    """Estimated depth zhat = theta_z_hat . (r, 1), clamped from below.

    Returns (zhat, clamped). The clamp keeps the adaptation laws (which divide
    by zhat) finite; the event is flagged for telemetry.
    """
    if z_floor <= 0:
        raise ConfigurationError("z_floor must be positive")
    r = np.asarray(r, dtype=float)
    raw = float(est.theta_z_hat @ np.concatenate([r, [1.0]]))
    if raw < z_floor:
        return z_floor, True
    return raw, False


def reconstruct_image_jacobian(theta_k_hat: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rebuild Jhat_s from a theta_k estimate at the measured pixel x.

    Consistent with regressor_Yk for any estimate: Jhat_s rdot = Y_k theta_hat.
    """
    theta_k_hat = np.asarray(theta_k_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(theta_k_hat) == THETA_K_SHARED:
        M_hat = theta_k_hat[:6].reshape(2, 3)
        a_hat = np.vstack([theta_k_hat[6:9], theta_k_hat[6:9]])
    elif len(theta_k_hat) == THETA_K_PER_ROW:
        M_hat = np.vstack([theta_k_hat[0:3], theta_k_hat[6:9]])
        a_hat = np.vstack([theta_k_hat[3:6], theta_k_hat[9:12]])
    else:
        raise ConfigurationError(f"unsupported theta_k dimension {len(theta_k_hat)}")
    return M_hat - x[:, None] * a_hat


def estimate_image_jacobian(
    est: EstimatorState, x: np.ndarray, sigma_floor: float = 1e-6
) -> tuple[np.ndarray, np.ndarray, bool]:
    """(Jhat_s, Jhat_s+, damped) at the measured pixel.

    The pseudo-inverse falls back to damped least squares when the smaller
    singular value drops below sigma_floor, so degenerate estimates (even
    theta_k_hat = 0) stay finite.
    """
    J_hat = reconstruct_image_jacobian(est.theta_k_hat, x)
    U, s, Vt = np.linalg.svd(J_hat, full_matrices=False)
    if s[-1] >= sigma_floor:
        inv_s = 1.0 / s
        damped = False
    else:
        inv_s = s / (s**2 + sigma_floor**2)
        damped = True
    J_pinv = (Vt.T * inv_s) @ U.T
    return J_hat, J_pinv, damped
