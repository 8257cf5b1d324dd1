"""Serial-chain kinematics: forward map, position Jacobian, pseudo-inverse,
and null-space projector.

The robot is described by standard DH rows (revolute joints only). The task
feature is a point: the end-effector origin plus a fixed offset expressed in
the end-effector frame, so the Jacobian here is the 3xn position Jacobian of
that point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SingularityError

TASK_DIM = 3  # point feature in Cartesian space

DEFAULT_DAMPING_THRESHOLD = 1e-6


@dataclass(frozen=True)
class DHRow:
    """One standard DH row: Rz(q + theta) Tz(d) Tx(a) Rx(alpha)."""

    a: float
    alpha: float
    d: float
    theta: float = 0.0


@dataclass(frozen=True)
class RobotModel:
    """Serial chain of revolute joints plus the tracked feature point.

    ``feature_offset`` is the feature position in the end-effector frame
    (meters). Redundancy (n > 3) is required by the controller, not here:
    plain kinematics work for any chain length.
    """

    dh: tuple[DHRow, ...]
    feature_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    name: str = "robot"

    def __post_init__(self):
        object.__setattr__(self, "dh", tuple(self.dh))
        offset = np.asarray(self.feature_offset, dtype=float)
        if offset.shape != (3,):
            raise ConfigurationError("feature_offset must be a 3-vector")
        object.__setattr__(self, "feature_offset", offset)
        if self.n == 0:
            raise ConfigurationError("robot needs at least one joint")
        # cached per-row constants for the hot kinematics path
        object.__setattr__(self, "_a", np.array([r.a for r in self.dh]))
        object.__setattr__(self, "_d", np.array([r.d for r in self.dh]))
        object.__setattr__(self, "_off", np.array([r.theta for r in self.dh]))
        object.__setattr__(self, "_ca", np.cos([r.alpha for r in self.dh]))
        object.__setattr__(self, "_sa", np.sin([r.alpha for r in self.dh]))

    @property
    def n(self) -> int:
        return len(self.dh)

    @property
    def is_redundant(self) -> bool:
        return self.n > TASK_DIM


@dataclass(frozen=True)
class JointState:
    """Joint configuration with an optional velocity and advisory limit box.

    Limits are flagged, never enforced.
    """

    q: np.ndarray
    qdot: np.ndarray | None = None
    limits: np.ndarray | None = None  # (n, 2) [min, max], advisory

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or not np.all(np.isfinite(q)):
            raise ConfigurationError("q must be a finite vector")
        object.__setattr__(self, "q", q)
        if self.qdot is not None:
            qd = np.asarray(self.qdot, dtype=float)
            if qd.shape != q.shape or not np.all(np.isfinite(qd)):
                raise ConfigurationError("qdot must match q and be finite")
            object.__setattr__(self, "qdot", qd)

    def limit_violations(self) -> np.ndarray:
        """Boolean mask of joints outside the advisory box (all False if unset)."""
        if self.limits is None:
            return np.zeros(self.q.shape, dtype=bool)
        lo, hi = self.limits[:, 0], self.limits[:, 1]
        return (self.q < lo) | (self.q > hi)


@dataclass(frozen=True)
class JacobianBundle:
    """Jacobian with its pseudo-inverse and null-space projector.

    When ``damped`` is False the bundle satisfies J J+ = I, N = I - J+ J,
    J N = 0, N J+ = 0 and N N = N to 1e-9 in max-norm.
    """

    J: np.ndarray
    J_pinv: np.ndarray
    N: np.ndarray
    sigma_min: float
    damped: bool


def _dh_transform(row: DHRow, q: float) -> np.ndarray:
    ct, st = np.cos(q + row.theta), np.sin(q + row.theta)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_q(model: RobotModel, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n,):
        raise ConfigurationError(
            f"q has shape {q.shape}, robot has {model.n} joints"
        )
    if not np.all(np.isfinite(q)):
        raise ConfigurationError("q must be finite")
    return q


def _chain(model: RobotModel, q: np.ndarray):
    """One walk of the chain: joint origins (n,3), joint axes (n,3), tip (R, p).

    Joint i rotates about the z axis of frame i-1, located at that frame's
    origin. Incremental rotation/translation update avoids 4x4 products.
    """
    n = model.n
    origins = np.empty((n, 3))
    axes = np.empty((n, 3))
    R = np.eye(3)
    p = np.zeros(3)
    ct_all = np.cos(q + model._off)
    st_all = np.sin(q + model._off)
    for i in range(n):
        origins[i] = p
        axes[i] = R[:, 2]
        ct, st = ct_all[i], st_all[i]
        ca, sa = model._ca[i], model._sa[i]
        a, d = model._a[i], model._d[i]
        R_loc = np.array(
            [[ct, -st * ca, st * sa],
             [st, ct * ca, -ct * sa],
             [0.0, sa, ca]]
        )
        p = p + R @ np.array([a * ct, a * st, d])
        R = R @ R_loc
    return origins, axes, R, p


def frame_transforms(model: RobotModel, q: np.ndarray) -> list[np.ndarray]:
    """Cumulative base-to-frame transforms T_0 .. T_n (T_0 = identity)."""
    q = _check_q(model, q)
    out = [np.eye(4)]
    T = np.eye(4)
    for row, qi in zip(model.dh, q):
        T = T @ _dh_transform(row, qi)
        out.append(T.copy())
    return out


def joint_origins(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """(n+1, 3) origins of frames 0..n; joint i rotates about frame i-1's z axis."""
    return np.array([T[:3, 3] for T in frame_transforms(model, q)])


def forward_kinematics(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Feature point position r = h(q) in the base frame."""
    q = _check_q(model, q)
    _, _, R, p = _chain(model, q)
    return p + R @ model.feature_offset


def jacobian(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Analytic 3xn position Jacobian of the feature point.

    Column i is z_i x (r - p_i) with z_i the joint-i axis and p_i its origin,
    both in the base frame.
    """
    q = _check_q(model, q)
    origins, axes, R, p = _chain(model, q)
    r = p + R @ model.feature_offset
    lever = r[None, :] - origins
    J = np.empty((3, model.n))
    J[0] = axes[:, 1] * lever[:, 2] - axes[:, 2] * lever[:, 1]
    J[1] = axes[:, 2] * lever[:, 0] - axes[:, 0] * lever[:, 2]
    J[2] = axes[:, 0] * lever[:, 1] - axes[:, 1] * lever[:, 0]
    return J


def fk_and_jacobian(model: RobotModel, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(r, J) in one chain walk; the simulator's per-step workhorse."""
    q = _check_q(model, q)
    origins, axes, R, p = _chain(model, q)
    r = p + R @ model.feature_offset
    lever = r[None, :] - origins
    J = np.empty((3, model.n))
    J[0] = axes[:, 1] * lever[:, 2] - axes[:, 2] * lever[:, 1]
    J[1] = axes[:, 2] * lever[:, 0] - axes[:, 0] * lever[:, 2]
    J[2] = axes[:, 0] * lever[:, 1] - axes[:, 1] * lever[:, 0]
    return r, J


def joint_point_jacobian(model: RobotModel, q: np.ndarray, joint_index: int) -> np.ndarray:
    """Position Jacobian of the joint-``joint_index`` origin w.r.t. joints 1..joint_index.

    1-based ``joint_index``; the returned matrix is 3 x joint_index (its last
    column is zero since a revolute joint does not translate its own origin).
    """
    if not 1 <= joint_index <= model.n:
        raise ConfigurationError(
            f"joint_index must be in 1..{model.n}, got {joint_index}"
        )
    frames = frame_transforms(model, q)
    p_target = frames[joint_index - 1][:3, 3]
    J = np.empty((3, joint_index))
    for i in range(joint_index):
        z_i = frames[i][:3, 2]
        p_i = frames[i][:3, 3]
        J[:, i] = np.cross(z_i, p_target - p_i)
    return J


def pseudo_inverse(
    J: np.ndarray, damping_threshold: float = DEFAULT_DAMPING_THRESHOLD
) -> tuple[np.ndarray, float, bool]:
    """Right pseudo-inverse J+ = J^T (J J^T)^-1 with a damped fallback.

    Returns (J_pinv, sigma_min, damped). Exact Moore-Penrose via SVD while
    sigma_min >= damping_threshold; otherwise damped least squares
    J^T (J J^T + lambda^2 I)^-1 with lambda = damping_threshold, which keeps
    the output finite through singularities (flagged for telemetry).
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise ConfigurationError("J must be a matrix")
    if not np.any(J):
        raise SingularityError("all-zero Jacobian has no usable pseudo-inverse")
    m = J.shape[0]
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    sigma_min = float(s[-1]) if len(s) >= m else 0.0
    if sigma_min >= damping_threshold:
        inv_s = 1.0 / s
        damped = False
    else:
        # J^T (J J^T + lambda^2 I)^-1 expressed through the same SVD
        inv_s = s / (s**2 + damping_threshold**2)
        damped = True
    J_pinv = (Vt.T * inv_s) @ U.T
    return J_pinv, sigma_min, damped


def null_projector(J: np.ndarray, J_pinv: np.ndarray) -> np.ndarray:
    """Null-space projector N = I - J+ J."""
    J = np.asarray(J, dtype=float)
    J_pinv = np.asarray(J_pinv, dtype=float)
    n = J.shape[1]
    if J_pinv.shape != (n, J.shape[0]):
        raise ConfigurationError(
            f"J_pinv shape {J_pinv.shape} inconsistent with J shape {J.shape}"
        )
    return np.eye(n) - J_pinv @ J


def bundle_from_jacobian(
    J: np.ndarray, damping_threshold: float = DEFAULT_DAMPING_THRESHOLD
) -> JacobianBundle:
    """Pseudo-inverse and projector for an already-computed Jacobian."""
    J_pinv, sigma_min, damped = pseudo_inverse(J, damping_threshold)
    return JacobianBundle(J=J, J_pinv=J_pinv, N=null_projector(J, J_pinv),
                          sigma_min=sigma_min, damped=damped)


def jacobian_bundle(
    model: RobotModel,
    q: np.ndarray,
    damping_threshold: float = DEFAULT_DAMPING_THRESHOLD,
) -> JacobianBundle:
    """Jacobian, pseudo-inverse, and projector at ``q`` in one pass."""
    return bundle_from_jacobian(jacobian(model, q), damping_threshold)
