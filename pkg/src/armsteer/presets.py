"""Built-in robot and camera presets used by scenarios and tests."""

from __future__ import annotations

import numpy as np

from .camera import CameraModel
from .kinematics import DHRow, RobotModel

# Standard DH table of the 6-DOF UR5 (a, alpha, d), meters/radians.
_UR5_DH = (
    DHRow(a=0.0, alpha=np.pi / 2, d=0.089159),
    DHRow(a=-0.425, alpha=0.0, d=0.0),
    DHRow(a=-0.39225, alpha=0.0, d=0.0),
    DHRow(a=0.0, alpha=np.pi / 2, d=0.10915),
    DHRow(a=0.0, alpha=-np.pi / 2, d=0.09465),
    DHRow(a=0.0, alpha=0.0, d=0.0823),
)

# Elbow-up pose away from the stretched-out singularity of q = 0.
UR5_HOME_Q = np.array([0.0, -1.1, 1.4, -1.6, -1.4, 0.4])

# Default start poses for the shipped scenarios, chosen for good conditioning
# (sigma_min ~ 0.29-0.31) and a feature depth nearly flat across the start
# region so randomized depth estimates stay positive.
TASK1_START_Q = np.array([-0.11, -1.33, -2.21, -2.28, -2.98, -2.08])
TASK2_START_Q = np.array([0.48, -1.26, -1.99, -2.42, -2.35, -1.61])


def ur5(feature_offset=(0.0, 0.0, 0.0)) -> RobotModel:
    """6-DOF UR5-like preset; the feature marker sits at the tool origin."""
    return RobotModel(dh=_UR5_DH, feature_offset=np.asarray(feature_offset, float),
                      name="ur5")


def planar_arm(link_lengths=(1.0, 1.0, 1.0)) -> RobotModel:
    """Planar chain with all joint axes along z; handy for hand-checkable tests."""
    rows = tuple(DHRow(a=float(L), alpha=0.0, d=0.0) for L in link_lengths)
    return RobotModel(dh=rows, name=f"planar{len(rows)}r")


def look_at_projection(
    position: np.ndarray,
    target: np.ndarray,
    focal_px: float,
    principal_point: tuple[float, float],
    up=(0.0, 0.0, 1.0),
) -> np.ndarray:
    """3x4 projection K [R | -R c] for a camera at ``position`` looking at ``target``.

    The depth row keeps its unit rotation part, so z(r) is the metric distance
    along the optical axis.
    """
    c = np.asarray(position, dtype=float)
    w = np.asarray(target, dtype=float)
    forward = w - c
    forward = forward / np.linalg.norm(forward)
    up = np.asarray(up, dtype=float)
    right = np.cross(forward, up)
    nr = np.linalg.norm(right)
    if nr < 1e-9:
        raise ValueError("camera optical axis is parallel to the up vector")
    right /= nr
    down = np.cross(forward, right)
    R = np.vstack([right, down, forward])
    K = np.array(
        [
            [focal_px, 0.0, principal_point[0]],
            [0.0, focal_px, principal_point[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    return K @ np.hstack([R, (-R @ c)[:, None]])


def default_camera() -> CameraModel:
    """Fixed workspace camera observing the UR5 preset's reachable volume.

    Aimed near the robot base so the depth row projects weakly onto the
    workspace (depth ~ its constant term), which keeps randomly perturbed
    depth estimates positive.
    """
    P = look_at_projection(
        position=(2.9, 1.8, 1.5),
        target=(0.15, -0.1, 0.3),
        focal_px=3600.0,
        principal_point=(720.0, 540.0),
    )
    return CameraModel(P=P, image_size=(1440, 1080))


ROBOT_PRESETS = {
    "ur5": ur5,
    "planar3r": planar_arm,
}
