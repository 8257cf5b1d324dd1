from pathlib import Path

import numpy as np
import pytest

from armsteer import presets
from armsteer.camera import CameraModel
from armsteer.presets import look_at_projection
from armsteer.scenario import parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(scope="session")
def ur5():
    return presets.ur5()


@pytest.fixture(scope="session")
def planar3r():
    return presets.planar_arm((1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def camera():
    return presets.default_camera()


@pytest.fixture(scope="session")
def task1_scenario():
    return parse_scenario(SCENARIO_DIR / "task1.yaml")


@pytest.fixture(scope="session")
def task2_scenario():
    return parse_scenario(SCENARIO_DIR / "task2.yaml")


def random_camera(rng) -> CameraModel:
    """A ground-truth camera with randomized pose and intrinsics."""
    azimuth = rng.uniform(0, 2 * np.pi)
    distance = rng.uniform(1.5, 3.5)
    height = rng.uniform(0.5, 2.0)
    position = np.array([distance * np.cos(azimuth), distance * np.sin(azimuth),
                         height])
    target = rng.uniform(-0.2, 0.2, size=3) + np.array([0.0, 0.0, 0.3])
    P = look_at_projection(
        position=position,
        target=target,
        focal_px=rng.uniform(400, 2000),
        principal_point=(rng.uniform(500, 900), rng.uniform(400, 700)),
    )
    return CameraModel(P=P)


def random_point_in_front(cam: CameraModel, rng, z_min=0.3) -> np.ndarray:
    for _ in range(100):
        r = rng.uniform(-0.7, 0.7, size=3) + np.array([0.0, 0.0, 0.3])
        if cam.a @ r + cam.b > z_min:
            return r
    raise RuntimeError("could not sample a point in front of the camera")


def nonsingular_ur5_q(rng, model, min_sigma=0.05) -> np.ndarray:
    from armsteer.kinematics import jacobian

    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, size=model.n)
        sigma = np.linalg.svd(jacobian(model, q), compute_uv=False)[-1]
        if sigma > min_sigma:
            return q
    raise RuntimeError("could not sample a nonsingular configuration")
