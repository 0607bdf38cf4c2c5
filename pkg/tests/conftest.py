"""Shared fixtures for the birotation test suite."""
import numpy as np
import pytest

from birotation.config import SolverConfig
from birotation.evaluation.synthgen import PoseSampler, SceneSpec, generate_scene
from birotation.geometry.pose import Intrinsics


@pytest.fixture
def intrinsics():
    return Intrinsics(fx=600.0, fy=600.0, u0=320.0, v0=320.0)


@pytest.fixture
def tight_config():
    """Tolerances tight enough to reach machine-precision residuals on exact data."""
    return SolverConfig(tol_value=1e-20, tol_rate=1e-14)


@pytest.fixture
def make_scene():
    def make(seed=0, n_points=200, **pose):
        return generate_scene(SceneSpec(n_points=n_points, seed=seed, pose=PoseSampler(**pose)))
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
