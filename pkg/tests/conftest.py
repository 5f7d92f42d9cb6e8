"""Shared fixtures for the hybridsub test suite."""

import os
import sys

import numpy as np
import pytest

# Run from a source checkout without installing
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from hybridsub.core.hsl import HslConfig  # noqa: E402
from hybridsub.core.synth import SynthSpec, generate_hybrid  # noqa: E402
from hybridsub.storage.database import close_all  # noqa: E402
from hybridsub.utils.config import Settings  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_spec():
    return SynthSpec(n=20, p=30, k=3, sigma2=0.01, theta=(0.7, 0.3, 0.0), seed=7)


@pytest.fixture
def small_instance(small_spec):
    return generate_hybrid(small_spec)


@pytest.fixture
def quick_config():
    return HslConfig(k=3, lambda_=0.01, max_outer_iters=40, max_inner_iters=200, max_path_steps=200)


@pytest.fixture
def quick_settings():
    """Settings for a tiny problem with short solver and grid budgets."""
    settings = Settings()
    settings.set_category("synth", {"n": 20, "p": 30, "k": 3, "sigma2": 0.01,
                                    "theta": [0.7, 0.3, 0.0], "seed": 7})
    settings.set_category("hsl", {"k": 3, "max_outer_iters": 30, "max_inner_iters": 150,
                                  "max_path_steps": 150})
    settings.set_category("rpca", {"max_iters": 300})
    settings.set_category("op", {"max_iters": 300, "bisect_iters": 12})
    settings.set_category("harness", {"trials": 2, "methods": ["hsl", "pca", "rpca", "op"]})
    settings.set_category("sweep", {
        "noise_levels": [0.0, 0.5],
        "k_values": [2, 3],
        "theta2_values": [0.2],
        "phase_k_values": [2],
        "phase_s_values": [0, 4],
        "pr_scales": [0.1, 10.0],
        "spectrum_theta1_values": [1.0, 0.5],
        "gamma_fractions": [0.0, 0.5, 1.0],
    })
    return settings


@pytest.fixture(autouse=True)
def _close_databases():
    yield
    close_all()
