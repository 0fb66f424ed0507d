import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sinusoid_curve(m: int, dim: int = 3, duration: float = 1.0):
    """Smooth analytic test curve with a nowhere-vanishing velocity."""
    from motionmanifold.curve_core import SampledCurve
    t = np.linspace(0.0, duration, m)[:, None] / duration
    k = np.arange(dim)[None, :]
    samples = np.sin(2 * np.pi * (t + k / dim)) + 0.5 * t
    return SampledCurve(samples, duration)


def closed_curve(m: int, dim: int = 3, rng=None, bump: float = 0.0):
    """Closed smooth loop in R^dim, optionally perturbed by a random smooth periodic bump."""
    from motionmanifold.curve_core import SampledCurve
    t = np.linspace(0.0, 1.0, m)[:, None]
    base = np.hstack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)] + [0.3 * np.sin(4 * np.pi * t + j)
                                                                      for j in range(dim - 2)])
    if bump and rng is not None:
        for h in (1, 2, 3):
            a = rng.normal(size=(1, dim)) * bump / h
            p = rng.uniform(0, 2 * np.pi, size=(1, dim))
            base = base + a * np.sin(2 * np.pi * h * t + p)
    return SampledCurve(base, 1.0)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
