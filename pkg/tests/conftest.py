import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mixfield import ArrayGeometry, Scenario, UserSpec

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

NOISE = 1e-11  # -80 dBm
FREQ = 30e9


def desk_range(r, n):
    """Near-user range scaled by the aperture ratio (N - 1) / 255."""
    return r * (n - 1) / 255


def mixed_two_user(n, theta_far=0.2, r_near=5.0, total_power=1.0):
    geom = ArrayGeometry(n, FREQ)
    users = [UserSpec(0.0, desk_range(r_near, n)), UserSpec(theta_far, 150.0)]
    return Scenario.build(geom, users, total_power, NOISE)


def five_user(n, count=5, total_power=1.0, seed=0):
    rng = np.random.default_rng(seed)
    base = [(-0.3, 5.82), (0.17, 6.21), (-0.22, 150.0), (0.09, 175.0), (0.25, 200.0)][:count]
    users = [UserSpec(t + rng.uniform(-0.02, 0.02), desk_range(r, n) if r < 100 else r)
             for t, r in base]
    return Scenario.build(ArrayGeometry(n, FREQ), users, total_power, NOISE)


@pytest.fixture
def two_user16():
    return mixed_two_user(16)


@pytest.fixture
def three_user32():
    return five_user(32, count=3)


def random_gains(rng, K):
    """Positive per-watt gain matrix with a dominant diagonal (normalized by noise)."""
    G = rng.uniform(0.05, 1.0, (K, K))
    G[np.diag_indices(K)] = rng.uniform(2.0, 10.0, K)
    return G


# acceptance lines, printed once at the end of the session
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)
        print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")
