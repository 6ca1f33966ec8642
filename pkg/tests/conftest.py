import numpy as np
import pytest

from invariance_pressure.geometry import box
from invariance_pressure.reachability import LinearSystem


@pytest.fixture
def saddle():
    """x+ = diag(2, 1/2) x + (1, 1) u with |u| <= 1."""
    return LinearSystem(np.diag([2.0, 0.5]), np.array([[1.0], [1.0]]), box([-1.0], [1.0]))


def random_controllable(rng, d=2, m=1, lo=0.2, hi=3.0, hyperbolic=True):
    """Random (A, B) with planted real eigenvalues away from the unit circle."""
    from invariance_pressure.spectral import kalman_controllable

    while True:
        mods = rng.uniform(lo, hi, size=d)
        if hyperbolic and np.any(np.abs(mods - 1) < 0.15):
            continue
        signs = rng.choice([-1.0, 1.0], size=d)
        T = rng.normal(size=(d, d))
        if abs(np.linalg.det(T)) < 0.3:
            continue
        A = T @ np.diag(signs * mods) @ np.linalg.inv(T)
        B = rng.normal(size=(d, m))
        if kalman_controllable(A, B)["controllable"] and np.linalg.cond(T) < 20:
            return A, B


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
