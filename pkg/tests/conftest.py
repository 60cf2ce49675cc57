import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "grace", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "grace"))

_ACCEPTANCE = []


def record_acceptance(line: str):
    _ACCEPTANCE.append(line)
    print(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit_field(rng, grid, Ms=1.0):
    from grace.mesh import VectorField

    v = rng.standard_normal((3,) + grid.shape)
    v *= Ms / np.sqrt((v * v).sum(axis=0))
    return VectorField(grid, v)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def precession_period(dt, H=1e5, Ms=8e5):
    """Measured and analytic period of an undamped single cell precessing about z.

    Starts along x and times the first two zero crossings of Mx (T/4 and 3T/4),
    interpolating linearly inside the step.
    """
    import math

    from grace.constants import GAMMA, MU0
    from grace.dynamics import SimState, euler_step
    from grace.local_fields import FieldSchedule
    from grace.mesh import Grid, MaterialParams, VectorField

    g = Grid(1, 1, 1)
    state = SimState(VectorField.uniform(g, (Ms, 0, 0)), MaterialParams(Ms=Ms, alpha=0.0), None,
                     FieldSchedule.constant((0, 0, H)))
    T = 2 * math.pi / (GAMMA * MU0 * H)
    crossings = []
    prev = Ms
    while len(crossings) < 2:
        euler_step(state, dt)
        mx = state.m.data[0, 0, 0, 0]
        if (prev > 0) != (mx > 0):
            crossings.append(state.t - dt + dt * prev / (prev - mx))
        prev = mx
    return 2 * (crossings[1] - crossings[0]), T
