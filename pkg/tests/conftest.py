import math

import pytest

from vesseltrack.measurements import LidarPose
from vesseltrack.simulator import (
    CameraSimConfig,
    ClockConfig,
    DetectCurve,
    LidarSimConfig,
    ScenarioConfig,
)


def small_scenario(**kw):
    """Short straight run past a LiDAR at the origin, inside Zone 1."""
    base = dict(
        name="unit",
        seed=11,
        waypoints=((0.0, 20.0, -40.0), (30.0, 20.0, 50.0)),
        lidar_pose=LidarPose((0.0, 0.0), 0.0),
        lidar=LidarSimConfig(clutter_rate=0.02, clock=ClockConfig(0.3, (5e-5,), 10.0)),
        camera=CameraSimConfig(
            position=(-150.0, 0.0, 60.0), yaw=0.0, pitch=math.radians(20.0),
            clutter_rate=0.3, clock=ClockConfig(-0.5, (-3e-5,), 10.0),
        ),
        surveillance=(-100.0, 200.0, -100.0, 100.0),
    )
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture
def scenario():
    return small_scenario()


# one line per acceptance criterion, repeated in the terminal summary so the
# verdicts stay visible when output capture is on
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
