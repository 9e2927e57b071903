import numpy as np
import pytest

from e2w.geometry import CameraView, ObjectInstance, Scene, look_at

IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def identity_view(agent_id=0, **kw):
    """Camera at the world origin looking down world +z."""
    return CameraView(agent_id, IDENTITY, (0.0, 0.0, 0.0), **kw)


def top_down_view(agent_id, eye, principal=(320.0, 240.0), resolution=(640, 480)):
    """Camera looking straight down; image x = world x, image y = world -y."""
    R = ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0))
    t = tuple(-np.asarray(R) @ np.asarray(eye, dtype=float))
    return CameraView(agent_id, R, t, principal=principal, resolution=resolution)


def box_obj(oid, name, x, y, hx=0.04, hy=0.04, hz=0.03):
    return ObjectInstance(oid, name, (x, y, hz), (hx, hy, hz))


def front_view(agent_id, x_target, eye_x=None, dist=0.6, height=0.45):
    """Camera in front of the table (y < 0) aimed at (x_target, 0, 0)."""
    ex = x_target if eye_x is None else eye_x
    return look_at(agent_id, (ex, -dist, height), (x_target, 0.0, 0.0))


@pytest.fixture
def pizza_scene():
    """Three pizzas; the middle one is seen by both cameras."""
    objs = (
        box_obj(0, "pizza", -0.5, 0.0),
        box_obj(1, "pizza", 0.0, 0.0),
        box_obj(2, "pizza", 0.5, 0.0),
    )
    views = (front_view(0, -0.25), front_view(1, 0.25))
    return Scene(objs, views, seed=1)
