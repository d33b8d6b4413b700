import copy
import json
import logging

import numpy as np
import pytest

from ftcbf.api.barriers import QuadraticBarrier, QuadraticRegion, StackedState
from ftcbf.api.constraints import ControlAffineDynamics
from ftcbf.api.sim import SimConfig, build_scenario, run
from ftcbf.core.config import BUNDLED_SCENARIO
from ftcbf.models.scenario import load_scenario, parse_scenario


def state(*positions) -> StackedState:
    return StackedState(np.array(positions, dtype=float))


def disc(barrier_id="disc", agent=0, center=(0.0, 0.0), scale=1.0, bounded_above=1.0) -> QuadraticBarrier:
    n = len(center)
    return QuadraticBarrier(barrier_id, agent, QuadraticRegion(np.array(center), scale * np.eye(n)), bounded_above)


@pytest.fixture
def single_integrator():
    return ControlAffineDynamics.single_integrator


@pytest.fixture
def golden_data():
    return json.loads(BUNDLED_SCENARIO.read_text(encoding="utf-8"))


@pytest.fixture
def golden_model():
    return load_scenario(BUNDLED_SCENARIO)


@pytest.fixture
def golden_scenario(golden_model):
    return build_scenario(golden_model)


@pytest.fixture
def write_scenario(tmp_path):
    def write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


@pytest.fixture(scope="session")
def golden_run():
    """One full simulation of the bundled scenario shared by the slow tests."""
    model = load_scenario(BUNDLED_SCENARIO)
    scenario = build_scenario(model)
    return scenario, run(scenario, SimConfig.from_scenario(model))


# One agent shuttling between two discs; finishes one cycle in about 11 s of simulated time.
SHUTTLE = {
    "name": "shuttle",
    "agents": {"count": 1, "dimension": 2, "initial_positions": [[0.0, 0.0]]},
    "regions": [
        {"id": "E", "center": [1.0, 0.0], "shape": [4.0, 0.0, 0.0, 4.0]},
        {"id": "W", "center": [-1.0, 0.0], "shape": [4.0, 0.0, 0.0, 4.0]},
    ],
    "propositions": [{"id": "east", "region": "E", "agent": 0}, {"id": "west", "region": "W", "agent": 0}],
    "problems": [
        {"label": "go_east", "a1_false": ["east", "west"], "a2_true": ["east"]},
        {"label": "go_west", "a1_true": ["east"], "a1_false": ["west"], "a2_true": ["west"]},
    ],
    "lasso": {"suffix": ["go_east", "go_west"]},
    "params": {"gamma": 1.0, "rho": 0.5},
    "sim": {"dt": 0.02, "max_time": 60.0, "suffix_cycles_target": 1},
}


# The straight line from the start to the goal crosses the obstacle disc, so the
# agent has to go around its left side (x < -0.3) to reach the goal.
DETOUR = {
    "name": "detour",
    "agents": {"count": 1, "dimension": 2, "initial_positions": [[0.0, -2.0]]},
    "regions": [
        {"id": "G", "center": [0.0, 2.5], "shape": [1.0, 0.0, 0.0, 1.0]},
        {"id": "O", "center": [0.2, 0.0], "shape": [4.0, 0.0, 0.0, 4.0]},
    ],
    "propositions": [{"id": "goal", "region": "G", "agent": 0}, {"id": "obst", "region": "O", "agent": 0}],
    "problems": [{"label": "around", "a1_false": ["goal", "obst"], "a2_true": ["goal"], "a2_false": ["obst"]}],
    "lasso": {"suffix": ["around"]},
    "params": {"gamma": 4.0, "rho": 0.5},
    "sim": {"dt": 0.01, "max_time": 30.0, "suffix_cycles_target": 1},
}


@pytest.fixture
def detour_model():
    return parse_scenario(copy.deepcopy(DETOUR))


@pytest.fixture
def detour(detour_model):
    return build_scenario(detour_model)


@pytest.fixture
def shuttle_data():
    return copy.deepcopy(SHUTTLE)


@pytest.fixture
def shuttle_model(shuttle_data):
    return parse_scenario(shuttle_data)


@pytest.fixture
def shuttle(shuttle_model):
    return build_scenario(shuttle_model)


@pytest.fixture(autouse=True)
def detach_log_handler():
    """configure_logging binds its handler to the sys.stderr of the test that first called it."""
    yield
    package_logger = logging.getLogger("ftcbf")
    for handler in list(package_logger.handlers):
        if getattr(handler, "_ftcbf", False):
            package_logger.removeHandler(handler)
