import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


class ScriptedRng:
    """Stands in for a numpy Generator: random() replays a fixed script, then 0.99."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0) if self.values else 0.99

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * 0.5


def kitchen_spec(**overrides) -> dict:
    """One room: a table with a cup, a knife and an egg, and a closed cabinet."""
    spec = {
        "name": "kitchen-test",
        "rooms": [
            {"name": "kitchen", "bounds": [0, 0, 0, 6, 6, 3], "viewpoint": [3, 0.5, 1.5]},
            {"name": "hall", "bounds": [6, 0, 0, 10, 6, 3], "viewpoint": [8, 0.5, 1.5]},
        ],
        "objects": [
            {"id": "table", "type": "surface", "room": "kitchen", "centroid": [3, 2.5, 0.375], "size": [1.4, 0.8, 0.75]},
            {"id": "cup", "type": "item", "room": "kitchen", "centroid": [2.6, 2.5, 0.8], "size": [0.08, 0.08, 0.1]},
            {"id": "knife", "type": "tool", "room": "kitchen", "centroid": [3.0, 2.5, 0.76], "size": [0.2, 0.03, 0.02]},
            {"id": "egg", "type": "item", "room": "kitchen", "centroid": [3.4, 2.5, 0.785], "size": [0.05, 0.05, 0.07]},
            {"id": "cabinet", "type": "container", "room": "kitchen", "centroid": [5, 5, 0.5], "size": [0.8, 0.6, 1.0]},
            {"id": "lamp", "type": "item", "room": "hall", "centroid": [8, 3, 0.2], "size": [0.2, 0.2, 0.4]},
        ],
        "articulation": {"cabinet": False},
        "robot": {"room": "kitchen"},
        "goal": ["halved(egg)"],
    }
    spec.update(overrides)
    return spec


@pytest.fixture
def kitchen():
    from tamploop.worldsim import parse_scenario

    return parse_scenario(kitchen_spec())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
