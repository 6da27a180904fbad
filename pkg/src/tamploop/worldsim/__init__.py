"""Stochastic household world: ground truth, situation injection, and viewpoint-dependent observation."""

from .geometry import DIRECTIONS, UnreachableDirection, clear_fraction, move_camera
from .scenario import (
    SCENARIO_SCHEMA,
    Scenario,
    ScenarioError,
    bundled_dir,
    bundled_fixtures,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    read_scenario,
    resolve_scenario_path,
)
from .situations import Situation, SituationTable
from .world import (
    NO_FREE_SPACE,
    ExecutionOutcome,
    InapplicableAction,
    Observation,
    RobotState,
    Room,
    ScriptedEvent,
    World,
)


def execute(world: World, action, table: SituationTable) -> ExecutionOutcome:
    return world.execute(action, table)


def observe(world: World, target: str | None = None) -> Observation:
    return world.observe(target)


def move_viewpoint(world: World, direction: str) -> World:
    return world.move_viewpoint(direction)


def ground_truth_eval(world: World, atom) -> bool:
    return world.ground_truth_eval(atom)
