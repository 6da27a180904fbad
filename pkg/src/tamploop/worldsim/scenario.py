"""Scenario files: JSON documents describing rooms, objects, articulation, events, and goal."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from ..pddl.core import Domain, Literal, PDDLError, Problem
from ..pddl.parser import load_domain, parse_literals
from ..scenegraph import SceneObject, SpatialThresholds
from .situations import SituationTable
from .world import AGENT, RobotState, Room, ScriptedEvent, World

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_BOX = {"type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "rooms", "objects", "robot"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "rooms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "bounds", "viewpoint"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "bounds": _BOX,
                    "viewpoint": _VEC3,
                    "allow_above": {"type": "boolean"},
                    "occluders": {"type": "array", "items": _BOX},
                },
            },
        },
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "type", "room", "centroid"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": "^[a-z][a-z0-9_-]*$"},
                    "type": {"type": "string"},
                    "category": {"type": "string"},
                    "room": {"type": "string"},
                    "centroid": _VEC3,
                    "size": _VEC3,
                    "bbox": _BOX,
                    "occluder": {"type": "boolean"},
                    "embedding": {"type": "array", "items": {"type": "number"}},
                },
                "oneOf": [{"required": ["size"]}, {"required": ["bbox"]}],
            },
        },
        "articulation": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "power": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "filled": {"type": "array", "items": {"type": "string"}},
        "halved": {"type": "array", "items": {"type": "string"}},
        "robot": {
            "type": "object",
            "required": ["room"],
            "additionalProperties": False,
            "properties": {
                "room": {"type": "string"},
                "held": {"type": ["string", "null"]},
                "camera": _VEC3,
            },
        },
        "situations": {
            "type": "object",
            "additionalProperties": {
                "type": "object", "additionalProperties": {"type": "number"},
            },
        },
        "situation_scale": {"type": "number", "minimum": 0},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["step", "label", "kind", "object"],
                "properties": {
                    "step": {"type": "integer", "minimum": 0},
                    "label": {"type": "string"},
                    "kind": {"enum": ["relocate", "set_open", "set_power"]},
                    "object": {"type": "string"},
                },
            },
        },
        "goal": {
            "oneOf": [
                {"type": "string"},
                {"type": "array", "items": {"type": "string"}},
            ]
        },
        "goal_text": {"type": "string"},
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "number", "minimum": 0}
                for k in ("on_gap", "on_overlap", "near_distance", "contact_tolerance")
            },
        },
        "viewing_range": {"type": "number", "exclusiveMinimum": 0},
        "drop_rule": {"enum": ["nearest_free"]},
        "recoverable": {"type": "boolean"},
        "verify": {
            "type": "object",
            "required": ["atom"],
            "properties": {
                "atom": {"type": "string"},
                "greedy_ring": {"type": "array", "items": _VEC3, "minItems": 2, "maxItems": 6},
            },
        },
    },
}


class ScenarioError(ValueError):
    """Scenario file failed schema or semantic validation."""


@dataclass
class Scenario:
    """Parsed scenario: a factory for fresh per-trial worlds."""

    name: str
    spec: dict
    domain: Domain
    table: SituationTable
    problem: Problem
    goal_text: str | None = None
    source: str | None = None
    extras: dict = field(default_factory=dict)

    def make_world(self, rng: np.random.Generator | None = None) -> World:
        # scene objects are immutable, so build them once and share across trials
        if "_objects" not in self.__dict__:
            self.__dict__["_objects"] = _build_objects(self.spec)
        return _build_world(self.spec, self.domain, rng, self.__dict__["_objects"])


def _floor_for(room: Mapping) -> dict:
    b = room["bounds"]
    return {
        "id": f"{room['name']}_floor",
        "type": "surface",
        "category": "floor",
        "room": room["name"],
        "bbox": [b[0], b[1], b[2] - 0.02, b[3], b[4], b[2]],
    }


def _object_records(spec: Mapping) -> list[dict]:
    records = [dict(o) for o in spec["objects"]]
    have_floor = {o["room"] for o in records if o.get("category") == "floor"}
    for room in spec["rooms"]:
        if room["name"] not in have_floor:
            records.append(_floor_for(room))
    return records


def _scene_object(rec: Mapping) -> SceneObject:
    kw = dict(room=rec["room"], embedding=rec.get("embedding"))
    category = rec.get("category", rec["id"])
    if "bbox" in rec:
        b = rec["bbox"]
        centroid = rec.get("centroid", [(b[i] + b[i + 3]) / 2 for i in range(3)])
        return SceneObject(rec["id"], category, tuple(centroid), tuple(b), **kw)
    return SceneObject.from_size(rec["id"], category, rec["centroid"], rec["size"], **kw)


def _build_objects(spec: Mapping) -> dict[str, SceneObject]:
    return {r["id"]: _scene_object(r) for r in _object_records(spec)}


def _build_world(spec: Mapping, domain: Domain, rng=None, objects: Mapping | None = None) -> World:
    rooms = {
        r["name"]: Room(
            r["name"], tuple(r["bounds"]), tuple(r["viewpoint"]), r.get("allow_above", True),
            np.array(r.get("occluders", []), dtype=float).reshape(-1, 6),
        )
        for r in spec["rooms"]
    }
    records = _object_records(spec)
    objects = dict(objects) if objects is not None else {r["id"]: _scene_object(r) for r in records}
    types = {r["id"]: r["type"] for r in records}
    rob = spec["robot"]
    camera = rob.get("camera", rooms[rob["room"]].viewpoint)
    robot = RobotState(rob["room"], np.array(camera, dtype=float), None, rob.get("held"))
    events = [
        ScriptedEvent(e["step"], e["label"], e["kind"],
                      {k: v for k, v in e.items() if k not in ("step", "label", "kind")})
        for e in spec.get("events", [])
    ]
    return World(
        domain, rooms, objects, types, robot,
        articulation=spec.get("articulation", {}),
        power=spec.get("power", {}),
        filled=spec.get("filled", ()),
        halved=spec.get("halved", ()),
        rng=rng,
        thresholds=SpatialThresholds.from_dict(spec.get("thresholds")),
        viewing_range=spec.get("viewing_range", 3.0),
        occluder_ids=[r["id"] for r in records if r.get("occluder")],
        events=events,
        drop_rule=spec.get("drop_rule", "nearest_free"),
    )


def _check_semantics(spec: Mapping, domain: Domain) -> None:
    room_names = [r["name"] for r in spec["rooms"]]
    if len(set(room_names)) != len(room_names):
        raise ScenarioError("duplicate room names")
    for r in spec["rooms"]:
        b = r["bounds"]
        if any(b[i] > b[i + 3] for i in range(3)):
            raise ScenarioError(f"room '{r['name']}': bounds min exceeds max")
    records = _object_records(spec)
    ids = [o["id"] for o in records]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise ScenarioError(f"duplicate object ids {sorted(dup)}")
    if AGENT in ids:
        raise ScenarioError(f"'{AGENT}' is reserved for the agent")
    types = {o["id"]: o["type"] for o in records}
    for o in records:
        if o["room"] not in room_names:
            raise ScenarioError(f"object '{o['id']}' references unknown room '{o['room']}'")
        if not domain.known_type(o["type"]):
            raise ScenarioError(f"object '{o['id']}' has unknown type '{o['type']}'")
        try:
            _scene_object(o)
        except ValueError as e:
            raise ScenarioError(str(e)) from None

    def need(obj: str, where: str, kind: str | None = None) -> None:
        if obj not in types:
            raise ScenarioError(f"{where} references unknown object '{obj}'")
        if kind is not None and not domain.is_subtype(types[obj], kind):
            raise ScenarioError(f"{where}: '{obj}' is a {types[obj]}, expected {kind}")

    for c in spec.get("articulation", {}):
        need(c, "articulation", "container")
    for d in spec.get("power", {}):
        need(d, "power", "appliance")
    for key in ("filled", "halved"):
        for o in spec.get(key, []):
            need(o, key)
    rob = spec["robot"]
    if rob["room"] not in room_names:
        raise ScenarioError(f"robot references unknown room '{rob['room']}'")
    if rob.get("held") is not None:
        need(rob["held"], "robot.held", "item")
    for e in spec.get("events", []):
        where = f"event '{e['label']}'"
        need(e["object"], where)
        for key in ("on", "inside"):
            if key in e:
                need(e[key], where)
        if e["kind"] == "set_open" and "open" not in e:
            raise ScenarioError(f"{where}: set_open needs 'open'")
        if e["kind"] == "set_power" and "power" not in e:
            raise ScenarioError(f"{where}: set_power needs 'power'")
        if e["kind"] == "relocate" and not ({"on", "inside"} & set(e) or {"centroid", "room"} <= set(e)):
            raise ScenarioError(f"{where}: relocate needs 'on', 'inside', or 'centroid'+'room'")


def _goal_literals(spec: Mapping) -> list[Literal]:
    goal = spec.get("goal", [])
    text = goal if isinstance(goal, str) else ", ".join(goal)
    return parse_literals(text) if text.strip() else []


def parse_scenario(
    spec: Mapping, domain: Domain | None = None, source: str | None = None
) -> Scenario:
    """Validate a scenario document and build its Scenario."""
    domain = domain or load_domain()
    try:
        jsonschema.validate(spec, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {path}: {e.message}") from None
    spec = json.loads(json.dumps(spec))  # private deep copy
    _check_semantics(spec, domain)

    table = SituationTable.default()
    try:
        if "situation_scale" in spec:
            table = table.scaled(spec["situation_scale"])
        if spec.get("situations"):
            table = table.with_overrides(spec["situations"])
    except ValueError as e:
        raise ScenarioError(f"situations: {e}") from None

    world = _build_world(spec, domain)
    objects = dict(world.types)
    try:
        goal = _goal_literals(spec)
        for lit in goal:
            domain.check_atom(lit.atom, objects)
        init = world.truth()
        for a in init:
            domain.check_atom(a, objects)
    except PDDLError as e:
        raise ScenarioError(f"goal/init: {e}") from None
    problem = Problem(
        spec["name"].replace(" ", "-").lower(), domain.name, objects, init, frozenset(goal)
    )
    extras = {k: spec[k] for k in ("verify", "recoverable") if k in spec}
    return Scenario(spec["name"], spec, domain, table, problem, spec.get("goal_text"), source, extras)


def load_scenario(
    path: str | Path, domain: Domain | None = None, rng: np.random.Generator | None = None
) -> tuple[World, SituationTable, Problem]:
    """Load a scenario file (or bundled scenario name) into World, SituationTable, Problem."""
    sc = read_scenario(path, domain)
    return sc.make_world(rng), sc.table, sc.problem


def read_scenario(path: str | Path, domain: Domain | None = None) -> Scenario:
    p = resolve_scenario_path(path)
    try:
        spec = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{p}: invalid JSON: {e}") from None
    return parse_scenario(spec, domain, source=str(p))


def bundled_dir(kind: str = "scenarios") -> Path:
    return Path(str(files("tamploop.data").joinpath(kind)))


def resolve_scenario_path(path: str | Path) -> Path:
    """Accept a file path, or the bare name of a bundled scenario or fixture."""
    p = Path(path)
    if p.exists():
        return p
    for kind in ("scenarios", "fixtures"):
        cand = bundled_dir(kind) / (p.name if p.suffix else f"{p.name}.json")
        if cand.exists():
            return cand
    raise ScenarioError(f"scenario not found: {path}")


def bundled_scenarios() -> list[Path]:
    return sorted(bundled_dir("scenarios").glob("*.json"))


def bundled_fixtures() -> list[Path]:
    return sorted(bundled_dir("fixtures").glob("*.json"))
