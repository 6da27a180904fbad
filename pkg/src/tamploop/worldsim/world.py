"""Ground-truth household world: geometry, articulation, robot, and stochastic execution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..pddl.core import Atom, Domain, GroundAction
from ..scenegraph import (
    AGENT_IDS,
    SceneGraph,
    SceneObject,
    SpatialThresholds,
    UnknownObjectError,
    eval_spatial,
)
from .geometry import DIRECTIONS, UnreachableDirection, clear_fraction, distance_falloff, move_camera
from .situations import NOOP, Situation, SituationTable

AGENT = "robot"
NO_FREE_SPACE = "No free space on receptacle"


class InapplicableAction(Exception):
    """Ground-truth preconditions failed; the action had no effect."""

    def __init__(self, action: GroundAction, reason: str):
        super().__init__(f"{action}: {reason}")
        self.action = action
        self.reason = reason


@dataclass
class Room:
    name: str
    bounds: tuple[float, ...]  # xmin ymin zmin xmax ymax zmax
    viewpoint: tuple[float, float, float]
    allow_above: bool = True
    occluders: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))


@dataclass
class RobotState:
    room: str
    camera: np.ndarray
    target: str | None = None
    held: str | None = None


@dataclass
class ScriptedEvent:
    step: int
    label: str
    kind: str  # relocate | set_open | set_power
    params: dict
    fired: bool = False


@dataclass
class Observation:
    viewpoint: tuple[str, tuple[float, float, float]]
    visible: frozenset
    quality: dict[str, float]
    target: str | None = None
    objects: tuple[SceneObject, ...] = ()  # measured geometry of visible free-standing objects
    held: frozenset = frozenset()
    world: "World | None" = field(default=None, repr=False, compare=False)

    @property
    def room(self) -> str:
        return self.viewpoint[0]


@dataclass
class ExecutionOutcome:
    nominal: bool
    situation: str | None
    world: "World"
    action: GroundAction | None = None


class World:
    """Mutable ground truth for one trial. Never share between trials."""

    def __init__(
        self,
        domain: Domain,
        rooms: Mapping[str, Room],
        objects: Mapping[str, SceneObject],
        types: Mapping[str, str],
        robot: RobotState,
        articulation: Mapping[str, bool] | None = None,
        power: Mapping[str, bool] | None = None,
        filled=(),
        halved=(),
        rng: np.random.Generator | None = None,
        thresholds: SpatialThresholds = SpatialThresholds(),
        viewing_range: float = 3.0,
        occluder_ids=(),
        events=(),
        drop_rule: str = "nearest_free",
    ):
        self.domain = domain
        self.rooms = dict(rooms)
        self.objects = dict(objects)
        self.types = dict(types)
        self.robot = robot
        self.articulation = dict(articulation or {})
        self.power = dict(power or {})
        self.filled = set(filled)
        self.halved = set(halved)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.thresholds = thresholds
        self.viewing_range = viewing_range
        self.occluder_ids = set(occluder_ids)
        self.events = list(events)
        self.drop_rule = drop_rule
        self._truth: frozenset | None = None
        self._quality: dict = {}
        self.floors = {
            o.room: k for k, o in sorted(self.objects.items()) if o.category == "floor"
        }
        for k in self.objects:
            if k not in self.types:
                raise ValueError(f"object '{k}' has no type")

    # -- ground truth -----------------------------------------------------

    def _dirty(self) -> None:
        self._truth = None
        self._quality.clear()

    def _free_objects(self) -> list[SceneObject]:
        return [o for k, o in self.objects.items() if k != self.robot.held]

    def spatial(self) -> frozenset:
        return eval_spatial(self._free_objects(), self.thresholds)

    def truth(self) -> frozenset:
        if self._truth is not None:
            return self._truth
        atoms = set(self.spatial())
        if self.robot.held is None:
            atoms.add(Atom("hand_empty"))
        else:
            atoms.add(Atom("holding", (AGENT, self.robot.held)))
        atoms |= {Atom("open", (c,)) for c, v in self.articulation.items() if v}
        atoms |= {Atom("on_power", (d,)) for d, v in self.power.items() if v}
        atoms |= {Atom("filled", (o,)) for o in self.filled}
        atoms |= {Atom("halved", (o,)) for o in self.halved}
        # inview tracks location: in the robot's room or in hand. Containment
        # hides an object from observation, not from view of its container.
        for k, o in self.objects.items():
            if k == self.robot.held or o.room == self.robot.room:
                atoms.add(Atom("inview", (k,)))
        self._truth = frozenset(atoms)
        return self._truth

    def _concealed(self, atoms) -> set[str]:
        return {
            a.args[0] for a in atoms
            if a.predicate == "inside" and not self.articulation.get(a.args[1], True)
        }

    def _check_known(self, a: Atom) -> None:
        for arg in a.args:
            if arg not in self.objects and arg not in AGENT_IDS:
                raise UnknownObjectError(f"unknown object '{arg}' in {a}")

    def ground_truth_eval(self, a: Atom) -> bool:
        self._check_known(a)
        return a in self.truth()

    def satisfies(self, goal) -> bool:
        t = self.truth()
        return all((lit.atom in t) == lit.positive for lit in goal)

    def action_applicable(self, a: GroundAction) -> bool:
        return self._inapplicable_reason(a) is None

    def _inapplicable_reason(self, a: GroundAction) -> str | None:
        t = self.truth()
        if a.name == "find":
            # find succeeds when the object is in view once the robot has navigated
            return None if Atom("inview", a.args) in t else f"{a.args[0]} not in view"
        # negative preconditions only stop the planner from repeating work;
        # physically, re-opening an open door or re-cutting an egg is a no-op
        missing = a.pre_pos - t
        if missing:
            return f"missing {sorted(map(str, missing))}"
        return None

    def scene_graph(self) -> SceneGraph:
        """Graph built from full exploration: true geometry and true atoms."""
        return SceneGraph(dict(self.objects), self.truth())

    # -- robot and perception ----------------------------------------------

    def navigate(self, room: str) -> None:
        if room not in self.rooms:
            raise KeyError(f"unknown room '{room}'")
        if room != self.robot.room:
            self.robot.room = room
            self._dirty()
        self.robot.camera = np.array(self.rooms[room].viewpoint, dtype=float)
        self.robot.target = None

    def set_target(self, obj_id: str | None) -> None:
        if obj_id is not None and obj_id not in self.objects:
            raise UnknownObjectError(f"unknown object '{obj_id}'")
        self.robot.target = obj_id

    def _occluder_boxes(self, room: str, exclude: str) -> np.ndarray:
        boxes = [self.rooms[room].occluders]
        extra = [
            self.objects[k].bbox for k in sorted(self.occluder_ids)
            if k != exclude and k != self.robot.held and self.objects[k].room == room
        ]
        if extra:
            boxes.append(np.array(extra, dtype=float))
        return np.vstack(boxes) if len(boxes) > 1 else boxes[0]

    def _sight(self, obj_id: str, camera) -> tuple[float, float]:
        """(clear fraction, quality) of an object from a camera position in the robot's room."""
        o = self.objects[obj_id]
        occ = self._occluder_boxes(self.robot.room, obj_id)
        clear = clear_fraction(camera, o.bbox, occ) if len(occ) else 1.0
        dist = float(np.linalg.norm(np.asarray(o.centroid) - camera))
        return clear, clear * distance_falloff(dist, self.viewing_range)

    def object_quality(self, obj_id: str, camera=None) -> float:
        """Visibility score for judging a predicate about ``obj_id``.

        Held objects are seen in the gripper; objects in another room are
        evidently absent. Both score 1.
        """
        if obj_id == self.robot.held or obj_id in AGENT_IDS:
            return 1.0
        o = self.objects[obj_id]
        if o.room != self.robot.room or o.category == "floor":
            return 1.0
        cam = self.robot.camera if camera is None else np.asarray(camera, dtype=float)
        key = (obj_id, self.robot.room, tuple(cam))
        q = self._quality.get(key)
        if q is None:
            q = self._quality[key] = self._sight(obj_id, cam)[1]
        return q

    @staticmethod
    def atom_target(a: Atom) -> str | None:
        for arg in a.args:
            if arg not in AGENT_IDS:
                return arg
        return None

    def atom_quality(self, a: Atom, camera=None) -> float:
        self._check_known(a)
        args = [x for x in a.args if x not in AGENT_IDS]
        if not args:
            return 1.0
        return min(self.object_quality(x, camera) for x in args)

    def observe(self, target: str | None = None) -> Observation:
        if target is not None:
            self.set_target(target)
        t = self.truth()
        concealed = self._concealed(t)
        cam = self.robot.camera
        visible, quality, measured = set(), {}, []
        for k in sorted(self.objects):
            o = self.objects[k]
            if k == self.robot.held:
                visible.add(k)
                quality[k] = 1.0
                continue
            if o.room != self.robot.room or k in concealed:
                continue
            clear, q = self._sight(k, cam)
            if clear > 0:
                visible.add(k)
                quality[k] = q
                measured.append(o)
        held = frozenset({self.robot.held}) if self.robot.held else frozenset()
        return Observation(
            viewpoint=(self.robot.room, tuple(float(v) for v in cam)),
            visible=frozenset(visible),
            quality=quality,
            target=self.robot.target,
            objects=tuple(measured),
            held=held,
            world=self,
        )

    def peek_viewpoint(self, direction: str) -> np.ndarray:
        """Camera position ``move_viewpoint(direction)`` would produce, without moving."""
        if self.robot.target is None:
            raise UnreachableDirection(direction, "no target selected")
        room = self.rooms[self.robot.room]
        tgt = self.objects[self.robot.target].centroid
        cam = move_camera(
            self.robot.camera, tgt, direction, room.viewpoint, room.bounds, room.allow_above
        )
        solid = [room.occluders] + [
            np.array([o.bbox]) for k, o in self.objects.items()
            if o.room == self.robot.room and k != self.robot.held and o.category != "floor"
        ]
        boxes = np.vstack(solid)
        if len(boxes) and np.any(np.all(boxes[:, :3] <= cam, axis=1) & np.all(boxes[:, 3:] >= cam, axis=1)):
            raise UnreachableDirection(direction, "pose is inside an obstacle")
        return cam

    def set_camera(self, pose) -> None:
        """Place the camera at an explicit pose in the current room."""
        cam = np.asarray(pose, dtype=float)
        b = self.rooms[self.robot.room].bounds
        if cam.shape != (3,) or np.any(cam < b[:3]) or np.any(cam > b[3:]):
            raise ValueError(f"camera pose {cam.tolist()} outside room '{self.robot.room}'")
        self.robot.camera = cam

    def move_viewpoint(self, direction: str) -> "World":
        self.robot.camera = self.peek_viewpoint(direction)
        return self

    def suggest_directions(self, a: Atom) -> list[str]:
        """Reachable directions ranked by the atom's modeled quality after the move."""
        scored = []
        for i, d in enumerate(DIRECTIONS):
            try:
                cam = self.peek_viewpoint(d)
            except Exception:
                continue
            scored.append((-self.atom_quality(a, cam), i, d))
        return [d for _, _, d in sorted(scored)]

    # -- execution -----------------------------------------------------------

    def fire_events(self, step: int) -> list[str]:
        """Apply scripted events due at ``step``; returns their labels."""
        labels = []
        for ev in self.events:
            if ev.fired or ev.step != step:
                continue
            ev.fired = True
            self._apply_event(ev)
            labels.append(ev.label)
        return labels

    def _apply_event(self, ev: ScriptedEvent) -> None:
        p = ev.params
        obj = p.get("object")
        if ev.kind == "set_open":
            self.articulation[obj] = bool(p["open"])
        elif ev.kind == "set_power":
            self.power[obj] = bool(p["power"])
        elif ev.kind == "relocate":
            if self.robot.held == obj:
                self.robot.held = None
            o = self.objects[obj]
            if "on" in p:
                pose = self._pose_on(o, p["on"])
            elif "inside" in p:
                pose = self._pose_inside(o, p["inside"])
            else:
                pose = (np.asarray(p["centroid"], float), p["room"])
            if pose is None:
                raise ValueError(f"event '{ev.label}': no room for {obj}")
            self.objects[obj] = o.moved_to(pose[0], pose[1])
        else:
            raise ValueError(f"unknown event kind '{ev.kind}'")
        self._dirty()

    def execute(self, a: GroundAction, table: SituationTable) -> ExecutionOutcome:
        """Execute ``a`` with one situation draw from the world's rng."""
        reason = self._inapplicable_reason(a)
        if reason is not None:
            raise InapplicableAction(a, reason)
        sit = table.draw(a.name, float(self.rng.random()))
        if sit is not None and sit.transform != NOOP:
            sit = self._apply_drop(a, sit)
        if sit is None:
            label = self._apply_nominal(a)
            if label is not None:
                return ExecutionOutcome(False, label, self, a)
            return ExecutionOutcome(True, None, self, a)
        return ExecutionOutcome(False, sit.label, self, a)

    def _resolve(self, a: GroundAction, ref: str) -> str | None:
        if ref == "held":
            return self.robot.held
        return a.args[int(ref[3:])]

    def _apply_drop(self, a: GroundAction, sit: Situation) -> Situation | None:
        what, near = sit.transform.split(":", 1)[1].split(">")
        obj, anchor = self._resolve(a, what), self._resolve(a, near)
        if obj is None:
            return None  # nothing in hand to drop: the nominal outcome happens
        if self.robot.held == obj:
            self.robot.held = None
        if anchor == obj or anchor is None:
            anchor = self.floors.get(self.robot.room, obj)
        centroid, room = self._drop_pose(self.objects[obj], anchor)
        self.objects[obj] = self.objects[obj].moved_to(centroid, room)
        self._dirty()
        return sit

    def _apply_nominal(self, a: GroundAction) -> str | None:
        n, args = a.name, a.args
        if n in ("grasp", "grasp_from"):
            self.robot.held = args[0]
        elif n in ("placein", "placeon"):
            o = self.objects[args[0]]
            pose = self._pose_inside(o, args[1]) if n == "placein" else self._pose_on(o, args[1])
            if pose is None:
                return NO_FREE_SPACE
            self.objects[args[0]] = o.moved_to(pose[0], pose[1])
            self.robot.held = None
        elif n == "open":
            self.articulation[args[0]] = True
        elif n == "close":
            self.articulation[args[0]] = False
        elif n == "turnon":
            self.power[args[0]] = True
        elif n == "fill":
            self.filled.add(args[0])
        elif n == "cut":
            self.halved.add(args[0])
        self._dirty()
        return None

    # -- placement ------------------------------------------------------------

    def _blockers(self, *exclude: str) -> list[SceneObject]:
        return [
            o for k, o in self.objects.items()
            if k not in exclude and k != self.robot.held and o.category != "floor"
        ]

    @staticmethod
    def _collides(lo, hi, others) -> bool:
        for o in others:
            b = o.bbox
            if (lo[0] < b[3] and hi[0] > b[0] and lo[1] < b[4] and hi[1] > b[1]
                    and lo[2] < b[5] and hi[2] > b[2]):
                return True
        return False

    def _grid_pose(self, obj: SceneObject, region_lo, region_hi, z_bottom, room, receptacle: str):
        size = obj.size
        half = size / 2
        lo = np.asarray(region_lo, float) + half[:2]
        hi = np.asarray(region_hi, float) - half[:2]
        if np.any(lo > hi + 1e-12):
            return None
        center = (lo + hi) / 2
        step = max(0.05, float(np.max(hi - lo)) / 40)
        xs = np.arange(lo[0], hi[0] + 1e-9, step) if hi[0] > lo[0] else np.array([center[0]])
        ys = np.arange(lo[1], hi[1] + 1e-9, step) if hi[1] > lo[1] else np.array([center[1]])
        gx, gy = np.meshgrid(xs, ys)
        cand = np.stack([gx.ravel(), gy.ravel()], axis=1)
        order = np.lexsort((cand[:, 1], cand[:, 0], np.linalg.norm(cand - center, axis=1)))
        others = [o for o in self._blockers(obj.id, receptacle) if o.room == room]
        z = z_bottom + half[2]
        for idx in order:
            c = np.array([cand[idx, 0], cand[idx, 1], z])
            if not self._collides(c - half, c + half, others):
                return c, room
        return None

    def _pose_on(self, obj: SceneObject, surface_id: str):
        s = self.objects[surface_id]
        b = s.bbox
        return self._grid_pose(obj, b[0:2], b[3:5], b[5], s.room, surface_id)

    def _pose_inside(self, obj: SceneObject, container_id: str):
        c = self.objects[container_id]
        b = np.asarray(c.bbox)
        margin = 0.01
        if obj.size[2] > b[5] - b[2] - 2 * margin:
            return None
        return self._grid_pose(obj, b[0:2] + margin, b[3:5] - margin, b[2] + margin, c.room, container_id)

    def _drop_pose(self, obj: SceneObject, anchor_id: str):
        """Nearest collision-free floor pose within the near radius of the anchor."""
        anchor = self.objects[anchor_id]
        room = anchor.room if anchor.room is not None else self.robot.room
        floor_id = self.floors.get(room)
        floor_top = self.objects[floor_id].bbox[5] if floor_id else 0.0
        bounds = np.asarray(self.rooms[room].bounds, float)
        half = obj.size / 2
        z = floor_top + half[2]
        others = [o for o in self._blockers(obj.id) if o.room == room]
        ac = np.asarray(anchor.centroid)
        if anchor.category == "floor":
            # "near the floor" means near where the object was
            ac = np.asarray(obj.centroid) if obj.room == room else np.asarray(self.rooms[room].viewpoint)
        theta0 = float(self.rng.uniform(0.0, 2 * math.pi))
        limit = self.thresholds.near_distance * 0.98
        fallback = None
        for r in np.arange(0.1, 4.0, 0.05):
            for k in range(16):
                th = theta0 + k * 2 * math.pi / 16
                c = np.array([ac[0] + r * math.cos(th), ac[1] + r * math.sin(th), z])
                if np.any(c[:2] - half[:2] < bounds[:2]) or np.any(c[:2] + half[:2] > bounds[3:5]):
                    continue
                if self._collides(c - half, c + half, others):
                    continue
                if np.linalg.norm(c - ac) <= limit:
                    return c, room
                if fallback is None:
                    fallback = c
        if fallback is not None:
            return fallback, room
        vp = np.asarray(self.rooms[room].viewpoint, float)
        return np.array([vp[0], vp[1], z]), room
