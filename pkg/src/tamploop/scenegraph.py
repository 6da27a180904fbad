"""Object-and-relation world model with geometric predicate extraction.

The graph stores every symbolic atom the planner sees (spatial relations plus
gripper, articulation, and task fluents), so ``to_initial_state`` is a plain
union. Spatial atoms (``on``, ``inside``, ``near``) are the ones recomputed
from geometry when new observations arrive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pddl.core import Atom, GroundAction, PDDLSemanticError

AGENT_IDS = frozenset({"robot"})
SPATIAL_PREDICATES = frozenset({"on", "inside", "near"})
LOCATION_PREDICATES = frozenset({"on", "inside"})


class UnknownObjectError(PDDLSemanticError, KeyError):
    def __str__(self):
        return self.args[0] if self.args else "unknown object"


@dataclass(frozen=True)
class SpatialThresholds:
    on_gap: float = 0.10  # max vertical gap between bottom face and support top
    on_overlap: float = 0.5  # min fraction of the upper footprint over the support
    near_distance: float = 1.0  # centroid distance
    contact_tolerance: float = 0.02  # allowed interpenetration for `on`

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "SpatialThresholds":
        return cls(**(d or {}))


@dataclass(frozen=True)
class SceneObject:
    id: str
    category: str
    centroid: tuple[float, float, float]
    bbox: tuple[float, float, float, float, float, float]  # xmin ymin zmin xmax ymax zmax
    embedding: tuple[float, ...] | None = None
    room: str | None = None

    def __post_init__(self):
        c = tuple(float(v) for v in self.centroid)
        b = tuple(float(v) for v in self.bbox)
        if len(c) != 3 or len(b) != 6:
            raise ValueError(f"{self.id}: centroid needs 3 values and bbox 6")
        if not all(np.isfinite(c)) or not all(np.isfinite(b)):
            raise ValueError(f"{self.id}: non-finite geometry")
        if any(b[i] > b[i + 3] for i in range(3)):
            raise ValueError(f"{self.id}: bbox min exceeds max")
        if any(not (b[i] - 1e-9 <= c[i] <= b[i + 3] + 1e-9) for i in range(3)):
            raise ValueError(f"{self.id}: centroid lies outside bbox")
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "bbox", b)
        if self.embedding is not None:
            object.__setattr__(self, "embedding", tuple(float(v) for v in self.embedding))

    @classmethod
    def from_size(cls, id: str, category: str, centroid, size, **kw) -> "SceneObject":
        c = np.asarray(centroid, dtype=float)
        h = np.asarray(size, dtype=float) / 2.0
        return cls(id, category, tuple(c), tuple(np.concatenate([c - h, c + h])), **kw)

    @property
    def size(self) -> np.ndarray:
        b = self.bbox
        return np.array([b[3] - b[0], b[4] - b[1], b[5] - b[2]])

    def moved_to(self, centroid, room: str | None = None) -> "SceneObject":
        """Same extents, new centroid."""
        return SceneObject.from_size(
            self.id, self.category, centroid, self.size, embedding=self.embedding,
            room=self.room if room is None else room,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "room": self.room,
            "centroid": list(self.centroid),
            "bbox": list(self.bbox),
            "embedding": None if self.embedding is None else list(self.embedding),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SceneObject":
        return cls(
            id=d["id"], category=d.get("category", d["id"]), centroid=d["centroid"],
            bbox=d["bbox"], embedding=d.get("embedding"), room=d.get("room"),
        )


def eval_spatial(
    objects: Iterable[SceneObject], thresholds: SpatialThresholds = SpatialThresholds()
) -> frozenset:
    """All on/inside/near atoms implied by the geometry of ``objects``."""
    objs = sorted(objects, key=lambda o: o.id)
    n = len(objs)
    if n < 2:
        return frozenset()
    ids = [o.id for o in objs]
    box = np.array([o.bbox for o in objs])
    cen = np.array([o.centroid for o in objs])
    lo, hi = box[:, :3], box[:, 3:]
    offdiag = ~np.eye(n, dtype=bool)

    # [i, j]: relation of object i to object j
    ov_x = np.clip(np.minimum(hi[:, None, 0], hi[None, :, 0]) - np.maximum(lo[:, None, 0], lo[None, :, 0]), 0, None)
    ov_y = np.clip(np.minimum(hi[:, None, 1], hi[None, :, 1]) - np.maximum(lo[:, None, 1], lo[None, :, 1]), 0, None)
    area_i = (hi[:, 0] - lo[:, 0]) * (hi[:, 1] - lo[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        overlap = np.where(area_i[:, None] > 0, ov_x * ov_y / area_i[:, None], 0.0)
    gap = lo[:, None, 2] - hi[None, :, 2]
    on = (
        offdiag
        & (cen[:, None, 2] > hi[None, :, 2])
        & (gap >= -thresholds.contact_tolerance)
        & (gap <= thresholds.on_gap)
        & (overlap >= thresholds.on_overlap)
    )
    inside = offdiag & np.all(lo[:, None, :] >= lo[None, :, :], axis=2) & np.all(
        hi[:, None, :] <= hi[None, :, :], axis=2
    )
    dist = np.linalg.norm(cen[:, None, :] - cen[None, :, :], axis=2)
    near = offdiag & (dist <= thresholds.near_distance)

    out = set()
    for pred, mask in (("on", on), ("inside", inside), ("near", near)):
        for i, j in zip(*np.nonzero(mask)):
            out.add(Atom(pred, (ids[i], ids[j])))
    return frozenset(out)


@dataclass(frozen=True)
class SceneGraph:
    objects: Mapping[str, SceneObject] = field(default_factory=dict)
    relations: frozenset = frozenset()
    version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "relations", frozenset(self.relations))
        for a in self.relations:
            self._check(a)

    def _check(self, a: Atom) -> None:
        for arg in a.args:
            if arg not in self.objects and arg not in AGENT_IDS:
                raise UnknownObjectError(f"unknown object '{arg}' in {a}")

    def __contains__(self, a: Atom) -> bool:
        return a in self.relations

    @classmethod
    def build(
        cls,
        objects: Iterable[SceneObject],
        extra: Iterable[Atom] = (),
        thresholds: SpatialThresholds = SpatialThresholds(),
    ) -> "SceneGraph":
        objs = {o.id: o for o in objects}
        return cls(objs, eval_spatial(objs.values(), thresholds) | frozenset(extra))

    def held(self) -> set[str]:
        return {a.args[1] for a in self.relations if a.predicate == "holding"}

    def located(self) -> set[str]:
        return {a.args[0] for a in self.relations if a.predicate in LOCATION_PREDICATES}

    def room_of(self, obj_id: str) -> str | None:
        if obj_id not in self.objects:
            raise UnknownObjectError(f"unknown object '{obj_id}'")
        return self.objects[obj_id].room

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "objects": [self.objects[k].to_dict() for k in sorted(self.objects)],
            "relations": [
                {"predicate": a.predicate, "args": list(a.args)} for a in sorted(self.relations)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SceneGraph":
        objs = {o["id"]: SceneObject.from_dict(o) for o in d.get("objects", [])}
        rels = frozenset(Atom(r["predicate"], tuple(r["args"])) for r in d.get("relations", []))
        return cls(objs, rels, int(d.get("version", 0)))

    @classmethod
    def loads(cls, text: str) -> "SceneGraph":
        return cls.from_dict(json.loads(text))


def apply_effects(graph: SceneGraph, a: GroundAction) -> SceneGraph:
    """Action-driven update: drop the delete list, then add the add list."""
    for x in a.add | a.delete:
        graph._check(x)
    return replace(graph, relations=(graph.relations - a.delete) | a.add, version=graph.version + 1)


def revert_effects(graph: SceneGraph, a: GroundAction) -> SceneGraph:
    """Inverse of apply_effects, used when an action is judged to have failed."""
    for x in a.add | a.delete:
        graph._check(x)
    return replace(graph, relations=(graph.relations - a.add) | a.delete, version=graph.version + 1)


def correct(graph: SceneGraph, a: Atom, verdict: bool) -> SceneGraph:
    """Observation-driven update: make membership of ``a`` equal ``verdict``."""
    graph._check(a)
    if (a in graph.relations) == verdict:
        return graph
    rels = graph.relations | {a} if verdict else graph.relations - {a}
    return replace(graph, relations=rels, version=graph.version + 1)


def to_initial_state(graph: SceneGraph, extra: Iterable[Atom] = ()) -> frozenset:
    return graph.relations | frozenset(extra)


def update_from_observation(
    graph: SceneGraph,
    observed: Sequence[SceneObject],
    held: Iterable[str] | None = None,
    missing: Iterable[str] = (),
    thresholds: SpatialThresholds = SpatialThresholds(),
    agent: str = "robot",
) -> SceneGraph:
    """Fold a fresh observation into the graph.

    ``observed`` carries the measured geometry of visible, free-standing objects;
    their spatial atoms are recomputed. ``held`` is the set of objects seen in the
    gripper (None when the gripper was not observed). ``missing`` lists objects
    expected in view but not seen; they lose their location and room.
    Objects left with no location fall back to their last stored geometry.
    """
    objects = dict(graph.objects)
    for o in observed:
        if o.id not in objects:
            raise UnknownObjectError(f"unknown object '{o.id}'")
        objects[o.id] = o
    missing = set(missing)
    for m in missing:
        objects[m] = replace(objects[m], room=None)
    rels = set(graph.relations)

    if held is not None:
        held = set(held)
        rels = {a for a in rels if not (a.predicate == "holding" and a.args[1] not in held)}
        rels |= {Atom("holding", (agent, h)) for h in held}
    believed_held = {a.args[1] for a in rels if a.predicate == "holding"}
    seen = {o.id for o in observed}
    # an object seen resting somewhere is not in the gripper
    believed_held -= seen
    rels = {a for a in rels if not (a.predicate == "holding" and a.args[1] not in believed_held)}

    touched = seen | missing | believed_held
    rels = {a for a in rels if not (a.predicate in SPATIAL_PREDICATES and touched & set(a.args))}
    rels -= {Atom("inview", (m,)) for m in missing}
    free = [o for k, o in objects.items() if k not in believed_held and k not in missing]
    fresh = eval_spatial(free, thresholds)
    rels |= {a for a in fresh if seen & set(a.args)}

    # unlocated objects fall back to last known geometry
    located = {a.args[0] for a in rels if a.predicate in LOCATION_PREDICATES}
    stray = {
        k for k in objects
        if k not in located and k not in believed_held and k not in missing
        and any(a.predicate in LOCATION_PREDICATES and a.args[0] == k for a in fresh)
    }
    rels |= {a for a in fresh if a.predicate in LOCATION_PREDICATES and a.args[0] in stray}

    if believed_held:
        rels.discard(Atom("hand_empty"))
    elif held is not None or Atom("hand_empty") in graph.relations or any(
        a.predicate == "holding" for a in graph.relations
    ):
        rels.add(Atom("hand_empty"))
    return SceneGraph(objects, frozenset(rels), graph.version + 1)
