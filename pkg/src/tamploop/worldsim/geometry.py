"""Line-of-sight and viewpoint geometry for the discrete viewpoint model."""

from __future__ import annotations

import numpy as np

DIRECTIONS = ("left", "right", "front", "behind", "above", "closer")
ROTATION_STEP = np.deg2rad(45.0)
MIN_VIEW_DISTANCE = 0.25


class UnreachableDirection(Exception):
    def __init__(self, direction: str, reason: str):
        super().__init__(f"cannot move viewpoint '{direction}': {reason}")
        self.direction = direction
        self.reason = reason


def sample_points(bbox) -> np.ndarray:
    """Centroid plus eight points pulled 20% in from the bbox corners."""
    b = np.asarray(bbox, dtype=float)
    lo, hi = b[:3], b[3:]
    c = (lo + hi) / 2
    half = (hi - lo) / 2 * 0.8
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
    return np.vstack([c, c + signs * half])


def segments_blocked(origin, points: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """For each segment origin->point, whether any box intersects it (slab test)."""
    if len(boxes) == 0:
        return np.zeros(len(points), dtype=bool)
    o = np.asarray(origin, dtype=float)
    d = points - o  # (P, 3)
    lo = boxes[:, :3][None, :, :]  # (1, B, 3)
    hi = boxes[:, 3:][None, :, :]
    dd = d[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - o) / dd
        t2 = (hi - o) / dd
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # zero direction component: inside the slab means unconstrained, else never
    parallel = dd == 0
    inside_slab = (o >= lo) & (o <= hi)
    tmin = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), tmax)
    enter = np.max(tmin, axis=2)
    leave = np.min(tmax, axis=2)
    hit = (enter <= leave) & (leave > 1e-9) & (enter < 1 - 1e-9)
    return np.any(hit, axis=1)


def clear_fraction(camera, bbox, occluders) -> float:
    """Fraction of the target's sample points with an unobstructed line of sight."""
    boxes = np.asarray(occluders, dtype=float).reshape(-1, 6)
    cam = np.asarray(camera, dtype=float)
    if len(boxes):
        # a box enclosing the camera would hide everything; ignore it
        inside = np.all(boxes[:, :3] <= cam, axis=1) & np.all(boxes[:, 3:] >= cam, axis=1)
        boxes = boxes[~inside]
    pts = sample_points(bbox)
    return float(1.0 - segments_blocked(cam, pts, boxes).mean())


def distance_falloff(distance: float, viewing_range: float) -> float:
    if distance <= viewing_range:
        return 1.0
    return float(viewing_range / distance)


def _rotate_xy(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])


def move_camera(
    camera,
    target,
    direction: str,
    front_hint,
    bounds,
    allow_above: bool = True,
) -> np.ndarray:
    """New camera position after moving in ``direction`` relative to ``target``.

    ``front_hint`` is a point marking the front side of the scene (the room's
    default viewpoint); ``bounds`` is the room box the camera must stay in.
    """
    cam = np.asarray(camera, dtype=float)
    tgt = np.asarray(target, dtype=float)
    rel = cam - tgt
    dist = float(np.linalg.norm(rel))
    horiz = float(np.hypot(rel[0], rel[1]))

    def front_dir():
        f = np.asarray(front_hint, dtype=float) - tgt
        f[2] = 0.0
        n = np.linalg.norm(f)
        return f / n if n > 1e-9 else np.array([0.0, -1.0, 0.0])

    if direction == "left":
        new_rel = _rotate_xy(rel, ROTATION_STEP)
    elif direction == "right":
        new_rel = _rotate_xy(rel, -ROTATION_STEP)
    elif direction in ("front", "behind"):
        f = front_dir() * (1 if direction == "front" else -1)
        h = horiz if horiz > 1e-9 else dist
        new_rel = np.array([f[0] * h, f[1] * h, rel[2] if horiz > 1e-9 else 0.0])
    elif direction == "above":
        if not allow_above:
            raise UnreachableDirection(direction, "disallowed in this scene")
        new_rel = np.array([0.0, 0.0, dist])
    elif direction == "closer":
        if dist / 2 < MIN_VIEW_DISTANCE:
            raise UnreachableDirection(direction, "already at minimum distance")
        new_rel = rel / 2
    else:
        raise UnreachableDirection(direction, "unknown direction")

    new = tgt + new_rel
    b = np.asarray(bounds, dtype=float)
    if np.any(new < b[:3] - 1e-9) or np.any(new > b[3:] + 1e-9):
        raise UnreachableDirection(direction, "pose leaves the room")
    return new
