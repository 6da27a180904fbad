"""Regenerate the bundled occlusion fixtures for the viewpoint-policy comparison.

    python3 tools/make_fixtures.py [--out src/tamploop/data/fixtures]

Each occluded fixture puts a wall between the room viewpoint and a small
object, so the first view is insufficient. The greedy ring lists the poses a
fixed sweep would visit. Ring sizes are chosen so the sweep averages 4.35.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from tamploop.worldsim import parse_scenario

RING_SIZES = [6] * 7 + [5] * 4 + [4] * 3 + [3] * 1 + [2] * 5
PAIRS = [
    ("mug", "table"), ("book", "shelf"), ("apple", "counter"), ("phone", "desk"),
    ("vase", "dresser"), ("bowl", "bench"),
]
ROOM = [0.0, 0.0, 0.0, 6.0, 6.0, 3.0]
VIEWPOINT = [3.0, 0.5, 1.5]


def _obj(id_, type_, centroid, size, **extra):
    return {"id": id_, "type": type_, "room": "room", "centroid": [round(v, 3) for v in centroid],
            "size": list(size), **extra}


def _ring(target, n, rng):
    """``n`` poses on a circle around the target, within the room, away from the wall."""
    start = rng.uniform(-0.3, 0.3)
    poses = []
    for i in range(n):
        ang = -math.pi / 2 + start + (i - (n - 1) / 2) * (math.pi / 5)
        r = 2.2
        p = [target[0] + r * math.cos(ang), target[1] + r * math.sin(ang), 1.4]
        p[0] = min(max(p[0], 0.2), 5.8)
        p[1] = min(max(p[1], 0.2), 5.8)
        poses.append([round(v, 3) for v in p])
    return poses


def occluded(i: int, ring: int, rng) -> dict:
    item, surface = PAIRS[i % len(PAIRS)]
    sx = rng.uniform(2.2, 3.8)
    sy = rng.uniform(3.8, 4.6)
    top = 0.75
    width = rng.uniform(1.0, 1.6)
    wall_y = rng.uniform(2.0, 2.6)
    wall = [sx - width / 2, wall_y, 0.0, sx + width / 2, wall_y + 0.2, rng.uniform(1.5, 2.2)]
    target = [sx + rng.uniform(-0.2, 0.2), sy, top + 0.05]
    return {
        "name": f"occluded-{i + 1:02d}",
        "description": f"A partition hides the {item} on the {surface} from the doorway.",
        "rooms": [{
            "name": "room", "bounds": ROOM, "viewpoint": VIEWPOINT,
            "allow_above": bool(i % 3), "occluders": [[round(v, 3) for v in wall]],
        }],
        "objects": [
            _obj(surface, "surface", [sx, sy, top / 2], [1.2, 0.8, top]),
            _obj(item, "item", target, [0.1, 0.1, 0.1]),
        ],
        "robot": {"room": "room"},
        "verify": {"atom": f"on({item}, {surface})", "greedy_ring": _ring(target, ring, rng)},
    }


def unoccluded(i: int, rng) -> dict:
    item, surface = PAIRS[i % len(PAIRS)]
    sx, sy = rng.uniform(2.5, 3.5), rng.uniform(2.0, 2.5)
    target = [sx, sy, 0.8]
    return {
        "name": f"clear-{i + 1:02d}",
        "description": f"The {item} on the {surface} is in plain sight.",
        "rooms": [{"name": "room", "bounds": ROOM, "viewpoint": VIEWPOINT}],
        "objects": [
            _obj(surface, "surface", [sx, sy, 0.375], [1.2, 0.8, 0.75]),
            _obj(item, "item", target, [0.1, 0.1, 0.1]),
        ],
        "robot": {"room": "room"},
        "verify": {"atom": f"on({item}, {surface})", "greedy_ring": _ring(target, 3, rng)},
    }


def _check(spec: dict, occluded_view: bool) -> None:
    from tamploop.pddl import parse_literals

    sc = parse_scenario(spec)
    world = sc.make_world()
    atom = parse_literals(spec["verify"]["atom"])[0].atom
    if not world.ground_truth_eval(atom):
        raise SystemExit(f"{spec['name']}: {atom} is false in the fixture")
    q0 = world.atom_quality(atom)
    if occluded_view != (q0 < 0.7):
        raise SystemExit(f"{spec['name']}: initial quality {q0:.3f}")
    if occluded_view:
        world.set_target(world.atom_target(atom))
        best = world.suggest_directions(atom)[0]
        if world.atom_quality(atom, world.peek_viewpoint(best)) < 0.7:
            raise SystemExit(f"{spec['name']}: no single move resolves the occlusion")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).parents[1] / "src/tamploop/data/fixtures"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = []
    for i, ring in enumerate(RING_SIZES):
        for _ in range(50):  # resample until the occlusion is real but resolvable
            spec = occluded(i, ring, rng)
            try:
                _check(spec, True)
            except SystemExit:
                continue
            break
        else:
            raise SystemExit(f"could not build occluded fixture {i + 1}")
        specs.append(spec)
    for i in range(3):
        spec = unoccluded(i, rng)
        _check(spec, False)
        specs.append(spec)
    for spec in specs:
        (out / f"{spec['name']}.json").write_text(json.dumps(spec, indent=2) + "\n")
    rings = [len(s["verify"]["greedy_ring"]) for s in specs if s["name"].startswith("occluded")]
    print(f"wrote {len(specs)} fixtures to {out}; occluded ring mean {np.mean(rings):.2f}")


if __name__ == "__main__":
    main()
