"""Independent reference implementations the package is checked against."""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from tamploop.pddl import Atom, Domain, Literal, Problem


def ground_naive(domain: Domain, objects: dict[str, str]):
    """Every type-correct grounding of every action, no pruning."""
    typed = {**objects, **domain.constants}
    out = []
    for schema in domain.actions.values():
        pools = [[o for o, t in typed.items() if domain.is_subtype(t, pt)] for _, pt in schema.params]
        for args in itertools.product(*pools):
            out.append(schema.ground(args))
    return out


def bfs_plan_length(domain: Domain, objects, init, goal, max_states: int = 100_000) -> int | None:
    """Shortest plan length by exhaustive breadth-first search, or None past ``max_states``.

    Returns -1 when the reachable space is exhausted without reaching the goal.
    """
    actions = ground_naive(domain, objects)
    pos = {l.atom for l in goal if l.positive}
    neg = {l.atom for l in goal if not l.positive}

    def done(s):
        return pos <= s and not (neg & s)

    start = frozenset(init)
    if done(start):
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        s, d = frontier.popleft()
        for a in actions:
            if not (a.pre_pos <= s) or (a.pre_neg & s):
                continue
            t = (s - a.delete) | a.add
            if t in seen:
                continue
            if done(t):
                return d + 1
            seen.add(t)
            if len(seen) > max_states:
                return None
            frontier.append((t, d + 1))
    return -1


def binomial_tail(n: int, k: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p)."""
    return sum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(k, n + 1))


def wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return centre - half, centre + half


def random_household_problem(domain: Domain, rng: np.random.Generator, max_objects: int = 8):
    """A solvable problem over the household domain: the goal is read off a random walk."""
    n_items = int(rng.integers(1, 4))
    n_surf = int(rng.integers(1, 3))
    n_cont = int(rng.integers(0, 3))
    while n_items + n_surf + n_cont > max_objects:
        n_cont -= 1
    objects: dict[str, str] = {}
    for i in range(n_items):
        objects[f"i{i}"] = "tool" if i == 0 and rng.random() < 0.4 else "item"
    for i in range(n_surf):
        objects[f"s{i}"] = "sink" if i == 0 and rng.random() < 0.3 else "surface"
    for i in range(n_cont):
        objects[f"c{i}"] = "appliance" if rng.random() < 0.4 else "container"
    surfaces = [o for o, t in objects.items() if t in ("surface", "sink")]
    containers = [o for o, t in objects.items() if t in ("container", "appliance")]

    init = {Atom("hand_empty")}
    for o, t in objects.items():
        if rng.random() < 0.8:
            init.add(Atom("inview", (o,)))
        if t in ("container", "appliance") and rng.random() < 0.5:
            init.add(Atom("open", (o,)))
        if t == "appliance" and rng.random() < 0.3:
            init.add(Atom("on_power", (o,)))
    for o, t in objects.items():
        if t in ("item", "tool"):
            if containers and rng.random() < 0.4:
                init.add(Atom("inside", (o, str(rng.choice(containers)))))
            else:
                init.add(Atom("on", (o, str(rng.choice(surfaces)))))
    init = frozenset(init)

    actions = ground_naive(domain, objects)
    state = init
    for _ in range(int(rng.integers(1, 13))):
        options = [a for a in actions if a.pre_pos <= state and not (a.pre_neg & state)]
        if not options:
            break
        a = options[int(rng.integers(len(options)))]
        state = (state - a.delete) | a.add
    gained = sorted(state - init)
    lost = sorted(init - state)
    pool = [Literal(a, True) for a in gained] + [Literal(a, False) for a in lost]
    if not pool:
        pool = [Literal(a, True) for a in sorted(state)]
    k = int(rng.integers(1, min(3, len(pool)) + 1))
    idx = rng.choice(len(pool), size=k, replace=False)
    goal = frozenset(pool[i] for i in sorted(idx))
    return Problem("rand", domain.name, objects, init, goal)
