"""Forward state-space planning over grounded STRIPS actions."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

from .core import Domain, GroundAction, Literal, Problem, applicable, satisfies

DEFAULT_MAX_EXPANSIONS = 1_000_000


class NoPlanFound(Exception):
    """The goal is unreachable: the reachable state space was exhausted."""


class SearchBudgetExceeded(Exception):
    """The expansion budget ran out before the search was conclusive."""

    def __init__(self, expansions: int):
        super().__init__(f"search budget exhausted after {expansions} expansions")
        self.expansions = expansions


@dataclass(frozen=True)
class Plan:
    actions: tuple[GroundAction, ...] = ()
    expansions: int = 0

    @property
    def cost(self) -> int:
        return len(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __str__(self) -> str:
        return "[" + ", ".join(map(str, self.actions)) + "]"


class Validation(NamedTuple):
    valid: bool
    failure_index: int | None = None

    def __bool__(self) -> bool:
        return self.valid


def objects_by_type(domain: Domain, objects: Mapping[str, str]) -> dict[str, list[str]]:
    """Map every declared type to the sorted objects (incl. constants) that belong to it."""
    everything = {**domain.constants, **objects}
    types = set(domain.types) | set(domain.types.values()) | {"object"}
    return {
        t: sorted(o for o, ot in everything.items() if domain.is_subtype(ot, t)) for t in types
    }


def ground_all(domain: Domain, objects: Mapping[str, str]) -> list[GroundAction]:
    """All type-consistent groundings, sorted by (action name, argument tuple)."""
    pools = objects_by_type(domain, objects)
    out = []
    for schema in domain.actions.values():
        candidates = [pools.get(t, []) for _, t in schema.params]
        for args in itertools.product(*candidates):
            out.append(schema.ground(args))
    out.sort()
    return out


def _static_predicates(domain: Domain) -> set[str]:
    changed = {a.predicate for s in domain.actions.values() for a in s.add_effects + s.del_effects}
    return set(domain.predicates) - changed


def _relevant(actions: list[GroundAction], goal: frozenset) -> list[GroundAction]:
    """Backward relevance: keep actions that can contribute to the goal, transitively.

    A positive literal is served by actions adding its atom; a negative literal by
    actions deleting it. Dropping the rest never removes a solution.
    """
    adders: dict = {}
    deleters: dict = {}
    for act in actions:
        for a in act.add:
            adders.setdefault(a, []).append(act)
        for a in act.delete:
            deleters.setdefault(a, []).append(act)
    needed = set(goal)
    frontier = list(goal)
    keep: set[GroundAction] = set()
    while frontier:
        lit = frontier.pop()
        pool = adders if lit.positive else deleters
        for act in pool.get(lit.atom, ()):
            if act in keep:
                continue
            keep.add(act)
            for sub in act.preconditions:
                if sub not in needed:
                    needed.add(sub)
                    frontier.append(sub)
    return [a for a in actions if a in keep]


class PlanningTask:
    """Grounded actions for a fixed domain and object set, reusable across replans."""

    def __init__(self, domain: Domain, objects: Mapping[str, str]):
        self.domain = domain
        self.objects = dict(objects)
        self._grounded = ground_all(domain, objects)
        self._static = _static_predicates(domain)
        self._relevance_cache: dict[frozenset, list[GroundAction]] = {}

    @property
    def actions(self) -> list[GroundAction]:
        return list(self._grounded)

    def _candidates(self, init: frozenset, goal: frozenset) -> list[GroundAction]:
        # static atoms never change, so groundings contradicting them are dead
        static_init = frozenset(a for a in init if a.predicate in self._static)
        key = goal | {("static", static_init)}
        cached = self._relevance_cache.get(key)
        if cached is not None:
            return cached
        live = [
            a
            for a in self._grounded
            if all(p in static_init for p in a.pre_pos if p.predicate in self._static)
            and not any(p in static_init for p in a.pre_neg if p.predicate in self._static)
        ]
        result = _relevant(live, goal)
        if len(self._relevance_cache) > 256:
            self._relevance_cache.clear()
        self._relevance_cache[key] = result
        return result

    def plan(
        self,
        init: Iterable,
        goal: Iterable[Literal],
        mode: str = "greedy",
        max_expansions: int = DEFAULT_MAX_EXPANSIONS,
    ) -> Plan:
        """Search for a plan; raises NoPlanFound or SearchBudgetExceeded.

        ``mode="greedy"`` is greedy best-first on the goal-count heuristic,
        ``mode="optimal"`` is uniform-cost search (unit costs, shortest plan).
        """
        init = frozenset(init)
        goal = frozenset(goal)
        if satisfies(init, goal):
            return Plan(())
        actions = self._candidates(init, goal)
        achievable = set().union(*(a.add for a in actions)) if actions else set()
        for lit in goal:
            if lit.positive and lit.atom not in init and lit.atom not in achievable:
                raise NoPlanFound(f"no action adds goal atom {lit.atom}")
        if mode == "greedy":
            return _best_first(init, goal, actions, max_expansions, greedy=True)
        if mode == "optimal":
            return _best_first(init, goal, actions, max_expansions, greedy=False)
        raise ValueError(f"unknown search mode {mode!r}")


def _goal_count(state: frozenset, goal: frozenset) -> int:
    return sum((lit.atom in state) != lit.positive for lit in goal)


def _best_first(init, goal, actions, max_expansions, greedy: bool) -> Plan:
    counter = itertools.count()
    parents: dict[frozenset, tuple] = {init: (None, None)}
    key = _goal_count(init, goal) if greedy else 0
    frontier = [(key, 0, next(counter), init)]
    expansions = 0
    while frontier:
        _, g, _, state = heapq.heappop(frontier)
        if not greedy and satisfies(state, goal):
            return Plan(_extract(parents, state), expansions)
        if expansions >= max_expansions:
            raise SearchBudgetExceeded(expansions)
        expansions += 1
        for act in actions:
            if not (act.pre_pos <= state) or (act.pre_neg & state):
                continue
            nxt = (state - act.delete) | act.add
            if nxt in parents:
                continue
            parents[nxt] = (state, act)
            if greedy:
                h = _goal_count(nxt, goal)
                if h == 0:
                    return Plan(_extract(parents, nxt), expansions)
                heapq.heappush(frontier, (h, g + 1, next(counter), nxt))
            else:
                heapq.heappush(frontier, (g + 1, g + 1, next(counter), nxt))
    raise NoPlanFound(f"reachable state space exhausted after {expansions} expansions")


def _extract(parents, state) -> tuple[GroundAction, ...]:
    steps = []
    while True:
        prev, act = parents[state]
        if act is None:
            break
        steps.append(act)
        state = prev
    return tuple(reversed(steps))


def plan(
    domain: Domain,
    init: Iterable,
    goal: Iterable[Literal],
    objects: Mapping[str, str] | None = None,
    mode: str = "greedy",
    max_expansions: int = DEFAULT_MAX_EXPANSIONS,
) -> Plan:
    """One-shot planning; objects default to those mentioned in init and goal."""
    init = frozenset(init)
    goal = frozenset(goal)
    if objects is None:
        objects = _infer_objects(domain, init, goal)
    return PlanningTask(domain, objects).plan(init, goal, mode, max_expansions)


def solve(domain: Domain, problem: Problem, mode: str = "greedy", **kw) -> Plan:
    return plan(domain, problem.init, problem.goal, problem.objects, mode=mode, **kw)


def _infer_objects(domain: Domain, init, goal) -> dict[str, str]:
    objects: dict[str, str] = {}
    for a in itertools.chain(init, (l.atom for l in goal)):
        schema = domain.predicates[a.predicate]
        for arg, t in zip(a.args, schema.param_types):
            if arg in domain.constants:
                continue
            # keep the most specific type seen for the object
            prev = objects.get(arg)
            if prev is None or domain.is_subtype(t, prev):
                objects[arg] = t
    return objects


def validate_plan(domain: Domain, init: Iterable, plan_: Iterable[GroundAction], goal) -> Validation:
    """VAL-style check: sequential applicability, then goal satisfaction.

    On failure, ``failure_index`` is the first inapplicable step, or ``len(plan)``
    when every step applies but the goal does not hold at the end.
    """
    state = frozenset(init)
    steps = list(plan_)
    for i, act in enumerate(steps):
        if act.name in domain.actions:
            act = domain.ground(act.name, *act.args)
        if not applicable(state, act):
            return Validation(False, i)
        state = (state - act.delete) | act.add
    if not satisfies(state, goal):
        return Validation(False, len(steps))
    return Validation(True, None)
