"""Closed-loop plan execution: navigate, verify preconditions, execute, verify effects, replan."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .pddl.core import Atom, Domain, GroundAction, Literal
from .pddl.planner import NoPlanFound, Plan, PlanningTask, SearchBudgetExceeded
from .perception.backends import PerceptionBackend, Question
from .perception.templates import action_level_question
from .perception.verify import verify_predicate
from .scenegraph import (
    AGENT_IDS,
    SceneGraph,
    apply_effects,
    correct,
    revert_effects,
    to_initial_state,
    update_from_observation,
)
from .worldsim.situations import SituationTable
from .worldsim.world import InapplicableAction, World

GOAL = "goal"
REPLAN_BUDGET = "replan-budget"
ACTION_BUDGET = "action-budget"
NO_PLAN = "no-plan"
TERMINATIONS = (GOAL, REPLAN_BUDGET, ACTION_BUDGET, NO_PLAN)


class Strategy(str, Enum):
    FULL = "Full"
    EFFECTS_ONLY = "EffectsOnly"
    PRECONDITIONS_ONLY = "PreconditionsOnly"
    SUCCESS_QA = "SuccessQA"
    AFFORDANCE_QA = "AffordanceQA"
    SUCAFF_QA = "SucAffQA"
    NO_VERIFICATION = "NoVerification"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        key = name.replace("-", "").replace("_", "").lower()
        for s in cls:
            if s.value.lower() == key or s.name.replace("_", "").lower() == key:
                return s
        raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(s.value for s in cls)}")

    @property
    def checks_preconditions(self) -> bool:
        return self in (Strategy.FULL, Strategy.PRECONDITIONS_ONLY)

    @property
    def checks_effects(self) -> bool:
        return self in (Strategy.FULL, Strategy.EFFECTS_ONLY)

    @property
    def asks_success(self) -> bool:
        return self in (Strategy.SUCCESS_QA, Strategy.SUCAFF_QA)

    @property
    def asks_affordance(self) -> bool:
        return self in (Strategy.AFFORDANCE_QA, Strategy.SUCAFF_QA)


@dataclass(frozen=True)
class ExecutionBudget:
    max_replans: int = 20
    viewpoint_budget: int = 6
    max_actions: int = 200

    def __post_init__(self):
        if self.max_replans < 0 or self.viewpoint_budget < 0 or self.max_actions < 1:
            raise ValueError(f"invalid budget {self}")


@dataclass
class TrialResult:
    success: bool
    actions_executed: int
    replans: int
    situations: list[tuple[int, str]]
    viewpoints_total: int
    termination: str
    verifications: int = 0
    queries: int = 0
    viewpoint_resolutions: list[int] = field(default_factory=list)
    hard_failures: int = 0
    failure_mode: str | None = None
    log: list[dict] = field(default_factory=list, repr=False)


class _Log:
    def __init__(self, enabled: bool):
        self.records: list[dict] | None = [] if enabled else None

    def __call__(self, step: int, kind: str, **fields) -> None:
        if self.records is not None:
            self.records.append({"step": step, "kind": kind, **fields})


def write_log(records: Iterable[dict], path) -> None:
    """One JSON object per line."""
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def refresh(graph: SceneGraph, world: World) -> SceneGraph:
    """Re-observe from the current pose and fold visible geometry and the gripper into the graph."""
    obs = world.observe()
    graph = update_from_observation(graph, obs.objects, held=obs.held, thresholds=world.thresholds)
    seen = {Atom("inview", (k,)) for k in obs.visible}
    if seen - graph.relations:
        graph = SceneGraph(graph.objects, graph.relations | seen, graph.version + 1)
    return graph


def handle_situation(
    graph: SceneGraph,
    failed_atom: Atom,
    verdict: bool,
    world: World,
    planner: PlanningTask,
    goal: Sequence[Literal],
    mode: str = "greedy",
) -> tuple[Plan, SceneGraph]:
    """Correct the failed atom, re-observe, and plan again from the corrected state.

    Raises NoPlanFound when the corrected state admits no plan.
    """
    graph = correct(graph, failed_atom, verdict)
    graph = refresh(graph, world)
    return _plan(planner, graph, goal, mode), graph


def _plan(planner: PlanningTask, graph: SceneGraph, goal, mode: str) -> Plan:
    try:
        return planner.plan(to_initial_state(graph), goal, mode=mode)
    except SearchBudgetExceeded as e:
        raise NoPlanFound(str(e)) from None


def navigate(world: World, graph: SceneGraph, a: GroundAction) -> str:
    """Drive to the believed room of the action's first argument not in hand."""
    held = graph.held()
    for arg in a.args:
        if arg in AGENT_IDS or arg in held or arg not in graph.objects:
            continue
        room = graph.room_of(arg)
        if room is not None:
            world.navigate(room)
            return room
    world.navigate(world.robot.room)
    return world.robot.room


def _affordance_truth(world: World, a: GroundAction) -> bool:
    # find carries its own navigation, so it is feasible whenever the object exists
    return True if a.name == "find" else world.action_applicable(a)


def _failure_mode(result: TrialResult) -> str | None:
    if result.success:
        return None
    if result.termination != GOAL:
        return result.termination
    return "undetected-situation" if result.situations or result.hard_failures else "false-verdict"


def run_task(
    world: World,
    domain: Domain,
    goal: Sequence[Literal],
    strategy: Strategy | str,
    backend: PerceptionBackend,
    budget: ExecutionBudget = ExecutionBudget(),
    table: SituationTable | None = None,
    *,
    planner: PlanningTask | None = None,
    plan: Sequence[GroundAction] | None = None,
    graph: SceneGraph | None = None,
    mode: str = "greedy",
    log: bool = False,
) -> TrialResult:
    """Execute ``goal`` in ``world`` under ``strategy``; never raises for task-level failures.

    ``plan`` replaces the first planner call (for scripted open-loop runs);
    ``graph`` defaults to a fully explored map of the world.
    """
    strategy = Strategy.parse(strategy) if isinstance(strategy, str) else strategy
    table = table if table is not None else SituationTable.default()
    planner = planner if planner is not None else PlanningTask(domain, world.types)
    goal = list(goal)
    graph = graph if graph is not None else world.scene_graph()
    emit = _Log(log)
    st = dict(executed=0, replans=0, viewpoints=0, verifications=0, queries=0, hard=0)
    situations: list[tuple[int, str]] = []
    resolutions: list[int] = []

    def finish(termination: str) -> TrialResult:
        success = termination == GOAL and world.satisfies(goal)
        emit(st["executed"], "end", termination=termination, success=success)
        r = TrialResult(
            success, st["executed"], st["replans"], situations, st["viewpoints"], termination,
            st["verifications"], st["queries"], resolutions, st["hard"],
        )
        r.failure_mode = _failure_mode(r)
        r.log = emit.records or []
        return r

    def verify(atom: Atom) -> bool:
        nonlocal graph
        obs = world.observe()
        v, graph, _ = verify_predicate(
            obs, atom, backend, graph, budget.viewpoint_budget, world, thresholds=world.thresholds
        )
        st["verifications"] += 1
        st["queries"] += v.queries
        st["viewpoints"] += v.viewpoints_used
        if v.viewpoints_used:
            resolutions.append(v.viewpoints_used)
        emit(st["executed"], "verify", atom=str(atom), value=v.value, consistent=v.consistent,
             viewpoints=v.viewpoints_used, responses=[int(x) for x in v.responses])
        return v.value

    def ask(a: GroundAction, phase: str, truth: bool) -> bool:
        kind = "success" if phase == "after" else "affordance"
        q = Question(action_level_question(a, phase), None, kind, truth)
        ans = backend.answer(world.observe(), q)
        st["queries"] += 1
        emit(st["executed"], "question", text=q.text, answer=ans, truth=truth)
        return ans

    def replan(reason: str, fix: tuple[Atom, bool] | None = None) -> str | None:
        """Returns a termination label, or None when a new plan is in place."""
        nonlocal graph, current
        if st["replans"] >= budget.max_replans:
            return REPLAN_BUDGET
        st["replans"] += 1
        try:
            if fix is not None:
                new, graph = handle_situation(graph, fix[0], fix[1], world, planner, goal, mode)
            else:
                graph = refresh(graph, world)
                new = _plan(planner, graph, goal, mode)
        except NoPlanFound as e:
            emit(st["executed"], "replan", reason=reason, error=str(e))
            return NO_PLAN
        current = list(new.actions)
        emit(st["executed"], "replan", reason=reason, plan=[str(x) for x in current])
        return None

    try:
        current = list(plan) if plan is not None else list(_plan(planner, graph, goal, mode).actions)
    except NoPlanFound as e:
        emit(0, "plan", error=str(e))
        return finish(NO_PLAN)
    emit(0, "plan", plan=[str(x) for x in current])

    while current:
        if st["executed"] >= budget.max_actions:
            return finish(ACTION_BUDGET)
        for label in world.fire_events(st["executed"]):
            situations.append((st["executed"], label))
            emit(st["executed"], "event", label=label)
        a = current.pop(0)
        if a.name != "find":
            emit(st["executed"], "navigate", action=str(a), room=navigate(world, graph, a))

        if strategy.checks_preconditions:
            failed = None
            for lit in a.preconditions:
                value = verify(lit.atom)
                if value != lit.positive:
                    failed = (lit.atom, value)
                    break
            if failed is not None:
                term = replan(f"precondition {'' if failed[1] else 'not '}{failed[0]}", failed)
                if term:
                    return finish(term)
                continue

        if strategy.asks_affordance and not ask(a, "before", _affordance_truth(world, a)):
            term = replan(f"affordance {a}")
            if term:
                return finish(term)
            continue

        if a.name == "find":
            emit(st["executed"], "navigate", action=str(a), room=navigate(world, graph, a))
        step = st["executed"]
        try:
            outcome = world.execute(a, table)
            nominal, label = outcome.nominal, outcome.situation
        except InapplicableAction as e:
            nominal, label = False, None
            st["hard"] += 1
            emit(step, "hard-failure", action=str(a), reason=e.reason)
        st["executed"] += 1
        emit(step, "execute", action=str(a), nominal=nominal, situation=label)
        if label is not None:
            situations.append((step, label))
        graph = apply_effects(graph, a)

        if strategy.asks_success and not ask(a, "after", nominal):
            graph = revert_effects(graph, a)
            term = replan(f"success {a}")
            if term:
                return finish(term)
            continue

        if strategy.checks_effects:
            for x in sorted(a.add):
                if not verify(x):
                    term = replan(f"effect {x}", (x, False))
                    if term:
                        return finish(term)
                    break
    return finish(GOAL)
