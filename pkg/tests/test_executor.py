import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tamploop.executor import (
    ACTION_BUDGET,
    GOAL,
    NO_PLAN,
    REPLAN_BUDGET,
    ExecutionBudget,
    Strategy,
    handle_situation,
    refresh,
    run_task,
    write_log,
)
from tamploop.pddl import PlanningTask, atom, load_domain, pos
from tamploop.perception import GroundTruthBackend, NoisyBackend
from tamploop.scenegraph import apply_effects
from tamploop.worldsim import InapplicableAction, SituationTable, parse_scenario, read_scenario

from conftest import ScriptedRng, kitchen_spec

D = load_domain()
HALVE = [pos("halved", "egg")]


def kitchen(rng=None, **kw):
    sc = parse_scenario(kitchen_spec(**kw))
    return sc, sc.make_world(rng if rng is not None else np.random.default_rng(0))


def test_strategy_parse():
    assert Strategy.parse("sucaff-qa") is Strategy.SUCAFF_QA
    assert Strategy.parse("Full") is Strategy.FULL
    with pytest.raises(ValueError, match="Full"):
        Strategy.parse("everything")


def test_budget_validation():
    ExecutionBudget(max_replans=0, viewpoint_budget=0)
    with pytest.raises(ValueError):
        ExecutionBudget(max_actions=0)


@pytest.mark.parametrize("strategy", list(Strategy))
def test_nothing_fails(strategy):
    sc, w = kitchen()
    r = run_task(w, D, sc.problem.goal, strategy, GroundTruthBackend(), table=SituationTable.zero())
    assert r.success and r.replans == 0 and r.termination == GOAL
    assert r.failure_mode is None


def test_grasp_effect_failure_replans_from_floor():
    sc, w = kitchen(ScriptedRng(0.3))  # the first grasp drops the cup
    task = PlanningTask(D, w.types)
    g = w.scene_graph()
    a = D.ground("grasp", "cup", "table")
    w.execute(a, SituationTable.default())
    g = apply_effects(g, a)
    plan, g = handle_situation(g, atom("holding", "robot", "cup"), False, w, task, [pos("holding", "robot", "cup")])
    assert [str(x) for x in plan.actions] == ["grasp(cup, kitchen_floor)"]


def test_closed_receptacle_prepends_open():
    sc, w = kitchen(articulation={"cabinet": True})
    task = PlanningTask(D, w.types)
    w.execute(D.ground("grasp", "cup", "table"), SituationTable.zero())
    g = w.scene_graph()
    w.articulation["cabinet"] = False  # closed behind the robot's back
    plan, _ = handle_situation(g, atom("open", "cabinet"), False, w, task, [pos("inside", "cup", "cabinet")])
    assert [str(x) for x in plan.actions] == ["open(cabinet)", "placein(cup, cabinet)"]


def test_already_satisfied_after_correction():
    sc, w = kitchen()
    task = PlanningTask(D, w.types)
    plan, _ = handle_situation(w.scene_graph(), atom("on", "cup", "table"), True, w, task, [pos("on", "cup", "table")])
    assert len(plan) == 0


def test_sucaff_asks_both():
    sc, w = kitchen()
    r = run_task(w, D, HALVE, "SucAffQA", GroundTruthBackend(), table=SituationTable.zero(), log=True)
    texts = [e["text"] for e in r.log if e["kind"] == "question"]
    assert "Is it possible to cut the egg?" in texts
    assert "Did the robot successfully cut the egg?" in texts
    assert len(texts) == 2 * r.actions_executed


def test_terminations_reachable(tmp_path):
    sc, w = kitchen()
    r = run_task(w, D, [pos("on", "cabinet", "table")], "Full", GroundTruthBackend())
    assert r.termination == NO_PLAN and not r.success

    always_fail = SituationTable.default().with_overrides(
        {"grasp": {"Grasp fails, object unchanged": 1.0, "Grasp fails, object drops nearby": 0.0}}
    )
    sc, w = kitchen()
    r = run_task(w, D, HALVE, "Full", GroundTruthBackend(), ExecutionBudget(max_replans=3), always_fail)
    assert r.termination == REPLAN_BUDGET and r.replans == 3

    sc, w = kitchen()
    r = run_task(w, D, HALVE, "Full", GroundTruthBackend(), ExecutionBudget(max_actions=1), SituationTable.zero(),
                 log=True)
    assert r.termination == ACTION_BUDGET and r.actions_executed == 1
    write_log(r.log, tmp_path / "log.jsonl")
    assert (tmp_path / "log.jsonl").read_text().count("\n") == len(r.log)


def test_open_loop_counts_hard_failures():
    # the egg is never reached because the grasp keeps failing; cut is then inapplicable
    sc, w = kitchen(ScriptedRng(0.1, 0.99, 0.99))
    plan = [D.ground("grasp", "knife", "table"), D.ground("cut", "egg", "knife")]
    r = run_task(w, D, HALVE, "NoVerification", GroundTruthBackend(), plan=plan)
    assert r.hard_failures == 1 and not r.success and r.failure_mode == "undetected-situation"


def test_find_navigates_with_held_object():
    sc = read_scenario("halve-egg")
    w = sc.make_world(np.random.default_rng(0))
    plan = [D.ground("grasp", "knife", "counter"), D.ground("find", "egg"), D.ground("cut", "egg", "knife")]
    r = run_task(w, D, sc.problem.goal, "NoVerification", GroundTruthBackend(), table=SituationTable.zero(), plan=plan)
    assert r.success and w.robot.room == "dining_room"


def test_open_loop_matches_product():
    sc = read_scenario("halve-egg")
    plan = [D.ground("grasp", "knife", "counter"), D.ground("find", "egg"), D.ground("cut", "egg", "knife")]
    task = PlanningTask(D, sc.make_world().types)
    n = 2000
    wins = 0
    for seed in range(n):
        w = sc.make_world(np.random.default_rng(seed))
        wins += run_task(w, D, sc.problem.goal, "NoVerification", GroundTruthBackend(), table=sc.table,
                         planner=task, plan=plan).success
    p = 0.5 * 0.9 * 0.5
    assert abs(wins / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(list(Strategy)), st.integers(0, 3), st.integers(1, 8),
       st.sampled_from(["boil-water", "halve-egg", "heat-pie"]))
def test_budgets_respected_and_deterministic(seed, strategy, replans, actions, scenario):
    sc = read_scenario(scenario)
    budget = ExecutionBudget(max_replans=replans, viewpoint_budget=2, max_actions=actions)
    results = []
    for _ in range(2):
        w = sc.make_world(np.random.default_rng(seed))
        b = NoisyBackend(np.random.default_rng(seed + 1))
        results.append(run_task(w, D, sc.problem.goal, strategy, b, budget, sc.table))
    a, b = results
    assert a.replans <= replans and a.actions_executed <= actions
    assert (a.success, a.termination, a.situations, a.actions_executed, a.replans, a.queries) == \
           (b.success, b.termination, b.situations, b.actions_executed, b.replans, b.queries)


SHARED = {"on", "inside", "holding"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 10_000), min_size=1, max_size=6))
def test_refresh_couples_graph_to_truth(seed, picks):
    sc, w = kitchen(np.random.default_rng(seed), articulation={"cabinet": True})
    task = PlanningTask(D, w.types)
    g = w.scene_graph()
    table = SituationTable.default()
    for k in picks:
        state = g.relations
        options = [a for a in task.actions if a.pre_pos <= state and not (a.pre_neg & state)]
        if not options:
            break
        a = options[k % len(options)]
        try:
            w.execute(a, table)
        except InapplicableAction:
            pass
        g = refresh(apply_effects(g, a), w)
        visible = w.observe().visible | ({w.robot.held} if w.robot.held else set())
        seen = {x for x in g.relations if x.predicate in SHARED and set(x.args) - {"robot"} <= visible}
        true = {x for x in w.truth() if x.predicate in SHARED and set(x.args) - {"robot"} <= visible}
        assert seen == true
