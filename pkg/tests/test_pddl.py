import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tamploop.pddl import (
    Atom,
    NoPlanFound,
    PDDLSemanticError,
    PDDLSyntaxError,
    PlanningTask,
    PreconditionViolated,
    UnsupportedFeatureError,
    applicable,
    apply,
    atom,
    load_domain,
    neg,
    parse_domain,
    parse_literals,
    parse_problem,
    plan,
    pos,
    satisfies,
    serialize_domain,
    serialize_problem,
    solve,
    validate_plan,
)

from oracles import bfs_plan_length, random_household_problem

GRASP_DOMAIN = """
(define (domain mini)
  (:requirements :strips)
  (:predicates (inview ?o) (hand_empty) (inhand ?o) (on ?o ?s))
  (:action grasp
    :parameters (?o)
    :precondition (and (inview ?o) (hand_empty))
    :effect (and (inhand ?o) (not (hand_empty)))))
"""

PICK_DOMAIN = """
(define (domain pick)
  (:requirements :strips :typing)
  (:types item surface agent)
  (:constants robot - agent)
  (:predicates (on ?o - item ?s - surface) (holding ?r - agent ?o - item) (hand_empty))
  (:action pick
    :parameters (?o - item ?s - surface)
    :precondition (and (on ?o ?s) (hand_empty))
    :effect (and (holding robot ?o) (not (on ?o ?s)) (not (hand_empty))))
  (:action place
    :parameters (?o - item ?s - surface)
    :precondition (and (holding robot ?o))
    :effect (and (on ?o ?s) (hand_empty) (not (holding robot ?o)))))
"""


@pytest.fixture(scope="module")
def household():
    return load_domain()


class TestParsing:
    def test_grasp_domain_shape(self):
        d = parse_domain(GRASP_DOMAIN)
        assert len(d.actions) == 1
        g = d.actions["grasp"]
        assert {str(l.atom) for l in g.preconditions} == {"inview(?o)", "hand_empty"}
        assert len(d.predicates) == 4

    def test_three_predicate_domain(self):
        text = GRASP_DOMAIN.replace(" (on ?o ?s)", "")
        assert len(parse_domain(text).predicates) == 3

    def test_empty_action_list(self):
        d = parse_domain("(define (domain empty) (:predicates (p)))")
        assert d.actions == {} and len(d.predicates) == 1

    def test_undeclared_effect_variable(self):
        bad = GRASP_DOMAIN.replace("(inhand ?o)", "(inhand ?x)")
        with pytest.raises(PDDLSemanticError, match=r"\?x"):
            parse_domain(bad)

    def test_syntax_error_has_position(self):
        with pytest.raises(PDDLSyntaxError):
            parse_domain("(define (domain x) (:predicates (p))")

    def test_unsupported_feature_is_named(self):
        text = GRASP_DOMAIN.replace("(and (inview ?o) (hand_empty))", "(or (inview ?o) (hand_empty))")
        with pytest.raises(UnsupportedFeatureError, match="or"):
            parse_domain(text)

    def test_problem_init_count(self):
        d = parse_domain(GRASP_DOMAIN)
        p = parse_problem(
            "(define (problem p) (:domain mini) (:objects cup table)"
            " (:init (on cup table) (hand_empty)) (:goal (inhand cup)))", d,
        )
        assert len(p.init) == 2
        assert p.goal == frozenset({pos("inhand", "cup")})

    def test_goal_with_unknown_object(self):
        d = parse_domain(GRASP_DOMAIN)
        with pytest.raises(PDDLSemanticError, match="mug"):
            parse_problem(
                "(define (problem p) (:domain mini) (:objects cup)"
                " (:init (hand_empty)) (:goal (inhand mug)))", d,
            )

    def test_domain_fixpoint(self, household):
        again = parse_domain(serialize_domain(household))
        assert again == household
        assert serialize_domain(again) == serialize_domain(household)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_problem_fixpoint(self, seed):
        d = load_domain()
        p = random_household_problem(d, np.random.default_rng(seed))
        text = serialize_problem(p)
        assert parse_problem(text, d) == p
        assert serialize_problem(parse_problem(text, d)) == text

    def test_literal_notation(self):
        lits = parse_literals("on(cup, table), not open(Cabinet), ¬ holding(robot, cup)")
        assert lits == [pos("on", "cup", "table"), neg("open", "cabinet"), neg("holding", "robot", "cup")]
        assert parse_literals("(and (on cup table) (not (open c)))") == [
            pos("on", "cup", "table"), neg("open", "c"),
        ]


class TestSemantics:
    def test_grasp_applicable(self):
        d = parse_domain(GRASP_DOMAIN)
        g = d.ground("grasp", "cup")
        assert applicable(frozenset({atom("inview", "cup"), atom("hand_empty")}), g)
        assert not applicable(frozenset(), g)
        knife = d.ground("grasp", "knife")
        assert not applicable(frozenset({atom("inhand", "cup")}), knife)

    def test_pick_effects(self):
        d = parse_domain(PICK_DOMAIN)
        s = frozenset({atom("on", "cup", "table"), atom("hand_empty")})
        assert apply(s, d.ground("pick", "cup", "table")) == {atom("holding", "robot", "cup")}

    def test_apply_rejects_inapplicable(self):
        d = parse_domain(PICK_DOMAIN)
        with pytest.raises(PreconditionViolated, match="hand_empty"):
            apply(frozenset({atom("on", "cup", "table")}), d.ground("pick", "cup", "table"))

    def test_empty_effects_identity(self):
        d = parse_domain(
            "(define (domain n) (:predicates (p)) (:action noop :parameters () :precondition (and) :effect (and)))"
        )
        s = frozenset({atom("p")})
        assert apply(s, d.ground("noop")) == s

    def test_add_then_delete_restores_membership(self):
        d = parse_domain(PICK_DOMAIN)
        s = frozenset({atom("on", "cup", "table"), atom("hand_empty")})
        s2 = apply(apply(s, d.ground("pick", "cup", "table")), d.ground("place", "cup", "table"))
        assert s2 == s

    def test_satisfies(self):
        s = frozenset({atom("holding", "robot", "cup"), atom("on", "a", "b")})
        assert satisfies(s, [pos("on", "a", "b")])
        assert satisfies(s, [])
        assert satisfies(frozenset(), [])
        assert not satisfies(s, [neg("holding", "robot", "cup")])

    @settings(max_examples=200, deadline=None)
    @given(
        st.frozensets(st.sampled_from("abcdefgh")),
        st.frozensets(st.sampled_from("abcdefgh")),
        st.frozensets(st.sampled_from("abcdefgh")),
    )
    def test_apply_cardinality(self, state, add, delete):
        from tamploop.pddl import GroundAction

        s = frozenset(Atom(x) for x in state)
        a = GroundAction("x", (), add=frozenset(Atom(x) for x in add),
                         delete=frozenset(Atom(x) for x in delete - add))
        out = apply(s, a)
        assert len(out) == len(s) - len(a.delete & s) + len(a.add - (s - a.delete))
        assert len(out) == len(s) - len(a.delete & s) + len(a.add - s) + len(a.add & a.delete & s)

    @settings(max_examples=200, deadline=None)
    @given(st.frozensets(st.sampled_from("abcdef")), st.frozensets(st.sampled_from("abcdef")),
           st.frozensets(st.sampled_from("abcdef")))
    def test_satisfies_monotone(self, state, extra, goal):
        g = [pos(x) for x in goal]
        s = frozenset(Atom(x) for x in state)
        if satisfies(s, g):
            assert satisfies(s | {Atom(x) for x in extra}, g)


class TestPlanner:
    def test_single_grasp(self):
        d = parse_domain(GRASP_DOMAIN)
        init = {atom("on", "cup", "table"), atom("hand_empty"), atom("inview", "cup")}
        p = plan(d, init, [pos("inhand", "cup")])
        assert [str(a) for a in p] == ["grasp(cup)"]

    def test_satisfied_goal_is_empty_plan(self):
        d = parse_domain(GRASP_DOMAIN)
        assert len(plan(d, {atom("inhand", "cup")}, [pos("inhand", "cup")])) == 0

    def test_unreachable_predicate(self):
        d = parse_domain(GRASP_DOMAIN)
        with pytest.raises(NoPlanFound):
            plan(d, {atom("hand_empty"), atom("inview", "cup")}, [pos("on", "cup", "table")])

    def test_exhausted_search_is_no_plan(self):
        d = parse_domain(PICK_DOMAIN)
        init = {atom("on", "cup", "table")}  # hand is full forever
        with pytest.raises(NoPlanFound):
            plan(d, init, [pos("holding", "robot", "cup")],
                 objects={"cup": "item", "table": "surface"})

    def test_household_problems_solve(self, household):
        from tamploop.worldsim import bundled_dir

        for f in sorted(bundled_dir("problems").glob("*.pddl")):
            prob = parse_problem(f.read_text(), household)
            p = solve(household, prob)
            assert validate_plan(household, prob.init, p.actions, prob.goal)

    def test_swapped_dependent_actions_fail_at_swap(self, household):
        init = frozenset({atom("hand_empty"), atom("inview", "cup"), atom("inview", "sink"),
                          atom("on", "cup", "table")})
        objs = {"cup": "item", "table": "surface", "sink": "sink"}
        goal = [pos("filled", "cup")]
        p = PlanningTask(household, objs).plan(init, goal)
        assert validate_plan(household, init, p.actions, goal)
        swapped = [p.actions[1], p.actions[0]]
        v = validate_plan(household, init, swapped, goal)
        assert not v and v.failure_index == 0

    def test_empty_plan_validates(self):
        d = parse_domain(GRASP_DOMAIN)
        assert validate_plan(d, {atom("inhand", "c")}, [], [pos("inhand", "c")])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sound_and_optimal(self, seed):
        d = load_domain()
        prob = random_household_problem(d, np.random.default_rng(seed))
        task = PlanningTask(d, prob.objects)
        greedy = task.plan(prob.init, prob.goal)
        assert validate_plan(d, prob.init, greedy.actions, prob.goal)
        best = task.plan(prob.init, prob.goal, mode="optimal")
        assert validate_plan(d, prob.init, best.actions, prob.goal)
        oracle = bfs_plan_length(d, prob.objects, prob.init, prob.goal)
        if oracle is not None:
            assert len(best) == oracle
            assert len(greedy) >= oracle

    def test_determinism(self, household):
        prob = random_household_problem(household, np.random.default_rng(5))
        a = solve(household, prob)
        b = solve(household, prob)
        assert a.actions == b.actions
