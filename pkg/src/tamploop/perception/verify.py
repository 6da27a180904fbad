"""Active predicate verification and goal parsing."""

from __future__ import annotations

from dataclasses import dataclass

from ..pddl.core import Domain, Literal, PDDLError, PDDLSemanticError
from ..pddl.parser import parse_literals
from ..scenegraph import SceneGraph, SpatialThresholds, update_from_observation
from ..worldsim.geometry import UnreachableDirection
from ..worldsim.world import Observation, World
from .backends import PerceptionBackend, ProtocolError, Question
from .templates import N_PARAPHRASES, paraphrase
from .voting import is_consistent, majority_vote


@dataclass(frozen=True)
class Verdict:
    value: bool
    responses: tuple[bool, ...]
    consistent: bool
    viewpoints_used: int = 0
    queries: int = 0
    sufficient: bool = False

    @property
    def budget_exhausted(self) -> bool:
        return not (self.consistent and self.sufficient)


def verify_predicate(
    obs: Observation,
    atom,
    backend: PerceptionBackend,
    graph: SceneGraph,
    K: int = 6,
    world: World | None = None,
    n: int = N_PARAPHRASES,
    min_agree: int | None = None,
    thresholds: SpatialThresholds | None = None,
) -> tuple[Verdict, SceneGraph, Observation]:
    """Ask ``n`` paraphrases; accept a consistent, sufficient answer or move and retry.

    At most ``K`` viewpoint moves and ``(K + 1) * (n + 2)`` backend queries.
    Returns the verdict, the graph updated from any new observations, and the
    latest observation.
    """
    if K < 0:
        raise ValueError("viewpoint budget K must be >= 0")
    world = world if world is not None else obs.world
    thresholds = thresholds or (world.thresholds if world is not None else SpatialThresholds())
    questions = paraphrase(atom, n).questions
    target = World.atom_target(atom)
    used = queries = 0
    for k in range(K + 1):
        responses = tuple(backend.answer(obs, Question(q, atom)) for q in questions)
        queries += len(responses)
        value = majority_vote(responses)
        consistent = is_consistent(responses, min_agree)
        if consistent:
            queries += 1
            if backend.sufficiency(obs, atom):
                return Verdict(value, responses, True, used, queries, True), graph, obs
        if k == K or world is None or target is None:
            break
        queries += 1
        suggestions = backend.viewpoint(obs, atom)
        world.set_target(target)
        moved = False
        for d in suggestions[:2]:  # the suggestion, then the next option once
            try:
                world.move_viewpoint(d)
            except UnreachableDirection:
                continue
            moved = True
            break
        if moved:
            used += 1
            obs = world.observe(target)
            graph = update_from_observation(graph, obs.objects, held=obs.held, thresholds=thresholds)
    return Verdict(value, responses, consistent, used, queries, False), graph, obs


class GoalParseError(ValueError):
    pass


def parse_goal(
    text: str | list | None,
    graph: SceneGraph,
    domain: Domain,
    backend: PerceptionBackend | None = None,
    symbolic: list[Literal] | None = None,
) -> list[Literal]:
    """Goal literals from a symbolic goal (passed through) or a natural-language instruction."""
    if symbolic is not None:
        lits = list(symbolic)
    else:
        if backend is None:
            raise GoalParseError("natural-language goals need a backend that parses goals")
        preds = [
            f"{p.name}({', '.join('XYZ'[i] for i in range(p.arity))})" if p.arity else p.name
            for p in sorted(domain.predicates.values(), key=lambda p: p.name)
        ]
        reply = backend.parse_goal(text, sorted(graph.objects), preds)
        try:
            lits = parse_literals(reply)
        except PDDLError as e:
            raise ProtocolError(f"unparseable goal reply {reply!r}: {e}") from None
    objects = {k: "object" for k in graph.objects}
    for lit in lits:
        schema = domain.predicates.get(lit.atom.predicate)
        if schema is None:
            raise PDDLSemanticError(f"undeclared predicate '{lit.atom.predicate}' in goal")
        if len(lit.atom.args) != schema.arity:
            raise PDDLSemanticError(f"wrong arity in goal literal {lit}")
        for arg in lit.atom.args:
            if arg not in objects and arg not in domain.constants:
                raise PDDLSemanticError(f"undeclared object '{arg}' in goal literal {lit}")
    if not lits:
        raise GoalParseError("goal is empty")
    return lits
