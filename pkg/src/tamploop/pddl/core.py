"""Symbolic model: atoms, literals, schemas, and STRIPS state transitions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

ROOT_TYPE = "object"


class PDDLError(ValueError):
    """Base class for every PDDL parsing or consistency failure."""


class PDDLSyntaxError(PDDLError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnsupportedFeatureError(PDDLError):
    """Raised for PDDL constructs outside STRIPS + typing + negative preconditions."""

    def __init__(self, feature: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: unsupported PDDL feature '{feature}'")
        self.feature = feature


class PDDLSemanticError(PDDLError):
    """Arity, type, or declaration mismatch."""


class PreconditionViolated(ValueError):
    """apply() was called on an action whose preconditions do not hold."""


class Atom(NamedTuple):
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(self.args)})"

    def to_pddl(self) -> str:
        return "(" + " ".join((self.predicate,) + self.args) + ")"

    def substitute(self, binding: Mapping[str, str]) -> "Atom":
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))


GroundAtom = Atom
SymbolicState = frozenset  # frozenset[Atom], closed-world


class Literal(NamedTuple):
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"not {self.atom}"

    def to_pddl(self) -> str:
        return self.atom.to_pddl() if self.positive else f"(not {self.atom.to_pddl()})"

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)


def atom(predicate: str, *args: str) -> Atom:
    return Atom(predicate, tuple(args))


def pos(predicate: str, *args: str) -> Literal:
    return Literal(Atom(predicate, tuple(args)), True)


def neg(predicate: str, *args: str) -> Literal:
    return Literal(Atom(predicate, tuple(args)), False)


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    param_types: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    preconditions: tuple[Literal, ...] = ()
    add_effects: tuple[Atom, ...] = ()
    del_effects: tuple[Atom, ...] = ()

    def __post_init__(self):
        variables = {name for name, _ in self.params}
        for lit_atom in itertools.chain(
            (lit.atom for lit in self.preconditions), self.add_effects, self.del_effects
        ):
            for arg in lit_atom.args:
                if arg.startswith("?") and arg not in variables:
                    raise PDDLSemanticError(
                        f"action '{self.name}': variable {arg} in {lit_atom} is not a parameter"
                    )
        both = set(self.add_effects) & set(self.del_effects)
        if both:
            raise PDDLSemanticError(
                f"action '{self.name}': atoms both added and deleted: "
                + ", ".join(sorted(map(str, both)))
            )

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.params)

    def ground(self, args: Iterable[str]) -> "GroundAction":
        args = tuple(args)
        if len(args) != len(self.params):
            raise PDDLSemanticError(
                f"action '{self.name}' takes {len(self.params)} arguments, got {len(args)}"
            )
        binding = dict(zip(self.param_names, args))
        return GroundAction(
            name=self.name,
            args=args,
            pre_pos=frozenset(l.atom.substitute(binding) for l in self.preconditions if l.positive),
            pre_neg=frozenset(
                l.atom.substitute(binding) for l in self.preconditions if not l.positive
            ),
            add=frozenset(a.substitute(binding) for a in self.add_effects),
            delete=frozenset(a.substitute(binding) for a in self.del_effects),
        )


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre_pos: frozenset = field(default=frozenset(), compare=False)
    pre_neg: frozenset = field(default=frozenset(), compare=False)
    add: frozenset = field(default=frozenset(), compare=False)
    delete: frozenset = field(default=frozenset(), compare=False)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"

    def to_pddl(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"

    @property
    def preconditions(self) -> tuple[Literal, ...]:
        """Preconditions in canonical (sorted, positives first) order."""
        return tuple(Literal(a, True) for a in sorted(self.pre_pos)) + tuple(
            Literal(a, False) for a in sorted(self.pre_neg)
        )


@dataclass
class Domain:
    name: str
    requirements: tuple[str, ...] = (":strips",)
    types: dict[str, str] = field(default_factory=dict)  # child -> parent
    constants: dict[str, str] = field(default_factory=dict)  # name -> type
    predicates: dict[str, PredicateSchema] = field(default_factory=dict)
    actions: dict[str, ActionSchema] = field(default_factory=dict)

    def ancestors(self, type_name: str) -> list[str]:
        chain = [type_name]
        seen = {type_name}
        while chain[-1] in self.types:
            parent = self.types[chain[-1]]
            if parent in seen:
                raise PDDLSemanticError(f"cyclic type hierarchy at '{parent}'")
            seen.add(parent)
            chain.append(parent)
        if chain[-1] != ROOT_TYPE:
            chain.append(ROOT_TYPE)
        return chain

    def is_subtype(self, child: str, parent: str) -> bool:
        return parent == ROOT_TYPE or parent in self.ancestors(child)

    def known_type(self, type_name: str) -> bool:
        return type_name == ROOT_TYPE or type_name in self.types or type_name in self.types.values()

    def ground(self, name: str, *args: str) -> GroundAction:
        try:
            schema = self.actions[name]
        except KeyError:
            raise PDDLSemanticError(f"unknown action '{name}'") from None
        return schema.ground(args)

    def check_atom(self, a: Atom, objects: Mapping[str, str]) -> None:
        """Validate predicate arity and argument types against declared objects."""
        schema = self.predicates.get(a.predicate)
        if schema is None:
            raise PDDLSemanticError(f"unknown predicate '{a.predicate}' in {a}")
        if len(a.args) != schema.arity:
            raise PDDLSemanticError(
                f"predicate '{a.predicate}' has arity {schema.arity}, got {len(a.args)} in {a}"
            )
        for arg, expected in zip(a.args, schema.param_types):
            obj_type = objects.get(arg, self.constants.get(arg))
            if obj_type is None:
                raise PDDLSemanticError(f"undeclared object '{arg}' in {a}")
            if not self.is_subtype(obj_type, expected):
                raise PDDLSemanticError(
                    f"object '{arg}' of type '{obj_type}' does not match '{expected}' in {a}"
                )


@dataclass
class Problem:
    name: str
    domain_name: str
    objects: dict[str, str]
    init: frozenset
    goal: frozenset  # frozenset[Literal]

    def __eq__(self, other):
        if not isinstance(other, Problem):
            return NotImplemented
        return (
            self.name == other.name
            and self.domain_name == other.domain_name
            and self.objects == other.objects
            and self.init == other.init
            and self.goal == other.goal
        )


def applicable(state: frozenset, a: GroundAction) -> bool:
    return a.pre_pos <= state and not (a.pre_neg & state)


def apply(state: frozenset, a: GroundAction) -> frozenset:
    if not applicable(state, a):
        missing = sorted(map(str, a.pre_pos - state))
        present = sorted(map(str, a.pre_neg & state))
        raise PreconditionViolated(
            f"{a}: missing {missing or '[]'}, forbidden present {present or '[]'}"
        )
    return (state - a.delete) | a.add


def satisfies(state: frozenset, goal: Iterable[Literal]) -> bool:
    return all((lit.atom in state) == lit.positive for lit in goal)
