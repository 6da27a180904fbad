"""Parser and canonical serializer for the STRIPS + typing + negative-preconditions subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    Domain,
    Literal,
    PDDLSemanticError,
    PDDLSyntaxError,
    PredicateSchema,
    Problem,
    UnsupportedFeatureError,
)

SUPPORTED_REQUIREMENTS = (":strips", ":typing", ":negative-preconditions")
_UNSUPPORTED_KEYWORDS = {
    "or", "imply", "exists", "forall", "when", "=", "increase", "decrease",
    "assign", "scale-up", "scale-down", "either", "preference",
}
_UNSUPPORTED_SECTIONS = {
    ":functions", ":derived", ":durative-action", ":constraints", ":metric",
    ":timeless", ":process", ":event",
}

_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


@dataclass
class _Sym:
    text: str
    line: int
    col: int


class _List(list):
    line = 0
    col = 0


def _read(text: str) -> list:
    """Read text into nested lists of _Sym; positions are 1-based."""
    stack: list[_List] = [_List()]
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        tok = m.group(0)
        col = m.start() - line_start + 1
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        if tok == "(":
            lst = _List()
            lst.line, lst.col = line, col
            stack[-1].append(lst)
            stack.append(lst)
        elif tok == ")":
            if len(stack) == 1:
                raise PDDLSyntaxError("unexpected ')'", line, col)
            stack.pop()
        else:
            stack[-1].append(_Sym(tok.lower(), line, col))
    if len(stack) > 1:
        open_ = stack[-1]
        raise PDDLSyntaxError("expected ')' before end of input", open_.line, open_.col)
    return stack[0]


def _pos(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _sym(node, what: str) -> str:
    if not isinstance(node, _Sym):
        raise PDDLSyntaxError(f"expected {what}, got a list", *_pos(node))
    return node.text


def _expect_list(node, what: str) -> _List:
    if not isinstance(node, list):
        raise PDDLSyntaxError(f"expected {what}, got '{node.text}'", *_pos(node))
    return node


def _typed_list(items, allow_vars: bool) -> list[tuple[str, str]]:
    """Parse `a b - t c - u d` into [(a,t),(b,t),(c,u),(d,object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        node = items[i]
        name = _sym(node, "name")
        if name == "-":
            if i + 1 >= len(items):
                raise PDDLSyntaxError("expected type name after '-'", *_pos(node))
            type_node = items[i + 1]
            if isinstance(type_node, list):
                head = type_node[0].text if type_node and isinstance(type_node[0], _Sym) else "?"
                raise UnsupportedFeatureError(head, *_pos(type_node))
            if not pending:
                raise PDDLSyntaxError("type annotation without names", *_pos(node))
            out.extend((p, type_node.text) for p in pending)
            pending = []
            i += 2
            continue
        if allow_vars != name.startswith("?"):
            kind = "variable" if allow_vars else "object name"
            raise PDDLSyntaxError(f"expected {kind}, got '{name}'", *_pos(node))
        pending.append(name)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _atom(node) -> Atom:
    lst = _expect_list(node, "atom")
    if not lst:
        raise PDDLSyntaxError("empty atom", *_pos(node))
    head = _sym(lst[0], "predicate name")
    if head in _UNSUPPORTED_KEYWORDS:
        raise UnsupportedFeatureError(head, *_pos(lst[0]))
    return Atom(head, tuple(_sym(n, "argument") for n in lst[1:]))


def _literal(node) -> Literal:
    lst = _expect_list(node, "literal")
    if lst and isinstance(lst[0], _Sym) and lst[0].text == "not":
        if len(lst) != 2:
            raise PDDLSyntaxError("'not' takes exactly one atom", *_pos(node))
        return Literal(_atom(lst[1]), False)
    return Literal(_atom(lst), True)


def _conjunction(node) -> list[Literal]:
    lst = _expect_list(node, "condition")
    if not lst:
        return []
    head = lst[0]
    if isinstance(head, _Sym) and head.text == "and":
        return [_literal(n) for n in lst[1:]]
    if isinstance(head, _Sym) and head.text in _UNSUPPORTED_KEYWORDS:
        raise UnsupportedFeatureError(head.text, *_pos(head))
    return [_literal(lst)]


def _sections(body, allowed: set[str]) -> dict[str, list]:
    out: dict[str, list] = {}
    for node in body:
        lst = _expect_list(node, "section")
        if not lst:
            raise PDDLSyntaxError("empty section", *_pos(node))
        key = _sym(lst[0], "section keyword")
        if key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeatureError(key, *_pos(lst[0]))
        if key not in allowed:
            raise PDDLSyntaxError(f"unexpected section '{key}'", *_pos(lst[0]))
        if key == ":action":
            out.setdefault(key, []).append(lst)
        elif key in out:
            raise PDDLSyntaxError(f"duplicate section '{key}'", *_pos(lst[0]))
        else:
            out[key] = lst
    return out


def _header(text: str, kind: str):
    top = _read(text)
    if len(top) != 1:
        where = _pos(top[1]) if len(top) > 1 else (1, 1)
        raise PDDLSyntaxError("expected exactly one (define ...) form", *where)
    form = _expect_list(top[0], "(define ...)")
    if not form or _sym(form[0], "'define'") != "define":
        raise PDDLSyntaxError("expected 'define'", *_pos(form))
    if len(form) < 2:
        raise PDDLSyntaxError(f"expected ({kind} <name>)", *_pos(form))
    head = _expect_list(form[1], f"({kind} <name>)")
    if len(head) != 2 or _sym(head[0], kind) != kind:
        raise PDDLSyntaxError(f"expected ({kind} <name>)", *_pos(head))
    return _sym(head[1], f"{kind} name"), form[2:]


def _check_requirements(reqs: list[str], node) -> None:
    for r in reqs:
        if r not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedFeatureError(r, *_pos(node))


def parse_domain(text: str) -> Domain:
    name, body = _header(text, "domain")
    sec = _sections(body, {":requirements", ":types", ":constants", ":predicates", ":action"})
    reqs = [_sym(n, "requirement") for n in sec.get(":requirements", [None])[1:]]
    _check_requirements(reqs, sec.get(":requirements"))
    domain = Domain(name=name, requirements=tuple(reqs) or (":strips",))

    if ":types" in sec:
        for child, parent in _typed_list(sec[":types"][1:], allow_vars=False):
            if child != ROOT_TYPE:
                domain.types[child] = parent
        for child in domain.types:
            domain.ancestors(child)  # detects cycles

    def check_type(t: str, node) -> None:
        if not domain.known_type(t):
            raise PDDLSemanticError(f"line {_pos(node)[0]}: unknown type '{t}'")

    if ":constants" in sec:
        for cname, ctype in _typed_list(sec[":constants"][1:], allow_vars=False):
            check_type(ctype, sec[":constants"])
            domain.constants[cname] = ctype

    for pnode in sec.get(":predicates", [None])[1:]:
        plist = _expect_list(pnode, "predicate declaration")
        pname = _sym(plist[0], "predicate name")
        if pname in domain.predicates:
            raise PDDLSemanticError(f"line {_pos(pnode)[0]}: duplicate predicate '{pname}'")
        params = _typed_list(plist[1:], allow_vars=True)
        for _, t in params:
            check_type(t, pnode)
        domain.predicates[pname] = PredicateSchema(pname, tuple(t for _, t in params))

    uses_negation = False
    for anode in sec.get(":action", []):
        action = _parse_action(anode, domain)
        if action.name in domain.actions:
            raise PDDLSemanticError(f"line {_pos(anode)[0]}: duplicate action '{action.name}'")
        uses_negation |= any(not l.positive for l in action.preconditions)
        domain.actions[action.name] = action
    if uses_negation and ":negative-preconditions" not in reqs:
        raise UnsupportedFeatureError("negative precondition without :negative-preconditions")
    return domain


def _parse_action(anode: _List, domain: Domain) -> ActionSchema:
    if len(anode) < 2:
        raise PDDLSyntaxError("expected action name", *_pos(anode))
    name = _sym(anode[1], "action name")
    fields: dict[str, object] = {}
    i = 2
    while i < len(anode):
        key = _sym(anode[i], "action keyword")
        if key not in (":parameters", ":precondition", ":effect"):
            raise PDDLSyntaxError(f"unexpected action keyword '{key}'", *_pos(anode[i]))
        if i + 1 >= len(anode):
            raise PDDLSyntaxError(f"missing value for '{key}'", *_pos(anode[i]))
        fields[key] = anode[i + 1]
        i += 2

    params = _typed_list(_expect_list(fields.get(":parameters", _List()), "parameter list"), True)
    for _, t in params:
        if not domain.known_type(t):
            raise PDDLSemanticError(f"action '{name}': unknown type '{t}'")
    param_types = dict(params)
    pre = _conjunction(fields[":precondition"]) if ":precondition" in fields else []
    eff = _conjunction(fields[":effect"]) if ":effect" in fields else []

    def check(a: Atom) -> None:
        schema = domain.predicates.get(a.predicate)
        if schema is None:
            raise PDDLSemanticError(f"action '{name}': unknown predicate '{a.predicate}'")
        if len(a.args) != schema.arity:
            raise PDDLSemanticError(
                f"action '{name}': '{a.predicate}' expects {schema.arity} arguments, got {len(a.args)}"
            )
        for arg, expected in zip(a.args, schema.param_types):
            if arg.startswith("?"):
                if arg not in param_types:
                    raise PDDLSemanticError(f"action '{name}': undeclared variable {arg} in {a}")
                actual = param_types[arg]
            elif arg in domain.constants:
                actual = domain.constants[arg]
            else:
                raise PDDLSemanticError(f"action '{name}': unknown constant '{arg}' in {a}")
            if not domain.is_subtype(actual, expected):
                raise PDDLSemanticError(
                    f"action '{name}': {arg} of type '{actual}' does not match '{expected}' in {a}"
                )

    for lit in pre + eff:
        check(lit.atom)
    # conjunctions are sets: store them in canonical order so equality is structural
    return ActionSchema(
        name=name,
        params=tuple(params),
        preconditions=tuple(_sorted_literals(set(pre))),
        add_effects=tuple(sorted({l.atom for l in eff if l.positive})),
        del_effects=tuple(sorted({l.atom for l in eff if not l.positive})),
    )


def parse_problem(text: str, domain: Domain) -> Problem:
    name, body = _header(text, "problem")
    sec = _sections(body, {":domain", ":objects", ":init", ":goal", ":requirements"})
    if ":requirements" in sec:
        _check_requirements([_sym(n, "requirement") for n in sec[":requirements"][1:]], sec[":requirements"])
    if ":domain" not in sec or len(sec[":domain"]) != 2:
        raise PDDLSyntaxError("expected (:domain <name>)", 1, 1)
    domain_name = _sym(sec[":domain"][1], "domain name")
    if domain_name != domain.name:
        raise PDDLSemanticError(f"problem targets domain '{domain_name}', not '{domain.name}'")

    objects: dict[str, str] = {}
    for oname, otype in _typed_list(sec.get(":objects", [None])[1:], allow_vars=False):
        if not domain.known_type(otype):
            raise PDDLSemanticError(f"object '{oname}': unknown type '{otype}'")
        if oname in objects or oname in domain.constants:
            raise PDDLSemanticError(f"object '{oname}' declared twice")
        objects[oname] = otype

    init = set()
    for node in sec.get(":init", [None])[1:]:
        a = _atom(node)
        domain.check_atom(a, objects)
        init.add(a)
    goal = _conjunction(sec[":goal"][1]) if ":goal" in sec and len(sec[":goal"]) > 1 else []
    for lit in goal:
        domain.check_atom(lit.atom, objects)
    return Problem(name, domain_name, objects, frozenset(init), frozenset(goal))


# -- serialization ---------------------------------------------------------


def _typed_names(pairs: list[tuple[str, str]]) -> str:
    groups: dict[str, list[str]] = {}
    for n, t in pairs:
        groups.setdefault(t, []).append(n)
    return " ".join(f"{' '.join(names)} - {t}" for t, names in sorted(groups.items()))


def _conj(lits) -> str:
    lits = list(lits)
    if not lits:
        return "(and)"
    return "(and " + " ".join(l.to_pddl() for l in lits) + ")"


def _sorted_literals(lits):
    return sorted(lits, key=lambda l: (not l.positive, l.atom))


def serialize_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name.lower()})"]
    lines.append("  (:requirements " + " ".join(domain.requirements) + ")")
    if domain.types:
        lines.append("  (:types " + _typed_names(sorted(domain.types.items())) + ")")
    if domain.constants:
        lines.append("  (:constants " + _typed_names(sorted(domain.constants.items())) + ")")
    lines.append("  (:predicates")
    for p in sorted(domain.predicates.values(), key=lambda p: p.name):
        params = " ".join(f"?x{i} - {t}" for i, t in enumerate(p.param_types))
        lines.append(f"    ({p.name}{' ' + params if params else ''})")
    lines.append("  )")
    for a in sorted(domain.actions.values(), key=lambda a: a.name):
        params = " ".join(f"{n} - {t}" for n, t in a.params)
        effects = [Literal(x, True) for x in sorted(a.add_effects)] + [
            Literal(x, False) for x in sorted(a.del_effects)
        ]
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({params})")
        lines.append(f"    :precondition {_conj(_sorted_literals(a.preconditions))}")
        lines.append(f"    :effect {_conj(effects)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def serialize_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name.lower()})"]
    lines.append(f"  (:domain {problem.domain_name.lower()})")
    lines.append("  (:objects " + _typed_names(sorted(problem.objects.items())) + ")")
    lines.append("  (:init")
    lines.extend(f"    {a.to_pddl()}" for a in sorted(problem.init))
    lines.append("  )")
    lines.append(f"  (:goal {_conj(_sorted_literals(problem.goal))})")
    lines.append(")")
    return "\n".join(lines) + "\n"


# -- functional notation -----------------------------------------------------

_FUNC_LITERAL_RE = re.compile(
    r"\s*(?P<neg>not\s+|¬\s*|!\s*)?(?P<pred>[A-Za-z][\w-]*)\s*(?:\((?P<args>[^()]*)\))?\s*"
)


def parse_literals(text: str) -> list[Literal]:
    """Parse ``on(cup, table), not open(cabinet)``-style literal lists.

    PDDL s-expressions are accepted too: ``(and (on cup table))``.
    """
    text = text.strip()
    if text.startswith("("):
        node = _read(text)
        if len(node) != 1:
            raise PDDLSyntaxError("expected a single goal expression", 1, 1)
        return _conjunction(node[0])
    out = []
    for chunk in _split_top_level(text):
        m = _FUNC_LITERAL_RE.fullmatch(chunk)
        if m is None:
            raise PDDLSyntaxError(f"cannot parse literal '{chunk.strip()}'", 1, 1)
        args = tuple(
            a.strip().lower().replace(" ", "_") for a in (m["args"] or "").split(",") if a.strip()
        )
        out.append(Literal(Atom(m["pred"].lower(), args), m["neg"] is None))
    return out


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if (ch in ",;\n") and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p.strip()]


def load_domain(name: str = "domain.pddl") -> Domain:
    """Parse a domain file bundled with the package."""
    from importlib.resources import files

    return parse_domain(files("tamploop.data").joinpath(name).read_text())
