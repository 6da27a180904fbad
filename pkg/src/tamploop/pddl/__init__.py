"""STRIPS planning front-end: parsing, state semantics, search, and validation."""

from .core import (
    ActionSchema,
    Atom,
    Domain,
    GroundAction,
    GroundAtom,
    Literal,
    PDDLError,
    PDDLSemanticError,
    PDDLSyntaxError,
    PreconditionViolated,
    PredicateSchema,
    Problem,
    SymbolicState,
    UnsupportedFeatureError,
    applicable,
    apply,
    atom,
    neg,
    pos,
    satisfies,
)
from .parser import (
    load_domain,
    parse_domain,
    parse_literals,
    parse_problem,
    serialize_domain,
    serialize_problem,
)
from .planner import (
    NoPlanFound,
    Plan,
    PlanningTask,
    SearchBudgetExceeded,
    Validation,
    ground_all,
    plan,
    solve,
    validate_plan,
)
