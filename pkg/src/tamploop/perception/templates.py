"""Question templates and prompt payloads for predicate verification."""

from __future__ import annotations

from dataclasses import dataclass

from ..pddl.core import Atom, GroundAction

N_PARAPHRASES = 5

# Placeholders: {X} first object argument, {Y} second. For holding(robot, X)
# the agent argument is skipped.
PARAPHRASE_TEMPLATES: dict[str, tuple[str, ...]] = {
    "on": (
        "Is the {X} on the {Y}?",
        "Is the {X} resting on the {Y} surface?",
        "Is the {X} placed on top of the {Y}?",
        "Is the {X} positioned on the {Y}?",
        "Is the {X} sitting on the {Y}?",
    ),
    "inside": (
        "Is the {X} inside the {Y}?",
        "Is the {X} contained within the {Y}?",
        "Can you see the {X} stored inside the {Y}?",
        "Is the {X} located within the {Y}?",
        "Is the {X} placed inside the {Y}?",
    ),
    "holding": (
        "Is the robot holding the {X}?",
        "Is the {X} grasped by the robot gripper?",
        "Does the robot have the {X} in its gripper?",
        "Is the robot's gripper gripping the {X}?",
        "Is the {X} held by the robot?",
    ),
    "hand_empty": (
        "Is the robot gripper empty?",
        "Is the robot holding nothing?",
        "Is the robot's gripper free and not grasping anything?",
        "Are the robot's fingers not holding any object?",
        "Is there nothing in the robot's gripper?",
    ),
    "open": (
        "Is the {X} open?",
        "Is the {X} in an open position?",
        "Can you see inside the {X}, indicating it is open?",
        "Is the {X} door/lid currently opened?",
        "Is the interior of the {X} visible and accessible?",
    ),
    "reachable": (
        "Can the robot reach the {X}?",
        "Is the {X} accessible to the robot arm?",
        "Is there a clear path for the robot to reach the {X}?",
        "Can the robot arm access the {X} without obstruction?",
        "Is the {X} within the robot's reachable workspace?",
    ),
    "blocking": (
        "Is the {X} blocking access to the {Y}?",
        "Is the {X} obstructing the {Y}?",
        "Does the {X} prevent reaching the {Y}?",
        "Is the {X} in the way of the {Y}?",
        "Would the {X} need to be moved to access the {Y}?",
    ),
    "clear": (
        "Is the top of the {X} clear?",
        "Is there nothing on top of the {X}?",
        "Is the {X} surface empty?",
        "Is the top of the {X} free of objects?",
        "Can an object be placed on the {X} without obstruction?",
    ),
    "inview": (
        "Is the {X} visible in this image?",
        "Can you see the {X} in this view?",
        "Is the {X} present and visible in this image?",
        "Does this image contain the {X}?",
        "Is the {X} observable from this viewpoint?",
    ),
    # fluent extensions in the same style
    "filled": (
        "Is the {X} filled?",
        "Is the {X} full of water?",
        "Does the {X} contain liquid up to the top?",
        "Has the {X} been filled?",
        "Is there water inside the {X}?",
    ),
    "halved": (
        "Is the {X} cut in half?",
        "Has the {X} been sliced into two pieces?",
        "Is the {X} split into halves?",
        "Can you see two halves of the {X}?",
        "Has the {X} been cut?",
    ),
    "on_power": (
        "Is the {X} turned on?",
        "Is the {X} powered on?",
        "Is the {X} currently running?",
        "Does the {X} appear to be switched on?",
        "Is the {X} operating right now?",
    ),
    "near": (
        "Is the {X} near the {Y}?",
        "Is the {X} close to the {Y}?",
        "Is the {X} next to the {Y}?",
        "Is the {X} in the vicinity of the {Y}?",
        "Is the {X} located by the {Y}?",
    ),
}

GOAL_PARSING_PROMPT = """You are a robot task planner. Convert the natural language instruction into a goal state.

Instruction: {instruction}

Available objects: {object_list}

Available predicates: {predicate_list}

Output the goal as a list of predicates that should be true when the task is complete.

Format: predicate(object1, object2), predicate(object), ...

Goal:

Example:
- Input: Instruction = "Put the cup in the cabinet"
- Objects = [cup, cabinet, table, plate]
- Predicates = [on(X,Y), inside(X,Y), holding(X), open(X)]
- Output: inside(cup, cabinet)"""

PREDICATE_QUERY_PROMPT = """[Image attached]

Analyze this image carefully.

Question: {paraphrased_question}

Respond with only "yes" or "no"."""

VIEW_SUFFICIENCY_PROMPT = """[Image attached]

You are assessing whether this camera view provides sufficient information to answer the following question:

"{predicate_question}"

Consider:
- Is the target object clearly visible?
- Are relevant spatial relationships observable?
- Is the view free from significant occlusion?

Respond "yes" if the current view is sufficient.
Respond "no" if a different viewpoint would provide clearer evidence.

Answer:"""

VIEWPOINT_SELECTION_PROMPT = """[Image attached]

The robot is trying to verify: "{predicate_question}"

The current view does not provide sufficient visual evidence. Suggest which direction the robot should move to get a clearer view of the {target_object}.

Options: left, right, front, behind, above, closer

Choose the single best direction:"""

SUCCESS_QUESTION = "Did the robot successfully {action}?"
AFFORDANCE_QUESTION = "Is it possible to {action}?"

# verb phrases for action-level questions; {0}, {1} are spoken argument names
ACTION_PHRASES: dict[str, str] = {
    "find": "find the {0}",
    "grasp": "grasp the {0}",
    "grasp_from": "grasp the {0}",
    "placein": "place the {0} in the {1}",
    "placeon": "place the {0} on the {1}",
    "open": "open the {0}",
    "close": "close the {0}",
    "turnon": "turn on the {0}",
    "fill": "fill the {0}",
    "cut": "cut the {0}",
}


class UnknownTemplateError(KeyError):
    def __str__(self):
        return self.args[0]


def spoken(obj_id: str) -> str:
    """Object id as it would be said aloud: ``wooden_stick_1`` -> ``wooden stick 1``."""
    return obj_id.replace("_", " ")


@dataclass(frozen=True)
class ParaphraseSet:
    atom: Atom
    questions: tuple[str, ...]

    def __post_init__(self):
        if not self.questions:
            raise ValueError("a paraphrase set needs at least one question")

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self):
        return iter(self.questions)


def _slots(a: Atom) -> dict[str, str]:
    args = [x for x in a.args if x != "robot"] if a.predicate == "holding" else list(a.args)
    return {k: spoken(v) for k, v in zip(("X", "Y"), args)}


def paraphrase(a: Atom, n: int = N_PARAPHRASES) -> ParaphraseSet:
    """The first ``n`` phrasings of the question "does ``a`` hold?"."""
    try:
        templates = PARAPHRASE_TEMPLATES[a.predicate]
    except KeyError:
        raise UnknownTemplateError(f"no paraphrase templates for predicate '{a.predicate}'") from None
    if not 1 <= n <= len(templates):
        raise ValueError(f"n must be in [1, {len(templates)}], got {n}")
    slots = _slots(a)
    return ParaphraseSet(a, tuple(t.format(**slots) for t in templates[:n]))


def canonical_question(a: Atom) -> str:
    return paraphrase(a, 1).questions[0]


def action_phrase(a: GroundAction) -> str:
    template = ACTION_PHRASES.get(a.name)
    names = [spoken(x) for x in a.args]
    if template is None:
        return " ".join([a.name.replace("_", " ")] + [f"the {n}" for n in names])
    return template.format(*names)


def action_level_question(a: GroundAction, phase: str) -> str:
    """``after`` asks whether the action succeeded, ``before`` whether it is feasible."""
    if phase == "after":
        return SUCCESS_QUESTION.format(action=action_phrase(a))
    if phase == "before":
        return AFFORDANCE_QUESTION.format(action=action_phrase(a))
    raise ValueError(f"phase must be 'before' or 'after', got {phase!r}")
