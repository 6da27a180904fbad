"""Predicate verification by paraphrased majority vote with active viewpoint selection."""

from .backends import (
    BackendError,
    BackendUnavailable,
    ExternalBackend,
    GroundTruthBackend,
    HttpTransport,
    NoisyBackend,
    PerceptionBackend,
    ProtocolError,
    Question,
    StdioTransport,
    observation_payload,
    transport_for,
)
from .templates import (
    AFFORDANCE_QUESTION,
    GOAL_PARSING_PROMPT,
    PARAPHRASE_TEMPLATES,
    PREDICATE_QUERY_PROMPT,
    SUCCESS_QUESTION,
    VIEW_SUFFICIENCY_PROMPT,
    VIEWPOINT_SELECTION_PROMPT,
    ParaphraseSet,
    UnknownTemplateError,
    action_level_question,
    paraphrase,
    spoken,
)
from .verify import GoalParseError, Verdict, parse_goal, verify_predicate
from .voting import (
    agreement,
    flip_probability,
    is_consistent,
    majority_vote,
    noisy_answer,
    wrong_verdict_probability,
)
