"""Situation injection table: per-action failure outcomes and their probabilities."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

# Transform kinds understood by World.execute:
#   "noop"       - relevant ground truth left untouched
#   "drop:A>B"   - object A falls to the floor near B, where A/B are "held",
#                  "arg0" or "arg1"
NOOP = "noop"


@dataclass(frozen=True)
class Situation:
    label: str
    transform: str
    probability: float


_DEFAULTS: dict[str, tuple[tuple[str, str, float], ...]] = {
    "find": (("Held object drops during navigation", "drop:held>arg0", 0.10),),
    "grasp": (
        ("Grasp fails, object unchanged", NOOP, 0.25),
        ("Grasp fails, object drops nearby", "drop:arg0>arg1", 0.25),
    ),
    "placein": (
        ("Place fails, object remains inhand", NOOP, 0.10),
        ("Place fails, object drops nearby", "drop:held>arg1", 0.10),
    ),
    "placeon": (
        ("Place fails, object remains inhand", NOOP, 0.10),
        ("Place fails, object drops nearby", "drop:held>arg1", 0.10),
    ),
    "fill": (
        ("Container not fully filled", NOOP, 0.05),
        ("Container drops nearby", "drop:held>arg1", 0.05),
    ),
    "open": (("Object remains closed", NOOP, 0.10),),
    "close": (("Object remains open", NOOP, 0.10),),
    "turnon": (("Object remains off", NOOP, 0.10),),
    "cut": (
        ("Object not cut, knife inhand", NOOP, 0.25),
        ("Object not cut, knife drops nearby", "drop:held>arg0", 0.25),
    ),
}
# taking an object out of a container is a grasp
_ALIASES = {"grasp_from": "grasp"}


@dataclass(frozen=True)
class SituationTable:
    rows: Mapping[str, tuple[Situation, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for action, sits in self.rows.items():
            total = 0.0
            for s in sits:
                if not 0.0 <= s.probability <= 1.0:
                    raise ValueError(f"{action}/{s.label}: probability {s.probability} outside [0, 1]")
                total += s.probability
            if total > 1.0 + 1e-12:
                raise ValueError(f"{action}: situation probabilities sum to {total:.3f} > 1")

    @classmethod
    def default(cls) -> "SituationTable":
        rows = {a: tuple(Situation(*s) for s in sits) for a, sits in _DEFAULTS.items()}
        for alias, src in _ALIASES.items():
            rows[alias] = rows[src]
        return cls(rows)

    @classmethod
    def zero(cls) -> "SituationTable":
        return cls.default().scaled(0.0)

    def scaled(self, factor: float) -> "SituationTable":
        return SituationTable(
            {a: tuple(replace(s, probability=s.probability * factor) for s in sits)
             for a, sits in self.rows.items()}
        )

    def with_overrides(self, overrides: Mapping[str, Mapping[str, float]]) -> "SituationTable":
        """Override probabilities by action name and situation label."""
        rows = dict(self.rows)
        for action, by_label in overrides.items():
            if action not in rows:
                raise ValueError(f"no situations defined for action '{action}'")
            known = {s.label for s in rows[action]}
            unknown = set(by_label) - known
            if unknown:
                raise ValueError(f"{action}: unknown situation labels {sorted(unknown)}")
            rows[action] = tuple(
                replace(s, probability=float(by_label.get(s.label, s.probability)))
                for s in rows[action]
            )
        return SituationTable(rows)

    def for_action(self, name: str) -> tuple[Situation, ...]:
        return tuple(self.rows.get(name, ()))

    def nominal_probability(self, name: str) -> float:
        return 1.0 - sum(s.probability for s in self.for_action(name))

    def draw(self, name: str, u: float) -> Situation | None:
        """Partition [0, 1) into the action's situation CDF; None means nominal."""
        acc = 0.0
        for s in self.for_action(name):
            acc += s.probability
            if u < acc:
                return s
        return None
