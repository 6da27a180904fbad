"""Majority voting over paraphrased answers and the quality-dependent noise model."""

from __future__ import annotations

from math import comb
from typing import Sequence

import numpy as np


def majority_vote(responses: Sequence[bool]) -> bool:
    """True iff strictly more than half of the responses are yes."""
    if len(responses) == 0:
        raise ValueError("majority_vote needs at least one response")
    return 2 * sum(bool(r) for r in responses) > len(responses)


def agreement(responses: Sequence[bool]) -> int:
    """Size of the larger of the yes/no camps."""
    yes = sum(bool(r) for r in responses)
    return max(yes, len(responses) - yes)


def is_consistent(responses: Sequence[bool], min_agree: int | None = None) -> bool:
    """At least ``min_agree`` answers (default N - 1) share the same value."""
    n = len(responses)
    if min_agree is None:
        min_agree = max(n - 1, 1)
    return agreement(responses) >= min_agree


def flip_probability(quality: float, eps0: float) -> float:
    if not 0.0 <= eps0 <= 0.5:
        raise ValueError(f"eps0 must be in [0, 0.5], got {eps0}")
    if not 0.0 <= quality <= 1.0:
        raise ValueError(f"quality must be in [0, 1], got {quality}")
    return eps0 + (0.5 - eps0) * (1.0 - quality)


def noisy_answer(truth: bool, quality: float, eps0: float, rng: np.random.Generator) -> bool:
    """``truth`` flipped with probability ``flip_probability(quality, eps0)``."""
    return bool(truth) != bool(rng.random() < flip_probability(quality, eps0))


def wrong_verdict_probability(flip: float, n: int = 5) -> float:
    """Chance that a majority of ``n`` independent answers is wrong."""
    return sum(comb(n, k) * flip**k * (1 - flip) ** (n - k) for k in range(n // 2 + 1, n + 1))
