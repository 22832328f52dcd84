"""Label vocabularies used across the pipeline stages."""

from __future__ import annotations

from enum import Enum


class PseudoLabel(str, Enum):
    """Heuristic tag attached to a review after entailment scoring."""

    MAYBE_PRIVACY = "maybe-privacy"
    MAYBE_NOT_PRIVACY = "maybe-not-privacy"
    UNDETERMINED = "undetermined"


class Vote(str, Enum):
    """One parsed LLM response; abstain absorbs anything not yes/no."""

    YES = "yes"
    NO = "no"
    ABSTAIN = "abstain"


class BinaryLabel(str, Enum):
    """Final yes/no decision for a review after majority voting."""

    YES = "yes"
    NO = "no"
