"""Role-based yes/no classification of candidate reviews with majority voting."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from ..errors import BackendError, ValidationError
from ..labels import BinaryLabel, Vote

if TYPE_CHECKING:  # pragma: no cover
    from ..corpus import Review
    from ..hypotheses import HypothesisSet

logger = logging.getLogger(__name__)

# Versioned prompt asset. Experiments pin the version; swapping the wording
# means bumping it so recorded runs stay attributable.
PROMPT_TEMPLATE_VERSION = "role-prompt-v1"

SYSTEM_TEMPLATE = """\
You are a scholarly researcher who studies privacy concerns raised in mobile app reviews. \
Your task is to annotate the app review provided by the user with a yes/no label. \
Respond with exactly one word, "yes" or "no", and nothing else.

Answer "yes" if the review supports at least one of the numbered hypotheses listed below. \
Answer "no" otherwise.

Hypotheses:
{hypotheses}"""


@dataclass(frozen=True)
class SamplingSettings:
    temperature: float = 0.3
    top_p: float = 0.9
    num_samples: int = 5
    max_response_tokens: int = 64

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if not 0.0 < self.top_p <= 1.0:
            raise ValidationError("top_p must be in (0, 1]")
        if self.num_samples < 1 or self.num_samples % 2 == 0:
            raise ValidationError("num_samples must be a positive odd integer")
        if self.max_response_tokens < 1:
            raise ValidationError("max_response_tokens must be >= 1")


@dataclass(frozen=True)
class PromptMessages:
    system: str
    user: str


@dataclass(frozen=True)
class VoteRecord:
    review_id: str
    raw_responses: tuple[str, ...]
    votes: tuple[Vote, ...]
    decision: BinaryLabel
    tie_flag: bool

    def __post_init__(self) -> None:
        if len(self.raw_responses) != len(self.votes):
            raise ValidationError("raw_responses and votes must have equal length")


def build_prompt(hset: "HypothesisSet", review: "Review") -> PromptMessages:
    """System message = fixed instructions + numbered hypotheses; user message
    = the normalized review text, verbatim."""
    if not hset.hypotheses:
        raise ValidationError("hypothesis set is empty")
    if review.text_norm is None:
        raise ValidationError(f"review {review.id!r} is not normalized")
    numbered = "\n".join(f"{h.id}. {h.text}" for h in hset.hypotheses)
    return PromptMessages(system=SYSTEM_TEMPLATE.format(hypotheses=numbered), user=review.text_norm)


def parse_response(raw: str) -> Vote:
    """Map a raw completion to a vote by its first alphabetic token.

    ``yes``/``no`` (any case) count; anything else is an abstention.
    """
    token = ""
    for ch in raw:
        if ch.isalpha():
            token += ch
        elif token:
            break
    token = token.lower()
    if token == "yes":
        return Vote.YES
    if token == "no":
        return Vote.NO
    return Vote.ABSTAIN


def majority_vote(votes: Sequence[Vote]) -> tuple[BinaryLabel, bool]:
    """Majority over non-abstain votes.

    A tie between yes and no (including the all-abstain case) resolves to
    ``no`` with ``tie_flag`` set: the review is conservatively dropped from
    the extracted set but stays visible in the logs.
    """
    yes = sum(1 for v in votes if v is Vote.YES)
    no = sum(1 for v in votes if v is Vote.NO)
    if yes > no:
        return BinaryLabel.YES, False
    if no > yes:
        return BinaryLabel.NO, False
    return BinaryLabel.NO, True


def classify_review(backend, review_id: str, prompt: PromptMessages, settings: SamplingSettings) -> VoteRecord:
    """Request ``num_samples`` independent completions and take the majority."""
    raw = tuple(backend.complete(prompt, settings, tag=review_id) for _ in range(settings.num_samples))
    votes = tuple(parse_response(r) for r in raw)
    decision, tie_flag = majority_vote(votes)
    return VoteRecord(review_id, raw, votes, decision, tie_flag)


def classify_corpus(
    backend,
    reviews: Sequence["Review"],
    hset: "HypothesisSet",
    settings: SamplingSettings,
    *,
    max_inflight: int = 4,
) -> tuple[list[VoteRecord], list[tuple[str, str]]]:
    """Classify a batch of candidate reviews (callers pass the maybe-privacy
    subset), preserving input order.

    Returns ``(records, failures)`` where failures are ``(review_id, reason)``
    pairs for reviews whose backend calls kept failing; those are never
    silently labeled.
    """
    if not reviews:
        return [], []
    prompts = [build_prompt(hset, review) for review in reviews]

    def work(index: int):
        return classify_review(backend, reviews[index].id, prompts[index], settings)

    results: dict[int, VoteRecord] = {}
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=max(1, max_inflight)) as executor:
        futures = {executor.submit(work, i): i for i in range(len(reviews))}
        for future, index in futures.items():
            try:
                results[index] = future.result()
            except BackendError as exc:
                failures.append((reviews[index].id, str(exc)))

    records = [results[i] for i in sorted(results)]
    if failures:
        logger.warning("LLM classification failed for %d of %d reviews", len(failures), len(reviews))
    return records, failures
