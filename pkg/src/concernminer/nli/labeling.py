"""Threshold-count heuristics that turn score rows into pseudo-labels."""

from __future__ import annotations

import operator
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..hypotheses import HeuristicRuleSet
from ..labels import PseudoLabel
from .scoring import EntailmentMatrix

# "Above a threshold" is read as strictly greater. Flip this single
# comparator to ``operator.ge`` to change the boundary convention everywhere.
EXCEEDS = operator.gt


def n_above(row: Sequence[float] | np.ndarray, threshold: float) -> int:
    """Count scores in ``row`` strictly above ``threshold`` (antitone in it).

    Comparisons happen in float64: grids are stored float32, and letting
    numpy demote the threshold to float32 would silently move the rule
    boundary (float32(0.85) > 0.85 must hold).
    """
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold {threshold} outside (0, 1)")
    arr = np.asarray(row, dtype=np.float64)
    return int(np.count_nonzero(EXCEEDS(arr, threshold)))


def _check_rules(rules: HeuristicRuleSet, n_hypotheses: int) -> None:
    if rules.max_count() > n_hypotheses:
        raise ValidationError(
            f"rule requires {rules.max_count()} hypotheses but matrix has {n_hypotheses} columns"
        )


def apply_heuristics(matrix: EntailmentMatrix, rules: HeuristicRuleSet) -> list[PseudoLabel]:
    """One pseudo-label per matrix row.

    Positive clauses are checked first (any satisfied clause wins), then the
    negative clause, then the rule set's default. Deterministic: the same
    matrix and rules always produce the same label vector.
    """
    _check_rules(rules, len(matrix.hypothesis_ids))
    scores = matrix.scores.astype(np.float64)  # keep thresholds float64, see n_above
    n = scores.shape[0]

    positive = np.zeros(n, dtype=bool)
    for threshold, min_count in rules.positive_rules:
        positive |= np.count_nonzero(EXCEEDS(scores, threshold), axis=1) >= min_count

    if rules.negative_threshold is not None:
        negative = np.count_nonzero(EXCEEDS(scores, rules.negative_threshold), axis=1) == 0
    else:
        negative = np.zeros(n, dtype=bool)

    out: list[PseudoLabel] = []
    for is_pos, is_neg in zip(positive, negative):
        if is_pos:
            out.append(PseudoLabel.MAYBE_PRIVACY)
        elif is_neg:
            out.append(PseudoLabel.MAYBE_NOT_PRIVACY)
        else:
            out.append(rules.default_label)
    return out


def explain_labels(
    matrix: EntailmentMatrix, rules: HeuristicRuleSet
) -> list[tuple[PseudoLabel, float | None, tuple[int, ...]]]:
    """Labels plus, for each maybe-privacy row, the threshold of the first
    satisfied clause and the hypothesis ids scoring above it."""
    labels = apply_heuristics(matrix, rules)
    out: list[tuple[PseudoLabel, float | None, tuple[int, ...]]] = []
    for row, label in zip(matrix.scores, labels):
        if label is PseudoLabel.MAYBE_PRIVACY:
            for threshold, min_count in rules.positive_rules:
                if n_above(row, threshold) >= min_count:
                    triggered = tuple(
                        hyp_id
                        for hyp_id, score in zip(matrix.hypothesis_ids, row)
                        if EXCEEDS(float(score), threshold)
                    )
                    out.append((label, threshold, triggered))
                    break
        else:
            out.append((label, None, ()))
    return out
