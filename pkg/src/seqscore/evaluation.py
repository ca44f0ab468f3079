"""Correctness labeling and ranking metrics for uncertainty scores.

AUROC here is the probability that a uniformly random *incorrect* answer
carries a strictly higher uncertainty score than a random correct one,
with ties credited 0.5, computed exactly from rank statistics rather
than a sampled ROC curve.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .textnorm import normalize_answer

__all__ = [
    "LabeledScore",
    "F1Config",
    "EvaluationError",
    "squad_f1",
    "auroc",
    "rejection_accuracy",
]


class EvaluationError(ValueError):
    """Raised when a metric's inputs are unusable (e.g. single-class AUROC)."""


@dataclass(frozen=True)
class LabeledScore:
    """An uncertainty score (higher = more uncertain) with a correctness label."""

    score: float
    correct: bool

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")


@dataclass(frozen=True)
class F1Config:
    """Token-F1 threshold above which an answer counts as correct."""

    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")


def squad_f1(prediction: str, gold: Sequence[str]) -> float:
    """Best token-bag F1 of ``prediction`` against any gold answer.

    Both sides are normalized (lowercase, punctuation stripped, articles
    removed, whitespace collapsed) and split on whitespace; overlap is
    counted with multiplicity. Two empty token bags score 1, exactly one
    empty bag scores 0.
    """
    if len(gold) == 0:
        raise ValueError("gold answers must be non-empty")
    pred_tokens = normalize_answer(prediction).split()
    best = 0.0
    for g in gold:
        gold_tokens = normalize_answer(g).split()
        if not pred_tokens and not gold_tokens:
            f1 = 1.0
        elif not pred_tokens or not gold_tokens:
            f1 = 0.0
        else:
            overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
            if overlap == 0:
                f1 = 0.0
            else:
                precision = overlap / len(pred_tokens)
                recall = overlap / len(gold_tokens)
                f1 = 2 * precision * recall / (precision + recall)
        best = max(best, f1)
    return best


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean rank of their group."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def auroc(items: Sequence[LabeledScore]) -> float:
    """Exact Mann-Whitney AUROC of scores against incorrectness."""
    scores = np.array([it.score for it in items])
    incorrect = np.array([not it.correct for it in items])
    n_inc = int(incorrect.sum())
    n_cor = len(items) - n_inc
    if n_inc == 0 or n_cor == 0:
        raise EvaluationError(
            "AUROC needs at least one correct and one incorrect item "
            f"(got {n_cor} correct, {n_inc} incorrect)"
        )
    ranks = _fractional_ranks(scores)
    u = float(ranks[incorrect].sum()) - n_inc * (n_inc + 1) / 2
    return u / (n_inc * n_cor)


def rejection_accuracy(items: Sequence[LabeledScore], keep_fraction: float) -> float:
    """Accuracy over the most-certain kept fraction of predictions.

    Items are kept in ascending uncertainty order (stable, so input order
    breaks ties); the kept count is floor(keep_fraction * N), at least 1.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise EvaluationError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if len(items) == 0:
        raise EvaluationError("need at least one item")
    kept_n = max(1, math.floor(keep_fraction * len(items)))
    kept = sorted(items, key=lambda it: it.score)[:kept_n]
    return sum(it.correct for it in kept) / kept_n
