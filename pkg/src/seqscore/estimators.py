"""Uncertainty measures over decoded/sampled sequences.

Two families:

* zero-one-score based: ``g_nll``, the negative log-likelihood of the single
  reference sequence (greedy or best-of-beam), approximating
  -max_y log p(y).
* logarithmic-score based: Monte Carlo entropy estimators over a sample
  set: predictive entropy, semantic entropy over meaning clusters, and
  the discrete (count-only) semantic entropy. Length-normalized variants
  substitute the per-token average log-likelihood everywhere the total
  appears.

Cluster probabilities for semantic entropy are the likelihood mass of the
cluster normalized over the sampled set: p(c) = sum_{n in c} p_n / sum_n p_n,
computed in log-space. Sequences with -inf log-likelihood contribute zero
mass; a sample set with zero total mass is an input error.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .seqmodel import ScoredSequence

__all__ = ["Measure", "UncertaintyScore", "SampleSet", "g_nll", "predictive_entropy",
           "semantic_entropy", "discrete_semantic_entropy", "compute_measure"]


class Measure(str, Enum):
    GNLL = "g-nll"
    PE = "pe"
    LNPE = "ln-pe"
    SE = "se"
    LNSE = "ln-se"
    DSE = "d-se"

    @classmethod
    def parse(cls, name: str) -> "Measure":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown measure {name!r}; expected one of: {valid}") from None


# Measures that need a sampled set (and, for the SE family, cluster ids).
SAMPLED_MEASURES = frozenset({Measure.PE, Measure.LNPE, Measure.SE, Measure.LNSE, Measure.DSE})
CLUSTERED_MEASURES = frozenset({Measure.SE, Measure.LNSE, Measure.DSE})


@dataclass(frozen=True)
class UncertaintyScore:
    """A single measure's value; higher means more uncertain."""

    measure: Measure
    value: float

    def __post_init__(self) -> None:
        if math.isnan(self.value):
            raise ValueError(f"{self.measure.value} produced NaN")
        if self.value < 0:
            # Log-space rounding can leave ~ulp-size negatives; clamp those.
            if self.value < -1e-12:
                raise ValueError(f"{self.measure.value} must be >= 0, got {self.value}")
            object.__setattr__(self, "value", 0.0)


@dataclass(frozen=True)
class SampleSet:
    """Sampled sequences, optionally annotated with semantic cluster ids."""

    samples: tuple[ScoredSequence, ...]
    cluster_ids: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) < 1:
            raise ValueError("sample set must contain at least one sequence")
        if self.cluster_ids is not None:
            ids = tuple(int(c) for c in self.cluster_ids)
            object.__setattr__(self, "cluster_ids", ids)
            if len(ids) != len(self.samples):
                raise ValueError("cluster_ids must align one-to-one with samples")

    def __len__(self) -> int:
        return len(self.samples)


def _log_likelihoods(sample_set: SampleSet, normalized: bool) -> list[float]:
    if normalized:
        return [s.ln_log_prob for s in sample_set.samples]
    return [s.total_log_prob for s in sample_set.samples]


def _logsumexp(values: Sequence[float]) -> float:
    m = max(values)
    if m == -math.inf:
        return m
    return m + math.log(sum(math.exp(v - m) for v in values))


def g_nll(reference: ScoredSequence) -> UncertaintyScore:
    """Negative log-likelihood of the reference sequence."""
    if reference is None or len(reference) == 0:
        raise ValueError("reference sequence with token log-probs required")
    return UncertaintyScore(Measure.GNLL, -reference.total_log_prob)


def predictive_entropy(sample_set: SampleSet, normalized: bool = False) -> UncertaintyScore:
    """Monte Carlo estimate of the sequence-distribution entropy.

    Mean of the negative (length-normalized, when requested) sequence
    log-likelihoods over the sample set.
    """
    lls = _log_likelihoods(sample_set, normalized)
    value = -sum(lls) / len(lls)
    return UncertaintyScore(Measure.LNPE if normalized else Measure.PE, value)


def _cluster_log_masses(sample_set: SampleSet, normalized: bool) -> list[float]:
    """Per-sample log p(cluster of sample), mass-normalized over the set."""
    assert sample_set.cluster_ids is not None
    lls = _log_likelihoods(sample_set, normalized)
    total = _logsumexp(lls)
    if total == -math.inf:
        raise ValueError("sample set has zero total likelihood mass")
    by_cluster: dict[int, list[float]] = {}
    for cid, ll in zip(sample_set.cluster_ids, lls):
        by_cluster.setdefault(cid, []).append(ll)
    log_mass = {cid: _logsumexp(v) - total for cid, v in by_cluster.items()}
    return [log_mass[cid] for cid in sample_set.cluster_ids]


def semantic_entropy(sample_set: SampleSet, normalized: bool = False) -> UncertaintyScore:
    """Monte Carlo estimate of the entropy over semantic clusters."""
    if sample_set.cluster_ids is None:
        raise ValueError("semantic entropy requires cluster ids")
    per_sample = _cluster_log_masses(sample_set, normalized)
    value = -sum(per_sample) / len(per_sample)
    return UncertaintyScore(Measure.LNSE if normalized else Measure.SE, value)


def discrete_semantic_entropy(sample_set: SampleSet) -> UncertaintyScore:
    """Entropy of the empirical cluster frequencies; ignores likelihoods."""
    if sample_set.cluster_ids is None:
        raise ValueError("discrete semantic entropy requires cluster ids")
    n = len(sample_set)
    counts = Counter(sample_set.cluster_ids)
    value = -sum((c / n) * math.log(c / n) for c in counts.values())
    return UncertaintyScore(Measure.DSE, value)


def compute_measure(
    measure: Measure,
    reference: Optional[ScoredSequence],
    sample_set: Optional[SampleSet],
) -> UncertaintyScore:
    """Dispatch a measure given whichever inputs it needs."""
    if measure is Measure.GNLL:
        if reference is None:
            raise ValueError("g-nll requires a reference sequence")
        return g_nll(reference)
    if sample_set is None:
        raise ValueError(f"{measure.value} requires sampled sequences")
    if measure is Measure.PE:
        return predictive_entropy(sample_set, normalized=False)
    if measure is Measure.LNPE:
        return predictive_entropy(sample_set, normalized=True)
    if measure is Measure.SE:
        return semantic_entropy(sample_set, normalized=False)
    if measure is Measure.LNSE:
        return semantic_entropy(sample_set, normalized=True)
    if measure is Measure.DSE:
        return discrete_semantic_entropy(sample_set)
    raise ValueError(f"unhandled measure {measure!r}")
