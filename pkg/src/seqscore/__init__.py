"""Scoring-rule uncertainty measures for autoregressive sequence models."""

from .decode import DecodeConfig, beam_search, greedy, multinomial_sample
from .estimators import (
    Measure,
    SampleSet,
    UncertaintyScore,
    discrete_semantic_entropy,
    g_nll,
    predictive_entropy,
    semantic_entropy,
)
from .evaluation import LabeledScore, auroc, rejection_accuracy, squad_f1
from .semcluster import ClusterStrategy, cluster, entails
from .seqmodel import (
    ScoredSequence,
    TokenDistribution,
    TokenDistributionSource,
    Vocab,
    length_normalized_log_prob,
    sequence_log_prob,
)
from .synthdist import DirichletSpec, ExactStats, SyntheticModel, exact_stats, sample_model

__version__ = "0.1.0"

__all__ = [
    "DecodeConfig", "beam_search", "greedy", "multinomial_sample",
    "Measure", "SampleSet", "UncertaintyScore",
    "g_nll", "predictive_entropy", "semantic_entropy", "discrete_semantic_entropy",
    "LabeledScore", "auroc", "rejection_accuracy", "squad_f1",
    "ClusterStrategy", "cluster", "entails",
    "ScoredSequence", "TokenDistribution", "TokenDistributionSource", "Vocab",
    "sequence_log_prob", "length_normalized_log_prob",
    "DirichletSpec", "ExactStats", "SyntheticModel", "exact_stats", "sample_model",
    "__version__",
]
