"""Decoding strategies over a token-distribution source.

All decoders work on fixed-length sequences and report per-token
log-probabilities under the *base* model: temperature only shapes the
sampling distribution, never the recorded likelihoods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .seqmodel import ScoredSequence, TokenDistribution, TokenDistributionSource

__all__ = [
    "DecodeConfig",
    "greedy",
    "beam_search",
    "multinomial_sample",
    "decode",
]

STRATEGIES = ("greedy", "beam", "multinomial")


@dataclass(frozen=True)
class DecodeConfig:
    """Decoding strategy plus its parameters.

    ``greedy`` is equivalent to ``beam`` with width 1. ``length`` defaults
    to the source's max_len when None.
    """

    strategy: str
    length: Optional[int] = None
    beam_width: int = 1
    temperature: float = 1.0
    seed: int = 0
    n_samples: int = 1

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.beam_width < 1:
            raise ValueError(f"beam width must be >= 1, got {self.beam_width}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.length is not None and self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")


def _resolve_length(source: TokenDistributionSource, length: Optional[int]) -> int:
    if length is None:
        return source.max_len
    if length > source.max_len:
        raise ValueError(f"length {length} exceeds source max_len {source.max_len}")
    return length


def greedy(source: TokenDistributionSource, length: Optional[int] = None) -> ScoredSequence:
    """Argmax token at each step; ties resolve to the lowest token id."""
    length = _resolve_length(source, length)
    tokens: list[int] = []
    logs: list[float] = []
    for _ in range(length):
        lvec = source.next_dist(tokens).log_probs
        t = int(np.argmax(lvec))
        tokens.append(t)
        logs.append(float(lvec[t]))
    return ScoredSequence(tokens=tuple(tokens), token_log_probs=tuple(logs))


def beam_search(
    source: TokenDistributionSource,
    width: int,
    length: Optional[int] = None,
) -> list[ScoredSequence]:
    """Fixed-length beam search keeping the top ``width`` prefixes per level.

    Returns the final beam sorted by descending total log-probability,
    ties broken by lexicographic token order. Zero-probability expansions
    are dropped (they cannot lead to the maximum and a positive-probability
    completion always exists).
    """
    if width < 1:
        raise ValueError(f"beam width must be >= 1, got {width}")
    length = _resolve_length(source, length)

    # (total_log_prob, tokens, per-token logs); scores accumulate left to
    # right so they are bitwise comparable with enumeration prefix sums.
    beams: list[tuple[float, tuple[int, ...], tuple[float, ...]]] = [(0.0, (), ())]
    for _ in range(length):
        candidates: list[tuple[float, tuple[int, ...], tuple[float, ...]]] = []
        for score, tokens, logs in beams:
            lvec = source.next_dist(tokens).log_probs
            for t in range(lvec.size):
                step = float(lvec[t])
                new_score = score + step
                if new_score == -math.inf:
                    continue
                candidates.append((new_score, tokens + (t,), logs + (step,)))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        beams = candidates[:width]

    return [
        ScoredSequence(tokens=tokens, token_log_probs=logs) for _, tokens, logs in beams
    ]


def _tempered_cdf(dist: TokenDistribution, temperature: float) -> np.ndarray:
    lp = dist.log_probs
    if temperature != 1.0:
        lp = lp / temperature
        lp = lp - _logsumexp(lp)
    cdf = np.cumsum(np.exp(lp))
    # Pin the top to exactly 1 so inverse-CDF draws (u < 1) can never land
    # past the last positive-probability token.
    return cdf / cdf[-1]


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    if m == -math.inf:
        return m
    return m + math.log(float(np.exp(x - m).sum()))


def multinomial_sample(
    source: TokenDistributionSource,
    temperature: float,
    seed: int,
    n_samples: int,
    length: Optional[int] = None,
) -> list[ScoredSequence]:
    """Sample sequences step-wise from the tempered next-token distribution.

    The sampling weights are p_i^(1/temperature) renormalized; the recorded
    per-token log-probabilities are always the untempered ones. Duplicates
    are kept. Reproducible bitwise for a fixed seed.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    length = _resolve_length(source, length)

    rng = np.random.Generator(np.random.PCG64(seed))
    # Tempered CDFs are deterministic per node; memoize for the many
    # samples that revisit the same prefixes.
    cdfs: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}

    out: list[ScoredSequence] = []
    for _ in range(n_samples):
        tokens: list[int] = []
        logs: list[float] = []
        for _ in range(length):
            key = tuple(tokens)
            entry = cdfs.get(key)
            if entry is None:
                dist = source.next_dist(tokens)
                entry = (_tempered_cdf(dist, temperature), dist.log_probs)
                cdfs[key] = entry
            cdf, base_lp = entry
            t = int(np.searchsorted(cdf, rng.random(), side="right"))
            if t >= base_lp.size:  # cdf top can fall short of 1 by rounding
                t = base_lp.size - 1
            tokens.append(t)
            logs.append(float(base_lp[t]))
        out.append(ScoredSequence(tokens=tuple(tokens), token_log_probs=tuple(logs)))
    return out


def decode(source: TokenDistributionSource, config: DecodeConfig) -> list[ScoredSequence]:
    """Run the configured strategy; always returns a list of sequences."""
    if config.strategy == "greedy":
        return [greedy(source, config.length)]
    if config.strategy == "beam":
        return beam_search(source, config.beam_width, config.length)
    return multinomial_sample(
        source, config.temperature, config.seed, config.n_samples, config.length
    )
