"""Core sequence/probability types and the next-token distribution interface.

Everything works in natural-log space. Zero-probability tokens are
represented as -inf log-probabilities and arithmetic propagates them;
NaN anywhere is treated as a hard error.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Vocab",
    "TokenDistribution",
    "ScoredSequence",
    "TokenDistributionSource",
    "TableSource",
    "UniformSource",
    "OneHotSource",
    "sequence_log_prob",
    "length_normalized_log_prob",
]

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Vocab:
    """Token vocabulary; tokens are opaque integer ids 0..size-1."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError(f"vocab size must be >= 2, got {self.size}")


@dataclass(frozen=True)
class TokenDistribution:
    """Next-token distribution as a vector of natural-log probabilities.

    Entries must be <= 0 (or -inf for zero-probability tokens) and their
    exponentials must sum to 1 within 1e-9.
    """

    log_probs: np.ndarray

    def __post_init__(self) -> None:
        lp = np.asarray(self.log_probs, dtype=np.float64)
        lp.setflags(write=False)
        object.__setattr__(self, "log_probs", lp)
        if lp.ndim != 1 or lp.size < 2:
            raise ValueError("log_probs must be a vector of length >= 2")
        if np.isnan(lp).any():
            raise ValueError("NaN in token log-probabilities")
        if (lp > 0).any():
            raise ValueError("token log-probabilities must be <= 0")
        total = float(np.exp(lp).sum())
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {_PROB_SUM_TOL}")

    @classmethod
    def from_probs(cls, probs: Sequence[float]) -> "TokenDistribution":
        p = np.asarray(probs, dtype=np.float64)
        if (p < 0).any():
            raise ValueError("probabilities must be >= 0")
        with np.errstate(divide="ignore"):
            return cls(np.log(p))

    @property
    def size(self) -> int:
        return int(self.log_probs.size)


@dataclass(frozen=True)
class ScoredSequence:
    """A token sequence with the log-probability of each chosen token.

    ``tokens`` may be None for sequences ingested from traces where only
    per-token log-probabilities were logged; when present its length must
    match ``token_log_probs``.
    """

    token_log_probs: tuple[float, ...]
    tokens: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        logs = tuple(float(x) for x in self.token_log_probs)
        object.__setattr__(self, "token_log_probs", logs)
        if len(logs) < 1:
            raise ValueError("sequence must have at least one token")
        if any(math.isnan(x) for x in logs):
            raise ValueError("NaN in token log-probabilities")
        if any(x > 0 for x in logs):
            raise ValueError("token log-probabilities must be <= 0")
        if self.tokens is not None:
            toks = tuple(int(t) for t in self.tokens)
            object.__setattr__(self, "tokens", toks)
            if len(toks) != len(logs):
                raise ValueError(
                    f"tokens ({len(toks)}) and token_log_probs ({len(logs)}) lengths differ"
                )

    def __len__(self) -> int:
        return len(self.token_log_probs)

    @property
    def total_log_prob(self) -> float:
        # Plain left-to-right sum so totals are bitwise comparable with
        # prefix sums accumulated during decoding/enumeration.
        return sum(self.token_log_probs)

    @property
    def ln_log_prob(self) -> float:
        """Length-normalized log-probability (per-token geometric mean)."""
        return self.total_log_prob / len(self)


class TokenDistributionSource(abc.ABC):
    """Provider of next-token distributions conditioned on a token prefix.

    ``next_dist`` must be pure: identical prefixes yield identical
    distributions, and instances are shareable across concurrent readers.
    It must be defined for every prefix of length < ``max_len``.
    """

    vocab: Vocab
    max_len: int

    @abc.abstractmethod
    def next_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        raise NotImplementedError

    def peek_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        """Like ``next_dist`` but need not retain any memoized state.

        Bulk consumers (exhaustive enumeration) use this for nodes they
        visit exactly once.
        """
        return self.next_dist(prefix)

    def _check_prefix(self, prefix: Sequence[int]) -> None:
        if len(prefix) >= self.max_len:
            raise ValueError(f"prefix length {len(prefix)} >= max_len {self.max_len}")
        for t in prefix:
            if not 0 <= int(t) < self.vocab.size:
                raise ValueError(f"token id {t} out of range for |V|={self.vocab.size}")


@dataclass
class TableSource(TokenDistributionSource):
    """Source defined by an explicit prefix -> probability-vector table.

    Missing prefixes fall back to ``default`` when given (handy for toy
    models where deep nodes share one distribution).
    """

    vocab: Vocab
    max_len: int
    table: dict[tuple[int, ...], Sequence[float]]
    default: Optional[Sequence[float]] = None
    _cache: dict[tuple[int, ...], TokenDistribution] = field(default_factory=dict, repr=False)

    def next_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        self._check_prefix(prefix)
        key = tuple(int(t) for t in prefix)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        probs = self.table.get(key, self.default)
        if probs is None:
            raise KeyError(f"no distribution for prefix {key}")
        dist = TokenDistribution.from_probs(probs)
        self._cache[key] = dist
        return dist


@dataclass
class UniformSource(TokenDistributionSource):
    """Uniform next-token distribution at every node."""

    vocab: Vocab
    max_len: int

    def next_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        self._check_prefix(prefix)
        return TokenDistribution(np.full(self.vocab.size, -math.log(self.vocab.size)))


@dataclass
class OneHotSource(TokenDistributionSource):
    """Deterministic source that forces a single path with probability 1."""

    vocab: Vocab
    path: tuple[int, ...]

    def __post_init__(self) -> None:
        self.path = tuple(int(t) for t in self.path)
        if any(not 0 <= t < self.vocab.size for t in self.path):
            raise ValueError("forced path contains out-of-range token ids")
        self.max_len = len(self.path)

    def next_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        self._check_prefix(prefix)
        forced = self.path[len(prefix)]
        probs = np.zeros(self.vocab.size)
        probs[forced] = 1.0
        return TokenDistribution.from_probs(probs)


def sequence_log_prob(source: TokenDistributionSource, tokens: Sequence[int]) -> float:
    """Log-probability of ``tokens`` under ``source``.

    Returns the running sum of per-step log-probabilities, -inf as soon
    as any step has zero probability.
    """
    toks = [int(t) for t in tokens]
    if len(toks) > source.max_len:
        raise ValueError(f"sequence length {len(toks)} exceeds max_len {source.max_len}")
    for t in toks:
        if not 0 <= t < source.vocab.size:
            raise ValueError(f"token id {t} out of range for |V|={source.vocab.size}")
    total = 0.0
    for i, t in enumerate(toks):
        total += float(source.next_dist(toks[:i]).log_probs[t])
        if total == -math.inf:
            break
    return total


def length_normalized_log_prob(seq: ScoredSequence) -> float:
    """Per-token average of the sequence's token log-probabilities."""
    return seq.ln_log_prob
