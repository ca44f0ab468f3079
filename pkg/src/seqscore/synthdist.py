"""Synthetic autoregressive distributions with exact enumeration oracles.

A :class:`SyntheticModel` draws one categorical distribution per tree node
from a Dirichlet prior whose concentration parameters mimic the Zipf-like
next-token profiles of language models. Node distributions are generated
lazily and keyed on (seed, prefix path), so the model never materializes
the tree and is reproducible regardless of visit order.

PRNG scheme: each node's generator is a counter-based Philox bit generator
keyed by the 128-bit BLAKE2b digest of (seed, path). Dirichlet draws use
per-component Gamma(alpha_i, 1) samples normalized to sum one; the Gamma
variates come from numpy's ``Generator.gamma`` (Marsaglia-Tsang squeeze
method, with the U^(1/alpha) boost for alpha < 1), which is deterministic
given the bit generator.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .seqmodel import TokenDistribution, TokenDistributionSource, Vocab

__all__ = [
    "DirichletSpec",
    "SyntheticModel",
    "ExactStats",
    "EnumerationBudgetError",
    "sample_model",
    "exact_stats",
    "format_model_config",
    "parse_model_config",
]

DEFAULT_LEAF_BUDGET = 10**8

# Concentration presets: two dominant components plus a long flat tail
# (|V|=100 adds a middle band), yielding Zipf-like node distributions.
_PRESETS: dict[int, tuple[float, ...]] = {
    20: (10.0, 10.0) + (0.2,) * 18,
    100: (10.0, 10.0) + (1.0,) * 4 + (0.2,) * 94,
}


class EnumerationBudgetError(RuntimeError):
    """Raised when exhaustive enumeration would exceed the leaf budget."""


@dataclass(frozen=True)
class DirichletSpec:
    """Dirichlet concentration parameters for per-node categorical draws.

    ``shuffle`` randomly permutes the alpha vector before every node draw,
    so the dominant components land on different token ids at each node.
    """

    vocab_size: int
    alphas: tuple[float, ...]
    shuffle: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if len(self.alphas) != self.vocab_size:
            raise ValueError(
                f"got {len(self.alphas)} alphas for vocab_size {self.vocab_size}"
            )
        if any(a <= 0 for a in self.alphas):
            raise ValueError("alphas must all be > 0")

    @classmethod
    def preset(cls, vocab_size: int, shuffle: bool = True) -> "DirichletSpec":
        try:
            alphas = _PRESETS[vocab_size]
        except KeyError:
            raise ValueError(
                f"no preset for vocab_size {vocab_size}; available: {sorted(_PRESETS)}"
            ) from None
        return cls(vocab_size=vocab_size, alphas=alphas, shuffle=shuffle)

    @classmethod
    def preset_sizes(cls) -> tuple[int, ...]:
        return tuple(sorted(_PRESETS))


def _node_key(seed: int, prefix: tuple[int, ...]) -> int:
    """128-bit key for a node's Philox generator, from (seed, path)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<Q", seed & 0xFFFF_FFFF_FFFF_FFFF))
    for t in prefix:
        h.update(struct.pack("<i", t))
    return int.from_bytes(h.digest(), "little")


@dataclass
class SyntheticModel(TokenDistributionSource):
    """Lazily generated Dirichlet tree over fixed-length sequences.

    ``next_dist`` is pure and memoized (idempotent writes, so sharing the
    instance across threads is safe); memory stays O(visited nodes * |V|).
    """

    spec: DirichletSpec
    depth: int
    seed: int
    cache: bool = True
    _memo: dict[tuple[int, ...], TokenDistribution] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        self.seed = int(self.seed)
        self.vocab = Vocab(self.spec.vocab_size)
        self.max_len = self.depth

    def _generate(self, prefix: tuple[int, ...]) -> TokenDistribution:
        rng = np.random.Generator(np.random.Philox(key=_node_key(self.seed, prefix)))
        alphas = np.asarray(self.spec.alphas)
        if self.spec.shuffle:
            alphas = alphas[rng.permutation(alphas.size)]
        gammas = rng.gamma(alphas)
        probs = gammas / gammas.sum()
        with np.errstate(divide="ignore"):
            return TokenDistribution(np.log(probs))

    def next_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        self._check_prefix(prefix)
        key = tuple(int(t) for t in prefix)
        if not self.cache:
            return self._generate(key)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._generate(key)
            self._memo[key] = hit
        return hit

    def peek_dist(self, prefix: Sequence[int]) -> TokenDistribution:
        self._check_prefix(prefix)
        key = tuple(int(t) for t in prefix)
        return self._memo.get(key) or self._generate(key)


def sample_model(spec: DirichletSpec, depth: int, seed: int) -> SyntheticModel:
    """Draw a synthetic autoregressive model (lazy; nodes generated on use)."""
    return SyntheticModel(spec=spec, depth=depth, seed=seed)


@dataclass(frozen=True)
class ExactStats:
    """Ground-truth statistics from exhaustive enumeration.

    ``prob_mass`` is the compensated sum of all leaf probabilities, a
    diagnostic that must be 1 up to float error.
    """

    entropy_nats: float
    max_log_prob: float
    argmax_tokens: tuple[int, ...]
    prob_mass: float

    def __post_init__(self) -> None:
        if self.max_log_prob > 0:
            raise ValueError("max_log_prob must be <= 0")
        if self.entropy_nats < 0:
            raise ValueError("entropy must be >= 0")


class _Kahan:
    """Compensated accumulator for long sums of small positive terms."""

    __slots__ = ("total", "_c")

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def exact_stats(
    model: TokenDistributionSource,
    budget: int = DEFAULT_LEAF_BUDGET,
) -> ExactStats:
    """Exhaustively enumerate all |V|^T sequences of ``model``.

    Streaming depth-first traversal in token order; the final tree level is
    handled vectorized, one exp per leaf feeding the entropy accumulator,
    with Kahan compensation across per-node partial sums. The argmax ties
    break toward the lexicographically smallest token sequence, which the
    in-order traversal yields for free. Subtrees with zero prefix
    probability contribute nothing and are pruned.
    """
    size = model.vocab.size
    depth = model.max_len
    leaves = size**depth
    if leaves > budget:
        raise EnumerationBudgetError(
            f"enumeration needs {leaves} leaves, over the budget of {budget}"
        )

    entropy = _Kahan()
    mass = _Kahan()
    best_lp = -math.inf
    best_tokens: tuple[int, ...] = ()

    def visit(prefix: tuple[int, ...], prefix_lp: float) -> None:
        nonlocal best_lp, best_tokens
        last_level = len(prefix) == depth - 1
        # Deepest internal level dominates the node count; do not memoize it.
        dist = model.peek_dist(prefix) if last_level else model.next_dist(prefix)
        lvec = dist.log_probs
        if last_level:
            leaf_lp = prefix_lp + lvec
            p = np.exp(leaf_lp)
            live = p > 0
            if live.any():
                entropy.add(float(np.dot(p[live], -leaf_lp[live])))
                mass.add(float(p[live].sum()))
            idx = int(np.argmax(leaf_lp))
            lp = float(leaf_lp[idx])
            if lp > best_lp:
                best_lp = lp
                best_tokens = prefix + (idx,)
            return
        for t in range(size):
            lp = prefix_lp + float(lvec[t])
            if lp == -math.inf:
                continue
            visit(prefix + (t,), lp)

    visit((), 0.0)
    return ExactStats(
        entropy_nats=entropy.total,
        max_log_prob=best_lp,
        argmax_tokens=best_tokens,
        prob_mass=mass.total,
    )


def format_model_config(model: SyntheticModel) -> str:
    """Render a model as a plain-text ``key = value`` config block."""
    lines = [f"vocab_size = {model.spec.vocab_size}"]
    if model.spec.alphas == _PRESETS.get(model.spec.vocab_size):
        lines.append(f"preset = {model.spec.vocab_size}")
    else:
        lines.append("alphas = " + ",".join(repr(a) for a in model.spec.alphas))
    lines.append(f"depth = {model.depth}")
    lines.append(f"seed = {model.seed}")
    lines.append(f"shuffle = {'true' if model.spec.shuffle else 'false'}")
    return "\n".join(lines) + "\n"


def parse_model_config(text: str) -> SyntheticModel:
    """Parse the config block emitted by :func:`format_model_config`."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key.lower()] = value

    def require(key: str) -> str:
        if key not in entries:
            raise ValueError(f"config missing required key {key!r}")
        return entries[key]

    vocab_size = int(require("vocab_size"))
    shuffle = entries.get("shuffle", "true").lower() in ("true", "1", "yes")
    if "alphas" in entries:
        alphas = tuple(float(a) for a in entries["alphas"].split(","))
        spec = DirichletSpec(vocab_size=vocab_size, alphas=alphas, shuffle=shuffle)
    else:
        preset = int(entries.get("preset", vocab_size))
        if preset != vocab_size:
            raise ValueError(f"preset {preset} conflicts with vocab_size {vocab_size}")
        spec = DirichletSpec.preset(vocab_size, shuffle=shuffle)
    return SyntheticModel(spec=spec, depth=int(require("depth")), seed=int(require("seed")))
