"""Shared fixtures: toy models and brute-force enumeration oracles.

The brute-force helpers here are deliberately naive (itertools over the
full sequence space, probabilities via repeated next_dist walks) so they
stay independent of the streaming enumeration they are used to check.
"""

from __future__ import annotations

import itertools
import math

import pytest

from seqscore.seqmodel import TableSource, TokenDistributionSource, Vocab, sequence_log_prob

# 2x2 toy model: p(0)=0.6, p(0|0)=0.7, p(0|1)=0.5.
# Sequence probs: 00 -> 0.42, 01 -> 0.18, 10 -> 0.20, 11 -> 0.20.
TOY_TABLE = {(): [0.6, 0.4], (0,): [0.7, 0.3], (1,): [0.5, 0.5]}
TOY_SEQ_PROBS = {(0, 0): 0.42, (0, 1): 0.18, (1, 0): 0.20, (1, 1): 0.20}


@pytest.fixture
def toy_source() -> TableSource:
    return TableSource(Vocab(2), 2, dict(TOY_TABLE))


def brute_force_stats(source: TokenDistributionSource):
    """(entropy, max_log_prob, argmax) by enumerating with itertools."""
    entropy = 0.0
    best_lp = -math.inf
    best_seq: tuple[int, ...] = ()
    for seq in itertools.product(range(source.vocab.size), repeat=source.max_len):
        lp = sequence_log_prob(source, list(seq))
        p = math.exp(lp)
        if p > 0:
            entropy += p * -lp
        if lp > best_lp:
            best_lp = lp
            best_seq = seq
    return entropy, best_lp, best_seq


def brute_force_mass(source: TokenDistributionSource) -> float:
    return math.fsum(
        math.exp(sequence_log_prob(source, list(seq)))
        for seq in itertools.product(range(source.vocab.size), repeat=source.max_len)
    )
