import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqscore.seqmodel import (
    OneHotSource,
    ScoredSequence,
    TableSource,
    TokenDistribution,
    UniformSource,
    Vocab,
    length_normalized_log_prob,
    sequence_log_prob,
)

from conftest import brute_force_mass


class TestVocab:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            Vocab(1)
        assert Vocab(2).size == 2


class TestTokenDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="sum"):
            TokenDistribution(np.log([0.5, 0.4]))

    def test_rejects_positive_log(self):
        with pytest.raises(ValueError, match="<= 0"):
            TokenDistribution(np.array([0.1, -3.0]))

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN"):
            TokenDistribution(np.array([math.nan, 0.0]))

    def test_zero_prob_is_neg_inf(self):
        dist = TokenDistribution.from_probs([1.0, 0.0])
        assert dist.log_probs[0] == 0.0
        assert dist.log_probs[1] == -math.inf


class TestScoredSequence:
    def test_totals(self):
        seq = ScoredSequence(tokens=(0, 1), token_log_probs=(math.log(0.5), math.log(0.25)))
        assert seq.total_log_prob == pytest.approx(math.log(0.125))
        assert seq.ln_log_prob == pytest.approx(seq.total_log_prob / 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            ScoredSequence(tokens=(0,), token_log_probs=(-0.1, -0.2))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ScoredSequence(token_log_probs=())

    def test_tokens_optional(self):
        seq = ScoredSequence(token_log_probs=(-0.5, -0.5))
        assert seq.tokens is None
        assert len(seq) == 2


class TestSequenceLogProb:
    def test_one_hot_forced_path(self):
        source = OneHotSource(Vocab(3), (2, 0, 1))
        assert sequence_log_prob(source, [2, 0, 1]) == 0.0

    def test_uniform_two_tokens(self):
        source = UniformSource(Vocab(4), 2)
        assert sequence_log_prob(source, [3, 1]) == pytest.approx(2 * math.log(0.25))

    def test_toy_path(self, toy_source):
        # 0.6 * 0.7 = 0.42, multiplied by hand
        assert sequence_log_prob(toy_source, [0, 0]) == pytest.approx(math.log(0.42), abs=1e-12)

    def test_out_of_range_token(self, toy_source):
        with pytest.raises(ValueError, match="out of range"):
            sequence_log_prob(toy_source, [0, 2])

    def test_too_long(self, toy_source):
        with pytest.raises(ValueError, match="max_len"):
            sequence_log_prob(toy_source, [0, 0, 0])

    def test_zero_probability_path(self):
        source = OneHotSource(Vocab(2), (1, 1))
        assert sequence_log_prob(source, [0, 0]) == -math.inf

    def test_total_mass_sums_to_one(self, toy_source):
        assert brute_force_mass(toy_source) == pytest.approx(1.0, abs=1e-6)
        assert brute_force_mass(UniformSource(Vocab(5), 3)) == pytest.approx(1.0, abs=1e-6)

    def test_prefix_extension_never_increases(self, toy_source):
        for seq in [(0,), (1,)]:
            shorter = sequence_log_prob(toy_source, list(seq))
            for t in range(2):
                assert sequence_log_prob(toy_source, list(seq) + [t]) <= shorter


class TestLengthNormalized:
    def test_equal_tokens(self):
        seq = ScoredSequence(token_log_probs=(math.log(0.5), math.log(0.5)))
        assert length_normalized_log_prob(seq) == pytest.approx(math.log(0.5))

    def test_certain_sequence(self):
        seq = ScoredSequence(token_log_probs=(0.0, 0.0))
        assert length_normalized_log_prob(seq) == 0.0

    def test_mixed(self):
        # (ln 0.9 + ln 0.1) / 2, direct arithmetic
        expected = (math.log(0.9) + math.log(0.1)) / 2
        seq = ScoredSequence(token_log_probs=(math.log(0.9), math.log(0.1)))
        assert length_normalized_log_prob(seq) == pytest.approx(expected)
        assert expected == pytest.approx(-1.2040, abs=1e-4)

    @given(st.floats(min_value=-10.0, max_value=0.0), st.integers(min_value=1, max_value=6))
    def test_invariant_under_duplication(self, log_p, k):
        base = ScoredSequence(token_log_probs=(log_p,) * 2)
        dup = ScoredSequence(token_log_probs=(log_p,) * (2 * k))
        assert length_normalized_log_prob(dup) == pytest.approx(
            length_normalized_log_prob(base), rel=1e-12
        )
