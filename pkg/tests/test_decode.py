import math
from collections import Counter

import pytest

from seqscore.decode import DecodeConfig, beam_search, decode, greedy, multinomial_sample
from seqscore.seqmodel import OneHotSource, UniformSource, Vocab, sequence_log_prob
from seqscore.synthdist import DirichletSpec, exact_stats, sample_model


class TestGreedy:
    def test_toy_argmax_path(self, toy_source):
        seq = greedy(toy_source)
        assert seq.tokens == (0, 0)
        assert seq.total_log_prob == pytest.approx(math.log(0.42), abs=1e-12)

    def test_one_hot(self):
        seq = greedy(OneHotSource(Vocab(4), (3, 1, 2)))
        assert seq.tokens == (3, 1, 2)
        assert seq.total_log_prob == 0.0

    def test_uniform_tie_break_lowest_id(self):
        seq = greedy(UniformSource(Vocab(6), 3))
        assert seq.tokens == (0, 0, 0)
        assert seq.total_log_prob == pytest.approx(-3 * math.log(6))

    def test_never_beats_exact_max(self):
        for seed in range(10):
            model = sample_model(DirichletSpec.preset(20), 3, seed=seed)
            assert greedy(model).total_log_prob <= exact_stats(model).max_log_prob


class TestBeamSearch:
    def test_width_one_is_greedy(self, toy_source):
        for seed in range(5):
            model = sample_model(DirichletSpec.preset(20), 3, seed=seed)
            assert beam_search(model, 1)[0] == greedy(model)
        assert beam_search(toy_source, 1)[0] == greedy(toy_source)

    def test_exhaustive_width_finds_exact_max(self, toy_source):
        best = beam_search(toy_source, 4)[0]
        stats = exact_stats(toy_source)
        assert best.total_log_prob == stats.max_log_prob
        assert best.tokens == stats.argmax_tokens

    def test_results_sorted_descending_with_lexicographic_ties(self, toy_source):
        beams = beam_search(toy_source, 4)
        totals = [b.total_log_prob for b in beams]
        assert totals == sorted(totals, reverse=True)
        # 10 and 11 tie at 0.2; 10 must come first
        assert [b.tokens for b in beams[1:3]] == [(1, 0), (1, 1)]

    def test_width_five_between_greedy_and_exact(self):
        for seed in range(5):
            model = sample_model(DirichletSpec.preset(20), 4, seed=seed)
            best = beam_search(model, 5)[0].total_log_prob
            assert greedy(model).total_log_prob <= best <= exact_stats(model).max_log_prob

    def test_stored_totals_match_source(self):
        model = sample_model(DirichletSpec.preset(20), 4, seed=3)
        for seq in beam_search(model, 5):
            recomputed = sequence_log_prob(model, list(seq.tokens))
            assert seq.total_log_prob == pytest.approx(recomputed, abs=1e-12)

    def test_width_validation(self, toy_source):
        with pytest.raises(ValueError):
            beam_search(toy_source, 0)


class TestMultinomialSample:
    def test_near_zero_temperature_matches_greedy(self, toy_source):
        samples = multinomial_sample(toy_source, temperature=1e-6, seed=0, n_samples=50)
        expected = greedy(toy_source)
        assert all(s == expected for s in samples)

    def test_unit_temperature_frequency(self, toy_source):
        # Exact sequence prob of (0,0) is 0.42; 1e5 samples puts the
        # empirical frequency within +-0.01 with large margin.
        samples = multinomial_sample(toy_source, temperature=1.0, seed=7, n_samples=100_000)
        freq = Counter(s.tokens for s in samples)
        assert freq[(0, 0)] / 100_000 == pytest.approx(0.42, abs=0.01)

    def test_high_temperature_flattens(self, toy_source):
        # Tempered sequence probs at tau=1.5, computed in closed form:
        # root p^(2/3) renorm -> (0.5670, 0.4330); node0 -> (0.6370, 0.3630)
        # so max tempered seq prob = 0.3611 < 0.42.
        def tempered(probs, tau):
            w = [p ** (1 / tau) for p in probs]
            return [x / sum(w) for x in w]

        r = tempered([0.6, 0.4], 1.5)
        n0 = tempered([0.7, 0.3], 1.5)
        expected_max = r[0] * n0[0]
        assert expected_max < 0.42

        samples = multinomial_sample(toy_source, temperature=1.5, seed=11, n_samples=100_000)
        freq = Counter(s.tokens for s in samples)
        top = freq.most_common(1)[0][1] / 100_000
        assert top == pytest.approx(expected_max, abs=0.01)
        assert top < 0.42

    def test_records_untempered_log_probs(self, toy_source):
        for s in multinomial_sample(toy_source, temperature=0.5, seed=5, n_samples=20):
            recomputed = sequence_log_prob(toy_source, list(s.tokens))
            assert s.total_log_prob == pytest.approx(recomputed, abs=1e-12)

    def test_reproducible_bitwise(self, toy_source):
        a = multinomial_sample(toy_source, 1.0, seed=9, n_samples=30)
        b = multinomial_sample(toy_source, 1.0, seed=9, n_samples=30)
        assert a == b

    def test_seed_matters(self, toy_source):
        a = multinomial_sample(toy_source, 1.0, seed=1, n_samples=30)
        b = multinomial_sample(toy_source, 1.0, seed=2, n_samples=30)
        assert a != b

    def test_temperature_validation(self, toy_source):
        with pytest.raises(ValueError, match="temperature"):
            multinomial_sample(toy_source, temperature=0.0, seed=0, n_samples=1)
        with pytest.raises(ValueError, match="n_samples"):
            multinomial_sample(toy_source, temperature=1.0, seed=0, n_samples=0)


class TestDecodeConfig:
    def test_dispatch(self, toy_source):
        assert decode(toy_source, DecodeConfig("greedy"))[0] == greedy(toy_source)
        assert decode(toy_source, DecodeConfig("beam", beam_width=2)) == beam_search(toy_source, 2)
        cfg = DecodeConfig("multinomial", temperature=1.0, seed=4, n_samples=3)
        assert decode(toy_source, cfg) == multinomial_sample(toy_source, 1.0, 4, 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            DecodeConfig("nucleus")
        with pytest.raises(ValueError):
            DecodeConfig("beam", beam_width=0)
        with pytest.raises(ValueError):
            DecodeConfig("multinomial", temperature=-1.0)
