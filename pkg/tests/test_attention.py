"""Attention-map flattening, similarity reports and cross-segment pairs."""

from __future__ import annotations

import numpy as np
import pytest

from figrank.attention import (
    AttentionSimilarityReport,
    CrossAttendedPair,
    attention_cosine,
    attention_vector_cosine,
    finetune_vs_freeze_report,
    flatten_attention,
    flatten_layer,
    sample_pairs_from_triplets,
    top_attended_cross_pairs,
)
from figrank.neural import ModelConfig, init_params
from figrank.pairs import PairGenConfig, build_corpus_triplets, load_triplets
from figrank.scorers import NeuralScorer
from figrank.training import TrainConfig

import synth


@pytest.fixture(scope="module")
def scorer(tiny_params, tiny_vocab) -> NeuralScorer:
    return NeuralScorer(tiny_params, tiny_vocab)


@pytest.fixture(scope="module")
def trace(scorer):
    _, record = scorer.score_with_trace(
        "Figure 1 is mentioned here", "Figure 1: pipeline overview"
    )
    return record


class TestFlatten:
    def test_flatten_attention_concatenates_layers(self, trace):
        flat = flatten_attention(trace)
        n_layers = trace.n_layers
        n_heads, t, _ = trace.attentions[0].shape
        assert flat.shape == (n_layers * n_heads * t * t,)
        per_layer = np.concatenate([flatten_layer(trace, i) for i in range(n_layers)])
        np.testing.assert_array_equal(flat, per_layer)

    def test_flatten_layer_matches_reshape(self, trace):
        np.testing.assert_array_equal(
            flatten_layer(trace, 1), trace.attentions[1].reshape(-1)
        )


class TestVectorCosine:
    def test_hand_computed_value(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0]]).reshape(-1)
        b = np.array([[0.5, 0.5], [0.5, 0.5]]).reshape(-1)
        assert attention_vector_cosine(a, b) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-15)

    def test_identical_vectors_exactly_one(self):
        a = np.array([0.1, 0.2, 0.3, 0.7])
        assert attention_vector_cosine(a, a.copy()) == 1.0

    def test_orthogonal_vectors(self):
        assert attention_vector_cosine(
            np.array([1.0, 0.0]), np.array([0.0, 2.0])
        ) == pytest.approx(0.0, abs=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            attention_vector_cosine(np.zeros(3), np.ones(3))
        with pytest.raises(ValueError, match="zero-norm"):
            attention_vector_cosine(np.zeros(3), np.zeros(3))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="differ in length"):
            attention_vector_cosine(np.ones(3), np.ones(4))


class TestAttentionCosine:
    def pairs(self):
        return [
            ("Figure 1 is mentioned here", "Figure 1: pipeline overview"),
            ("Figure 2 shows results", "Figure 2: results"),
        ]

    def test_self_similarity_exactly_one(self, scorer):
        report = attention_cosine(scorer, scorer, self.pairs(), per_layer=True)
        assert report.overall == 1.0
        assert report.per_layer == (1.0,) * scorer.params.config.n_layers
        assert report.sample_count == 2

    def test_per_layer_off_by_default(self, scorer):
        report = attention_cosine(scorer, scorer, self.pairs())
        assert report.per_layer == ()
        assert report.to_dict() == {"overall": 1.0, "sample_count": 2}

    def test_different_weights_below_one(self, scorer, tiny_config, tiny_vocab):
        other = NeuralScorer(init_params(tiny_config, seed=99, init_std=0.5), tiny_vocab)
        report = attention_cosine(scorer, other, self.pairs(), per_layer=True)
        assert -1.0 <= report.overall < 1.0
        assert len(report.per_layer) == tiny_config.n_layers

    def test_vocabularies_may_differ(self, scorer, tiny_config):
        from figrank.tokenizer import Vocabulary

        tiny_other_vocab = Vocabulary.build(["completely different words"], min_freq=1)
        other_config = ModelConfig(
            vocab_size=tiny_other_vocab.size,
            embed_dim=tiny_config.embed_dim,
            n_layers=tiny_config.n_layers,
            n_heads=tiny_config.n_heads,
            ff_dim=tiny_config.ff_dim,
            max_len=tiny_config.max_len,
        )
        other = NeuralScorer(init_params(other_config, seed=5), tiny_other_vocab)
        report = attention_cosine(scorer, other, self.pairs())
        assert -1.0 <= report.overall <= 1.0

    def test_shape_mismatch_rejected(self, scorer, tiny_vocab):
        narrow = ModelConfig(
            vocab_size=tiny_vocab.size, embed_dim=4, n_layers=1, n_heads=2,
            ff_dim=8, max_len=24,
        )
        other = NeuralScorer(init_params(narrow, seed=0), tiny_vocab)
        with pytest.raises(ValueError, match="model shapes differ"):
            attention_cosine(scorer, other, self.pairs())

    def test_empty_pairs_rejected(self, scorer):
        with pytest.raises(ValueError, match="sample_pairs is empty"):
            attention_cosine(scorer, scorer, [])

    def test_report_to_dict_with_layers(self, scorer):
        report = attention_cosine(scorer, scorer, self.pairs(), per_layer=True)
        data = report.to_dict()
        assert data["overall"] == 1.0
        assert data["per_layer"] == [1.0, 1.0]


class TestTopAttendedCrossPairs:
    def test_pairs_are_cross_segment_and_sorted(self, trace):
        pairs = top_attended_cross_pairs(trace, k=10)
        assert pairs
        weights = [p.weight for p in pairs]
        assert weights == sorted(weights, reverse=True)
        for pair in pairs:
            assert trace.segments[pair.query_index] != trace.segments[pair.key_index]

    def test_weights_match_record(self, trace):
        for pair in top_attended_cross_pairs(trace, k=5):
            stored = trace.attentions[pair.layer][pair.head, pair.query_index, pair.key_index]
            assert pair.weight == float(stored)

    def test_text_and_caption_sides_resolved(self, trace):
        for pair in top_attended_cross_pairs(trace, k=20):
            text_index = (
                pair.query_index
                if trace.segments[pair.query_index] == 0
                else pair.key_index
            )
            caption_index = (
                pair.key_index if text_index == pair.query_index else pair.query_index
            )
            assert trace.segments[text_index] == 0
            assert trace.segments[caption_index] == 1
            assert pair.text_token == trace.tokens[text_index]
            assert pair.caption_token == trace.tokens[caption_index]

    def test_special_tokens_skipped_by_default(self, trace):
        for pair in top_attended_cross_pairs(trace, k=1000):
            assert pair.text_token not in ("[CLS]", "[SEP]")
            assert pair.caption_token not in ("[CLS]", "[SEP]")

    def test_include_special_adds_candidates(self, trace):
        plain = top_attended_cross_pairs(trace, k=10**6)
        special = top_attended_cross_pairs(trace, k=10**6, include_special=True)
        assert len(special) > len(plain)
        assert any(p.text_token == "[CLS]" or "[SEP]" in (p.text_token, p.caption_token) for p in special)

    def test_candidate_count_formula(self, trace):
        # Every (query, key) crossing the segment boundary in both
        # directions, for every layer and head, special positions excluded.
        n_text = sum(
            1
            for tok, seg in zip(trace.tokens, trace.segments)
            if seg == 0 and tok not in ("[CLS]", "[SEP]")
        )
        n_cap = sum(
            1
            for tok, seg in zip(trace.tokens, trace.segments)
            if seg == 1 and tok not in ("[CLS]", "[SEP]")
        )
        n_heads = trace.attentions[0].shape[0]
        expected = trace.n_layers * n_heads * 2 * n_text * n_cap
        assert len(top_attended_cross_pairs(trace, k=10**6)) == expected

    def test_lexical_match_flag(self, trace):
        pairs = top_attended_cross_pairs(trace, k=10**6)
        matched = [p for p in pairs if p.lexical_match]
        # "figure" and "1" appear on both sides of the fixture pair.
        assert matched
        for pair in matched:
            assert pair.text_token == pair.caption_token

    def test_k_zero_and_truncation(self, trace):
        assert top_attended_cross_pairs(trace, k=0) == []
        assert len(top_attended_cross_pairs(trace, k=3)) == 3

    def test_to_dict_round_trip(self, trace):
        pair = top_attended_cross_pairs(trace, k=1)[0]
        data = pair.to_dict()
        assert CrossAttendedPair(**data) == pair


class TestSamplePairs:
    def make_triplets(self, tmp_path, n_docs=6):
        docs, _ = synth.make_separable_corpus(n_docs, seed=2)
        out = tmp_path / "pairs.jsonl"
        build_corpus_triplets(docs, PairGenConfig(rng_seed=0), out)
        return load_triplets(out)

    def test_sample_size_and_content(self, tmp_path):
        triplets = self.make_triplets(tmp_path)
        pairs = sample_pairs_from_triplets(triplets, n=5, seed=0)
        assert len(pairs) == 5
        captions = {t.caption for t in triplets}
        positives = {t.positive_text for t in triplets}
        for sentence, caption in pairs:
            assert caption in captions
            # Separable paragraphs are single sentences.
            assert sentence in positives

    def test_n_larger_than_population(self, tmp_path):
        triplets = self.make_triplets(tmp_path)
        pairs = sample_pairs_from_triplets(triplets, n=10**6, seed=0)
        assert len(pairs) == len(triplets)

    def test_seeded_determinism(self, tmp_path):
        triplets = self.make_triplets(tmp_path)
        assert sample_pairs_from_triplets(triplets, 4, seed=3) == sample_pairs_from_triplets(
            triplets, 4, seed=3
        )
        assert sample_pairs_from_triplets(triplets, 4, seed=3) != sample_pairs_from_triplets(
            triplets, 4, seed=4
        )

    def test_empty_triplets_rejected(self):
        with pytest.raises(ValueError, match="no triplets"):
            sample_pairs_from_triplets([], 3, seed=0)


class TestFinetuneVsFreezeReport:
    def test_micro_run_structure(self, tmp_path):
        docs, gold = synth.make_separable_corpus(8, seed=6)
        out = tmp_path / "pairs.jsonl"
        build_corpus_triplets(docs, PairGenConfig(rng_seed=0), out)
        triplets = load_triplets(out)
        cfg = TrainConfig(
            epochs=1, batch_size=16, dropout_rate=0.0, learning_rate=3e-3, rng_seed=0
        )
        comparison = finetune_vs_freeze_report(
            docs, gold, triplets, cfg, metric_names=("map", "mrr"), sample_n=6
        )
        assert set(comparison.finetuned_eval.metrics) == {"map", "mrr"}
        assert set(comparison.frozen_eval.metrics) == {"map", "mrr"}
        assert comparison.similarity.sample_count == 6
        assert isinstance(comparison.similarity, AttentionSimilarityReport)
        assert len(comparison.similarity.per_layer) == comparison.finetuned_scorer.params.config.n_layers
        assert -1.0 <= comparison.similarity.overall <= 1.0
        data = comparison.to_dict()
        assert set(data) == {"finetuned", "frozen", "attention_similarity"}
        # Twin runs share the init seed, so only updates differ.
        assert (
            comparison.finetuned_scorer.params.config
            == comparison.frozen_scorer.params.config
        )
        encoder = comparison.frozen_scorer.params.encoder_names()
        assert comparison.finetuned_scorer.params.checksum(encoder) != comparison.frozen_scorer.params.checksum(encoder)
