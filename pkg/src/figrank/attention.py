"""Attention-map comparison between trained scorers and cross-segment
attention inspection.

Maps are flattened layer-major, head-minor into one vector per scored pair
(per layer when a per-layer breakdown is requested) and compared by cosine
similarity.  Inputs are encoded per pair without padding, so every attention
weight in a trace is meaningful and the flattened length is L * A * T^2.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import Document, GoldAnnotation
from .metrics import EvalReport, evaluate
from .neural import AttentionRecord
from .pairs import TrainingTriplet
from .ranking import rank_figures
from .scorers import NeuralScorer
from .tokenizer import CLS_TOKEN, SEP_TOKEN
from .training import TrainConfig, sample_sentence, train_neural


def flatten_attention(record: AttentionRecord) -> np.ndarray:
    """All layers' maps as one vector: layer-major, head-minor, rows in
    query order."""
    return np.concatenate([layer.reshape(-1) for layer in record.attentions])


def flatten_layer(record: AttentionRecord, layer: int) -> np.ndarray:
    return record.attentions[layer].reshape(-1)


def attention_vector_cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"attention vectors differ in length: {a.shape} vs {b.shape}")
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        raise ValueError("zero-norm attention vector")
    if np.array_equal(a, b):
        return 1.0  # exact, not subject to sqrt/division rounding
    return float(np.dot(a, b) / norm)


@dataclass
class AttentionSimilarityReport:
    """Mean cosine similarity of flattened attention maps over sample pairs."""

    overall: float
    per_layer: tuple[float, ...]
    sample_count: int

    def to_dict(self) -> dict:
        out: dict = {"overall": self.overall, "sample_count": self.sample_count}
        if self.per_layer:
            out["per_layer"] = list(self.per_layer)
        return out


def _require_same_shape(a: NeuralScorer, b: NeuralScorer) -> None:
    ca, cb = a.params.config, b.params.config
    shape_a = (ca.n_layers, ca.n_heads, ca.embed_dim, ca.ff_dim, ca.max_len)
    shape_b = (cb.n_layers, cb.n_heads, cb.embed_dim, cb.ff_dim, cb.max_len)
    if shape_a != shape_b:
        raise ValueError(f"model shapes differ: {shape_a} vs {shape_b}")


def attention_cosine(
    scorer_a: NeuralScorer,
    scorer_b: NeuralScorer,
    sample_pairs: Sequence[tuple[str, str]],
    per_layer: bool = False,
) -> AttentionSimilarityReport:
    """Mean cosine similarity between two models' attention maps on the
    given (text, caption) pairs.

    Identical models give exactly 1.0.  Vocabularies may differ; token
    sequences are built from the raw strings, so both traces share one
    sequence length per pair.
    """
    _require_same_shape(scorer_a, scorer_b)
    if not sample_pairs:
        raise ValueError("sample_pairs is empty")
    n_layers = scorer_a.params.config.n_layers

    overall_sum = 0.0
    layer_sums = np.zeros(n_layers)
    for text, caption in sample_pairs:
        _, trace_a = scorer_a.score_with_trace(text, caption)
        _, trace_b = scorer_b.score_with_trace(text, caption)
        overall_sum += attention_vector_cosine(
            flatten_attention(trace_a), flatten_attention(trace_b)
        )
        if per_layer:
            for layer in range(n_layers):
                layer_sums[layer] += attention_vector_cosine(
                    flatten_layer(trace_a, layer), flatten_layer(trace_b, layer)
                )
    n = len(sample_pairs)
    return AttentionSimilarityReport(
        overall=overall_sum / n,
        per_layer=tuple(layer_sums / n) if per_layer else (),
        sample_count=n,
    )


@dataclass(frozen=True)
class CrossAttendedPair:
    """One cross-segment attention weight, reported with the text-side and
    caption-side token strings regardless of query direction."""

    text_token: str
    caption_token: str
    weight: float
    layer: int
    head: int
    query_index: int
    key_index: int
    lexical_match: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def top_attended_cross_pairs(
    record: AttentionRecord, k: int, include_special: bool = False
) -> list[CrossAttendedPair]:
    """The k largest attention weights whose query and key sit in different
    segments, sorted by weight descending with (layer, head, query, key)
    breaking ties.  CLS and SEP positions are skipped unless requested."""
    if k <= 0:
        return []
    segments = record.segments
    tokens = record.tokens
    candidates: list[tuple[float, int, int, int, int]] = []
    for layer, maps in enumerate(record.attentions):
        n_heads, t, _ = maps.shape
        for head in range(n_heads):
            for q in range(t):
                for key in range(t):
                    if segments[q] == segments[key]:
                        continue
                    if not include_special and (
                        tokens[q] in (CLS_TOKEN, SEP_TOKEN)
                        or tokens[key] in (CLS_TOKEN, SEP_TOKEN)
                    ):
                        continue
                    candidates.append((float(maps[head, q, key]), layer, head, q, key))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2], c[3], c[4]))
    out = []
    for weight, layer, head, q, key in candidates[:k]:
        text_index, caption_index = (q, key) if segments[q] == 0 else (key, q)
        out.append(
            CrossAttendedPair(
                text_token=tokens[text_index],
                caption_token=tokens[caption_index],
                weight=weight,
                layer=layer,
                head=head,
                query_index=q,
                key_index=key,
                lexical_match=tokens[q] == tokens[key],
            )
        )
    return out


def sample_pairs_from_triplets(
    triplets: Sequence[TrainingTriplet], n: int, seed: int
) -> list[tuple[str, str]]:
    """Seeded sample of (sentence, caption) pairs for similarity reports:
    picks up to n triplets without replacement, one sentence from each
    positive paragraph."""
    if not triplets:
        raise ValueError("no triplets to sample from")
    rng = np.random.default_rng(seed)
    count = min(n, len(triplets))
    chosen = rng.choice(len(triplets), size=count, replace=False)
    pairs = []
    for index in chosen:
        t = triplets[int(index)]
        pairs.append((sample_sentence(t.positive_text, rng), t.caption))
    return pairs


@dataclass
class FreezeComparison:
    """Twin training runs from one seed, differing only in whether encoder
    weights update, plus their attention-map similarity."""

    finetuned_eval: EvalReport
    frozen_eval: EvalReport
    similarity: AttentionSimilarityReport
    finetuned_scorer: NeuralScorer = field(repr=False)
    frozen_scorer: NeuralScorer = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "finetuned": self.finetuned_eval.to_dict(),
            "frozen": self.frozen_eval.to_dict(),
            "attention_similarity": self.similarity.to_dict(),
        }


def finetune_vs_freeze_report(
    docs: Sequence[Document],
    gold: Sequence[GoldAnnotation],
    triplets: Sequence[TrainingTriplet],
    cfg: TrainConfig,
    metric_names: Sequence[str] = ("map", "mrr"),
    sample_n: int = 100,
    sample_seed: int = 0,
) -> FreezeComparison:
    finetuned = train_neural(triplets, dataclasses.replace(cfg, freeze_encoder=False))
    frozen = train_neural(triplets, dataclasses.replace(cfg, freeze_encoder=True))
    scorer_ft = NeuralScorer(finetuned.params, finetuned.vocab)
    scorer_fz = NeuralScorer(frozen.params, frozen.vocab)

    gold_papers = {ann.paper_id for ann in gold}
    eval_docs = [d for d in docs if d.id in gold_papers]
    eval_ft = evaluate([rank_figures(scorer_ft, d) for d in eval_docs], gold, metric_names)
    eval_fz = evaluate([rank_figures(scorer_fz, d) for d in eval_docs], gold, metric_names)

    pairs = sample_pairs_from_triplets(triplets, sample_n, sample_seed)
    similarity = attention_cosine(scorer_ft, scorer_fz, pairs, per_layer=True)
    return FreezeComparison(
        finetuned_eval=eval_ft,
        frozen_eval=eval_fz,
        similarity=similarity,
        finetuned_scorer=scorer_ft,
        frozen_scorer=scorer_fz,
    )
