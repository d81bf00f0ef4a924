"""The shared scorer contract and its two backends.

A scorer maps (text, caption) to a real-valued cost where LOWER cost means
a better match; rankings sort ascending.  Inference is deterministic and
pure, so scorers can be shared read-only across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .neural import AttentionRecord, NeuralScorerParams, neural_cost
from .tfidf import TfIdfModel, tfidf_cost
from .tokenizer import Vocabulary


@runtime_checkable
class Scorer(Protocol):
    def score(self, text: str, caption: str) -> float:
        """Cost of pairing ``text`` with ``caption``; lower is better."""
        ...


@dataclass(frozen=True)
class NeuralScorer:
    params: NeuralScorerParams
    vocab: Vocabulary

    def score(self, text: str, caption: str) -> float:
        cost, _ = neural_cost(self.params, self.vocab, text, caption, mode="infer")
        return cost

    def score_with_trace(self, text: str, caption: str) -> tuple[float, AttentionRecord]:
        cost, trace = neural_cost(
            self.params, self.vocab, text, caption, mode="infer", need_trace=True
        )
        assert trace is not None
        return cost, trace


@dataclass(frozen=True)
class TfIdfScorer:
    model: TfIdfModel

    def score(self, text: str, caption: str) -> float:
        return tfidf_cost(self.model, text, caption)


@dataclass(frozen=True)
class ConstantScorer:
    """Test/baseline helper: a fixed cost regardless of input."""

    cost: float = 0.0

    def score(self, text: str, caption: str) -> float:
        return self.cost


__all__ = [
    "Scorer",
    "NeuralScorer",
    "TfIdfScorer",
    "ConstantScorer",
    "AttentionRecord",
]
