"""TF-IDF cosine baseline behind the cost contract (lower = better match).

Document frequency is counted per document over the concatenation of
abstract, captions and paragraphs; idf uses the smoothed form
``ln((1 + N) / (1 + df)) + 1`` which is always >= 1, so no fitted term ever
has zero weight.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Document
from .tokenizer import tokenize


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: dict[str, int]
    idf: tuple[float, ...]
    corpus_doc_count: int

    def vector(self, text: str) -> dict[int, float]:
        """Sparse tf-idf vector; out-of-vocabulary tokens contribute nothing."""
        counts = Counter(tokenize(text))
        vec: dict[int, float] = {}
        for token, count in counts.items():
            idx = self.vocabulary.get(token)
            if idx is not None:
                vec[idx] = count * self.idf[idx]
        return vec


def _document_terms(doc: Document) -> set[str]:
    terms = set(tokenize(doc.abstract))
    for fig in doc.figures:
        terms.update(tokenize(fig.caption))
    for par in doc.paragraphs:
        terms.update(tokenize(par.text))
    return terms


def fit_tfidf(corpus: Iterable[Document]) -> TfIdfModel:
    """Fit vocabulary and idf weights over a corpus of documents."""
    df: Counter[str] = Counter()
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        df.update(_document_terms(doc))
    if n_docs == 0:
        raise ValueError("cannot fit tf-idf on an empty corpus")

    terms = sorted(df)
    vocabulary = {term: idx for idx, term in enumerate(terms)}
    idf = tuple(math.log((1 + n_docs) / (1 + df[term])) + 1.0 for term in terms)
    return TfIdfModel(vocabulary=vocabulary, idf=idf, corpus_doc_count=n_docs)


def _cosine(a: dict[int, float], b: dict[int, float]) -> float:
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(weight * b.get(idx, 0.0) for idx, weight in a.items())
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def tfidf_cost(model: TfIdfModel, a: str, b: str) -> float:
    """1 - cosine(tfidf(a), tfidf(b)), clipped into [0, 1].

    Zero-norm vectors (empty or fully out-of-vocabulary text) give cost 1.
    """
    cos = _cosine(model.vector(a), model.vector(b))
    return min(1.0, max(0.0, 1.0 - cos))


def save_tfidf(model: TfIdfModel, path: Path | str) -> None:
    terms = sorted(model.vocabulary, key=model.vocabulary.get)
    payload = {
        "format": "figrank-tfidf",
        "version": 1,
        "corpus_doc_count": model.corpus_doc_count,
        "terms": terms,
        "idf": list(model.idf),
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def load_tfidf(path: Path | str) -> TfIdfModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "figrank-tfidf":
        raise ValueError(f"{path}: not a tf-idf model file")
    terms = payload["terms"]
    return TfIdfModel(
        vocabulary={term: idx for idx, term in enumerate(terms)},
        idf=tuple(float(x) for x in payload["idf"]),
        corpus_doc_count=int(payload["corpus_doc_count"]),
    )
