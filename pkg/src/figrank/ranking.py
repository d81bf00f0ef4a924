"""Ranking a paper's figures against its abstract, plus the two baselines.

The per-figure cost is the sum of pairwise costs over abstract sentences;
figures are ordered ascending by total cost with ties broken by document
order.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .corpus import Document, RankedList
from .ingest import split_sentences
from .scorers import Scorer


class ScoringError(RuntimeError):
    """A scorer failed on one (sentence, caption) pair; carries context."""


def rank_figures(scorer: Scorer, doc: Document) -> RankedList:
    """Order all figures of ``doc`` by total cost against the abstract.

    Total cost of a figure is the sum of scorer costs over every abstract
    sentence paired with its caption.
    """
    sentences = [span.text for span in split_sentences(doc.abstract)]
    if not sentences:
        raise ValueError(f"document {doc.id!r} has an empty abstract")

    totals: list[tuple[float, int, str]] = []
    for fig in doc.figures:
        total = 0.0
        for sentence in sentences:
            try:
                total += scorer.score(sentence, fig.caption)
            except Exception as exc:
                raise ScoringError(
                    f"scorer failed on paper {doc.id!r}, figure {fig.figure_id!r}: {exc}"
                ) from exc
        totals.append((total, fig.order_index, fig.figure_id))

    totals.sort(key=lambda item: (item[0], item[1]))
    return RankedList(
        paper_id=doc.id,
        ordering=tuple(fid for _, _, fid in totals),
        costs=tuple(cost for cost, _, _ in totals),
    )


def _paper_rng(seed: int, paper_id: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{seed}:{paper_id}".encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def baseline_random(doc: Document, seed: int) -> RankedList:
    """Seeded uniform permutation of the figures, reproducible per
    (seed, paper_id)."""
    rng = _paper_rng(seed, doc.id)
    order = rng.permutation(len(doc.figures))
    return RankedList(
        paper_id=doc.id,
        ordering=tuple(doc.figures[int(i)].figure_id for i in order),
    )


def baseline_pick_first(doc: Document) -> RankedList:
    """Figures in document order: CS papers tend to put the graphical
    abstract first, which makes this a strong baseline."""
    figures = sorted(doc.figures, key=lambda fig: fig.order_index)
    return RankedList(paper_id=doc.id, ordering=tuple(fig.figure_id for fig in figures))
