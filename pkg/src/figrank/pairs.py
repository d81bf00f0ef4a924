"""Self-supervised training triplets mined from inline figure mentions.

For every figure, each paragraph that mentions it yields a positive pair;
negatives are drawn (seeded, uniform) from paragraphs of the *same* paper
that mention at least one figure but not the anchor.  Intra-paper negatives
are topically hard and keep caption/paragraph pairing within one paper.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .corpus import Document, dumps_json, read_jsonl
from .ingest import MentionIndex, build_mention_index


@dataclass(frozen=True)
class TrainingTriplet:
    paper_id: str
    anchor_figure_id: str
    caption: str
    positive_paragraph_id: str
    positive_text: str
    negative_paragraph_id: str
    negative_text: str


@dataclass(frozen=True)
class PairGenConfig:
    negatives_per_positive: int = 1
    rng_seed: int = 0
    max_pairs: Optional[int] = None

    def __post_init__(self) -> None:
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")


def _doc_rng(seed: int, paper_id: str) -> np.random.Generator:
    """Per-document generator derived from (seed, paper_id) so corpus-level
    output does not depend on document processing order."""
    digest = hashlib.blake2b(f"{seed}:{paper_id}".encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def generate_triplets(
    doc: Document, index: MentionIndex, cfg: PairGenConfig
) -> list[TrainingTriplet]:
    """Enumerate (anchor figure, positive paragraph, negative paragraph)
    triplets for one document; deterministic given ``cfg.rng_seed``."""
    if index.paper_id != doc.id:
        raise ValueError(f"index built for {index.paper_id!r}, not {doc.id!r}")
    mentioned = [fid for fid in index.paragraphs_of_figure if index.paragraphs_of_figure[fid]]
    if len(mentioned) < 2:
        return []  # no negatives exist for any anchor

    rng = _doc_rng(cfg.rng_seed, doc.id)
    captions = {fig.figure_id: fig.caption for fig in doc.figures}
    texts = {par.paragraph_id: par.text for par in doc.paragraphs}
    mentioning = [par.paragraph_id for par in doc.paragraphs if index.figures_of_paragraph[par.paragraph_id]]

    triplets: list[TrainingTriplet] = []
    for fig in doc.figures:
        positives = index.paragraphs_of_figure.get(fig.figure_id, ())
        if not positives:
            continue
        negatives = [pid for pid in mentioning if fig.figure_id not in index.figures_of_paragraph[pid]]
        if not negatives:
            continue
        for pos_id in positives:
            draws = rng.integers(0, len(negatives), size=cfg.negatives_per_positive)
            for draw in draws:
                neg_id = negatives[int(draw)]
                triplets.append(
                    TrainingTriplet(
                        paper_id=doc.id,
                        anchor_figure_id=fig.figure_id,
                        caption=captions[fig.figure_id],
                        positive_paragraph_id=pos_id,
                        positive_text=texts[pos_id],
                        negative_paragraph_id=neg_id,
                        negative_text=texts[neg_id],
                    )
                )
    return triplets


@dataclass
class TripletStats:
    documents_seen: int = 0
    triplets_emitted: int = 0

    @property
    def mean_triplets_per_document(self) -> float:
        return self.triplets_emitted / self.documents_seen if self.documents_seen else 0.0

    def to_dict(self) -> dict:
        return {
            "documents_seen": self.documents_seen,
            "triplets_emitted": self.triplets_emitted,
            "mean_triplets_per_document": self.mean_triplets_per_document,
        }


def triplet_to_dict(t: TrainingTriplet) -> dict:
    return {
        "paper_id": t.paper_id,
        "figure_id": t.anchor_figure_id,
        "caption": t.caption,
        "pos_id": t.positive_paragraph_id,
        "pos_text": t.positive_text,
        "neg_id": t.negative_paragraph_id,
        "neg_text": t.negative_text,
    }


def triplet_from_dict(data: dict) -> TrainingTriplet:
    return TrainingTriplet(
        paper_id=data["paper_id"],
        anchor_figure_id=data["figure_id"],
        caption=data["caption"],
        positive_paragraph_id=data["pos_id"],
        positive_text=data["pos_text"],
        negative_paragraph_id=data["neg_id"],
        negative_text=data["neg_text"],
    )


def load_triplets(path: Path | str) -> list[TrainingTriplet]:
    return [triplet_from_dict(d) for d in read_jsonl(path)]


def build_corpus_triplets(
    docs: Iterable[Document], cfg: PairGenConfig, out_path: Path | str
) -> TripletStats:
    """Generate triplets for a whole corpus and write them as JSONL.

    When ``cfg.max_pairs`` is set, the concatenated triplets are shuffled
    with the config seed before truncation so the cap keeps a uniform
    sample rather than a paper prefix.
    """
    stats = TripletStats()
    collected: list[TrainingTriplet] = []
    for doc in docs:
        stats.documents_seen += 1
        index = build_mention_index(doc)
        collected.extend(generate_triplets(doc, index, cfg))

    if cfg.max_pairs is not None and len(collected) > cfg.max_pairs:
        order = np.random.default_rng(cfg.rng_seed).permutation(len(collected))
        collected = [collected[int(i)] for i in order[: cfg.max_pairs]]

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for triplet in collected:
            fh.write(dumps_json(triplet_to_dict(triplet)) + "\n")
    stats.triplets_emitted = len(collected)
    return stats


def verify_triplet(t: TrainingTriplet, index: MentionIndex) -> list[str]:
    """Check the anchor-mention invariant of one triplet against its index."""
    problems: list[str] = []
    pos_figs = index.figures_of_paragraph.get(t.positive_paragraph_id, ())
    neg_figs = index.figures_of_paragraph.get(t.negative_paragraph_id, ())
    if t.anchor_figure_id not in pos_figs:
        problems.append("positive paragraph does not mention the anchor figure")
    if not neg_figs:
        problems.append("negative paragraph mentions no figure")
    if t.anchor_figure_id in neg_figs:
        problems.append("negative paragraph mentions the anchor figure")
    if t.positive_paragraph_id == t.negative_paragraph_id:
        problems.append("positive and negative paragraphs identical")
    return problems
