"""Append-only annotation event store and per-session figure shuffling.

Every submission and skip is one JSON line appended durably (flush + fsync)
before it is acknowledged; the in-memory index is rebuilt exactly by
replaying the log, so truncating the file at any line boundary yields a
valid store containing the preceding events.  Later submissions by the same
(paper, annotator) supersede earlier ones at export time, but every event
stays in the log.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Document, GoldAnnotation, dumps_json, gold_to_dict, read_jsonl

EVENT_ANNOTATION = "annotation"
EVENT_SKIP = "skip"
DEFAULT_RANKING_SIZE = 3


class AnnotationError(ValueError):
    """A submission that violates the corpus or ranking contract."""


@dataclass(frozen=True)
class StoredEvent:
    offset: int
    kind: str
    paper_id: str
    annotator_id: str
    ranking: tuple[str, ...]
    timestamp: float

    def to_dict(self) -> dict:
        out = {
            "event": self.kind,
            "paper_id": self.paper_id,
            "annotator_id": self.annotator_id,
            "ts": self.timestamp,
        }
        if self.kind == EVENT_ANNOTATION:
            out["ranking"] = list(self.ranking)
        return out


def _event_from_dict(offset: int, data: dict) -> StoredEvent:
    kind = data.get("event")
    if kind not in (EVENT_ANNOTATION, EVENT_SKIP):
        raise ValueError(f"unknown event kind {kind!r}")
    return StoredEvent(
        offset=offset,
        kind=kind,
        paper_id=data["paper_id"],
        annotator_id=data["annotator_id"],
        ranking=tuple(data.get("ranking", ())),
        timestamp=float(data.get("ts", 0.0)),
    )


@dataclass
class CoverageStats:
    """Corpus coverage by distinct annotators, after latest-wins collapsing."""

    papers_total: int
    papers_unannotated: int
    papers_single: int
    papers_double: int
    annotation_events: int
    skip_events: int

    def to_dict(self) -> dict:
        return {
            "papers_total": self.papers_total,
            "papers_unannotated": self.papers_unannotated,
            "papers_single_annotator": self.papers_single,
            "papers_two_or_more_annotators": self.papers_double,
            "annotation_events": self.annotation_events,
            "skip_events": self.skip_events,
        }


class AnnotationStore:
    """Single-writer event log over a corpus of documents.

    Reads are lock-free against immutable snapshots; appends serialize
    through one lock so records never interleave.
    """

    def __init__(
        self,
        path: Path | str,
        documents: Sequence[Document],
        ranking_size: int = DEFAULT_RANKING_SIZE,
    ) -> None:
        if ranking_size < 1:
            raise ValueError("ranking_size must be >= 1")
        self._path = Path(path)
        self._docs: dict[str, Document] = {}
        for doc in documents:
            if doc.id in self._docs:
                raise ValueError(f"duplicate document id {doc.id!r}")
            self._docs[doc.id] = doc
        self._ranking_size = ranking_size
        self._lock = threading.Lock()
        self._events: list[StoredEvent] = []
        self._replay()

    @property
    def path(self) -> Path:
        return self._path

    @property
    def documents(self) -> Mapping[str, Document]:
        return self._docs

    @property
    def events(self) -> tuple[StoredEvent, ...]:
        return tuple(self._events)

    def _replay(self) -> None:
        if not self._path.exists():
            return
        for data in read_jsonl(self._path):
            self._events.append(_event_from_dict(len(self._events), data))

    def _append(self, event: StoredEvent) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(dumps_json(event.to_dict()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._events.append(event)

    def required_ranking_size(self, paper_id: str) -> int:
        """Papers with fewer figures than the corpus-wide K accept a full
        ranking of what they have."""
        doc = self._docs.get(paper_id)
        if doc is None:
            raise AnnotationError(f"paper_id: unknown paper {paper_id!r}")
        return min(self._ranking_size, len(doc.figures))

    def _validate(self, annotation: GoldAnnotation) -> None:
        doc = self._docs.get(annotation.paper_id)
        if doc is None:
            raise AnnotationError(f"paper_id: unknown paper {annotation.paper_id!r}")
        required = self.required_ranking_size(annotation.paper_id)
        if len(annotation.ranking) != required:
            raise AnnotationError(
                f"ranking: expected exactly {required} figure_ids, got {len(annotation.ranking)}"
            )
        if len(set(annotation.ranking)) != len(annotation.ranking):
            raise AnnotationError("ranking: figure_ids not distinct")
        known = {fig.figure_id for fig in doc.figures}
        unknown = [fid for fid in annotation.ranking if fid not in known]
        if unknown:
            raise AnnotationError(f"ranking: unknown figure_ids {unknown}")
        if not annotation.annotator_id:
            raise AnnotationError("annotator_id: empty")

    def record_annotation(self, annotation: GoldAnnotation) -> int:
        """Validate, append durably, and return the record offset."""
        self._validate(annotation)
        with self._lock:
            event = StoredEvent(
                offset=len(self._events),
                kind=EVENT_ANNOTATION,
                paper_id=annotation.paper_id,
                annotator_id=annotation.annotator_id,
                ranking=tuple(annotation.ranking),
                timestamp=annotation.timestamp,
            )
            self._append(event)
            return event.offset

    def record_skip(
        self, paper_id: str, annotator_id: str, timestamp: Optional[float] = None
    ) -> int:
        if paper_id not in self._docs:
            raise AnnotationError(f"paper_id: unknown paper {paper_id!r}")
        if not annotator_id:
            raise AnnotationError("annotator_id: empty")
        with self._lock:
            event = StoredEvent(
                offset=len(self._events),
                kind=EVENT_SKIP,
                paper_id=paper_id,
                annotator_id=annotator_id,
                ranking=(),
                timestamp=time.time() if timestamp is None else timestamp,
            )
            self._append(event)
            return event.offset

    def _latest_by_key(self) -> dict[tuple[str, str], StoredEvent]:
        latest: dict[tuple[str, str], StoredEvent] = {}
        for event in self._events:
            if event.kind == EVENT_ANNOTATION:
                latest[(event.paper_id, event.annotator_id)] = event
        return latest

    def latest_annotation(
        self, paper_id: str, annotator_id: str
    ) -> Optional[GoldAnnotation]:
        event = self._latest_by_key().get((paper_id, annotator_id))
        if event is None:
            return None
        return GoldAnnotation(
            paper_id=event.paper_id,
            annotator_id=event.annotator_id,
            ranking=event.ranking,
            timestamp=event.timestamp,
        )

    def annotator_count(self, paper_id: str) -> int:
        return len({k for k in self._latest_by_key() if k[0] == paper_id})

    def export_gold(self) -> tuple[list[GoldAnnotation], CoverageStats]:
        """Latest record per (paper, annotator), sorted for byte-stable
        output, with the coverage breakdown."""
        latest = self._latest_by_key()
        gold = [
            GoldAnnotation(
                paper_id=event.paper_id,
                annotator_id=event.annotator_id,
                ranking=event.ranking,
                timestamp=event.timestamp,
            )
            for _key, event in sorted(latest.items())
        ]
        annotators_per_paper: dict[str, int] = defaultdict(int)
        for paper_id, _annotator in latest:
            annotators_per_paper[paper_id] += 1
        single = sum(1 for n in annotators_per_paper.values() if n == 1)
        double = sum(1 for n in annotators_per_paper.values() if n >= 2)
        stats = CoverageStats(
            papers_total=len(self._docs),
            papers_unannotated=len(self._docs) - len(annotators_per_paper),
            papers_single=single,
            papers_double=double,
            annotation_events=sum(
                1 for e in self._events if e.kind == EVENT_ANNOTATION
            ),
            skip_events=sum(1 for e in self._events if e.kind == EVENT_SKIP),
        )
        return gold, stats

    def export_gold_lines(self) -> str:
        """The gold JSONL payload exactly as written to disk."""
        gold, _stats = self.export_gold()
        return "".join(dumps_json(gold_to_dict(ann)) + "\n" for ann in gold)


# -- session views -----------------------------------------------------------


@dataclass(frozen=True)
class SessionFigure:
    figure_id: str
    caption: str
    image_ref: Optional[str]

    def to_dict(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "caption": self.caption,
            "image_ref": self.image_ref,
        }


@dataclass(frozen=True)
class SessionView:
    """What one annotator session sees for one paper: the abstract plus the
    figures in a seeded random order that hides the in-paper ordering."""

    paper_id: str
    title: str
    abstract: str
    figures: tuple[SessionFigure, ...]
    session_seed: int

    def to_dict(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "abstract": self.abstract,
            "figures": [fig.to_dict() for fig in self.figures],
            "session_seed": self.session_seed,
        }


def session_seed_for(annotator_id: str, server_seed: int) -> int:
    """Stable per-annotator seed so the same session always sees the same
    order, across server restarts."""
    digest = hashlib.blake2b(
        f"{server_seed}:{annotator_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def shuffle_figures(doc: Document, session_seed: int) -> SessionView:
    """Uniform seeded permutation of the paper's figures, deterministic per
    (paper_id, session_seed)."""
    digest = hashlib.blake2b(
        f"{session_seed}:{doc.id}".encode("utf-8"), digest_size=8
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    order = rng.permutation(len(doc.figures))
    figures = tuple(
        SessionFigure(
            figure_id=doc.figures[i].figure_id,
            caption=doc.figures[i].caption,
            image_ref=doc.figures[i].image_ref,
        )
        for i in order
    )
    return SessionView(
        paper_id=doc.id,
        title=doc.title,
        abstract=doc.abstract,
        figures=figures,
        session_seed=session_seed,
    )
