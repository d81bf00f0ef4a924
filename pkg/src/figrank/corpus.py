"""Core data types shared across the toolkit.

A corpus is a JSONL file of documents; each document carries an abstract,
ordered body paragraphs and ordered figures with captions.  Gold annotations
are per-annotator figure rankings stored in a separate JSONL file.

All types are immutable after construction and safe to share between
workers.  Validation never raises: ``validate_document`` returns a list of
human-readable violations so callers can decide whether to drop or fail.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

_WS_RUN = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class Paragraph:
    paragraph_id: str
    text: str
    section_heading: Optional[str] = None


@dataclass(frozen=True)
class Figure:
    figure_id: str
    order_index: int
    caption: str
    label_number: Optional[int] = None
    image_ref: Optional[str] = None


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    abstract: str
    domain_label: str
    paragraphs: tuple[Paragraph, ...] = ()
    figures: tuple[Figure, ...] = ()

    def figure_by_id(self, figure_id: str) -> Figure:
        for fig in self.figures:
            if fig.figure_id == figure_id:
                return fig
        raise KeyError(f"no figure {figure_id!r} in document {self.id!r}")

    def paragraph_by_id(self, paragraph_id: str) -> Paragraph:
        for par in self.paragraphs:
            if par.paragraph_id == paragraph_id:
                return par
        raise KeyError(f"no paragraph {paragraph_id!r} in document {self.id!r}")


@dataclass(frozen=True)
class FigureMention:
    """An inline reference such as "Figure 3" inside one paragraph.

    ``char_span`` holds (start, end) character offsets into the paragraph
    text; ``referenced_numbers`` lists every figure number the phrase names
    (ranges already expanded).
    """

    paragraph_id: str
    char_span: tuple[int, int]
    referenced_numbers: tuple[int, ...]


@dataclass(frozen=True)
class GoldAnnotation:
    """One annotator's ranking for one paper.

    K = len(ranking) is 1 for single-gold corpora and 3 for ranked-gold
    corpora; it is carried per annotation so both kinds can coexist.
    """

    paper_id: str
    annotator_id: str
    ranking: tuple[str, ...]
    timestamp: float


@dataclass(frozen=True)
class RankedList:
    """A full predicted ordering of one paper's figures.

    When ``costs`` is present it is aligned with ``ordering`` and the
    ordering is ascending by cost (lower cost ranks higher), ties broken
    by document order.
    """

    paper_id: str
    ordering: tuple[str, ...]
    costs: Optional[tuple[float, ...]] = None


def validate_document(doc: Document) -> list[str]:
    """Check the document invariants; return one message per violation."""
    violations: list[str] = []
    if not doc.id:
        violations.append("id: empty")
    if not normalize_ws(doc.abstract):
        violations.append("abstract: empty")

    seen_fig_ids: set[str] = set()
    for pos, fig in enumerate(doc.figures):
        if fig.figure_id in seen_fig_ids:
            violations.append(f"figures[{pos}].figure_id: duplicate {fig.figure_id!r}")
        seen_fig_ids.add(fig.figure_id)
        if fig.order_index != pos:
            violations.append(
                f"figures[{pos}].order_index: expected {pos}, got {fig.order_index} (gap or misorder)"
            )
        if not normalize_ws(fig.caption):
            violations.append(f"figures[{pos}].caption: empty")
        if fig.label_number is not None and fig.label_number < 1:
            violations.append(f"figures[{pos}].label_number: must be >= 1, got {fig.label_number}")

    seen_par_ids: set[str] = set()
    for pos, par in enumerate(doc.paragraphs):
        if par.paragraph_id in seen_par_ids:
            violations.append(f"paragraphs[{pos}].paragraph_id: duplicate {par.paragraph_id!r}")
        seen_par_ids.add(par.paragraph_id)
        if not normalize_ws(par.text):
            violations.append(f"paragraphs[{pos}].text: empty")

    return violations


def validate_gold(ann: GoldAnnotation, doc: Document) -> list[str]:
    """Check a gold annotation against the paper it references."""
    violations: list[str] = []
    if len(ann.ranking) not in (1, 3):
        violations.append(f"ranking: length must be 1 or 3, got {len(ann.ranking)}")
    if len(set(ann.ranking)) != len(ann.ranking):
        violations.append("ranking: figure_ids not distinct")
    known = {fig.figure_id for fig in doc.figures}
    for fid in ann.ranking:
        if fid not in known:
            violations.append(f"ranking: unknown figure_id {fid!r}")
    if not ann.annotator_id:
        violations.append("annotator_id: empty")
    return violations


def normalize_document(doc: Document) -> Document:
    """Whitespace-normalize every text field (applied once, at ingest)."""
    return replace(
        doc,
        title=normalize_ws(doc.title),
        abstract=normalize_ws(doc.abstract),
        paragraphs=tuple(
            replace(
                p,
                text=normalize_ws(p.text),
                section_heading=normalize_ws(p.section_heading) if p.section_heading else None,
            )
            for p in doc.paragraphs
        ),
        figures=tuple(replace(f, caption=normalize_ws(f.caption)) for f in doc.figures),
    )


# -- JSON encoding ----------------------------------------------------------
#
# Wire field names are shorter than the attribute names: paragraphs use
# {"id","heading","text"} and figures {"id","order_index","label_number",
# "caption","image_ref"}; optional fields are omitted when absent.


def document_to_dict(doc: Document) -> dict:
    paragraphs = []
    for p in doc.paragraphs:
        entry: dict = {"id": p.paragraph_id}
        if p.section_heading is not None:
            entry["heading"] = p.section_heading
        entry["text"] = p.text
        paragraphs.append(entry)
    figures = []
    for f in doc.figures:
        entry = {"id": f.figure_id, "order_index": f.order_index}
        if f.label_number is not None:
            entry["label_number"] = f.label_number
        entry["caption"] = f.caption
        if f.image_ref is not None:
            entry["image_ref"] = f.image_ref
        figures.append(entry)
    return {
        "id": doc.id,
        "title": doc.title,
        "abstract": doc.abstract,
        "domain": doc.domain_label,
        "paragraphs": paragraphs,
        "figures": figures,
    }


def document_from_dict(data: dict) -> Document:
    return Document(
        id=data["id"],
        title=data.get("title", ""),
        abstract=data["abstract"],
        domain_label=data.get("domain", ""),
        paragraphs=tuple(
            Paragraph(
                paragraph_id=p["id"],
                text=p["text"],
                section_heading=p.get("heading"),
            )
            for p in data.get("paragraphs", [])
        ),
        figures=tuple(
            Figure(
                figure_id=f["id"],
                order_index=f["order_index"],
                caption=f["caption"],
                label_number=f.get("label_number"),
                image_ref=f.get("image_ref"),
            )
            for f in data.get("figures", [])
        ),
    )


def gold_to_dict(ann: GoldAnnotation) -> dict:
    return {
        "paper_id": ann.paper_id,
        "annotator_id": ann.annotator_id,
        "ranking": list(ann.ranking),
        "ts": ann.timestamp,
    }


def gold_from_dict(data: dict) -> GoldAnnotation:
    return GoldAnnotation(
        paper_id=data["paper_id"],
        annotator_id=data["annotator_id"],
        ranking=tuple(data["ranking"]),
        timestamp=float(data.get("ts", 0.0)),
    )


def ranked_list_to_dict(ranked: RankedList) -> dict:
    out: dict = {"paper_id": ranked.paper_id, "ordering": list(ranked.ordering)}
    if ranked.costs is not None:
        out["costs"] = list(ranked.costs)
    return out


def ranked_list_from_dict(data: dict) -> RankedList:
    costs = data.get("costs")
    return RankedList(
        paper_id=data["paper_id"],
        ordering=tuple(data["ordering"]),
        costs=tuple(float(c) for c in costs) if costs is not None else None,
    )


def dumps_json(obj: dict) -> str:
    """Canonical one-line JSON used for all JSONL files (byte-stable)."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: Path | str, records: Iterable[dict]) -> int:
    n = 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_json(rec) + "\n")
            n += 1
    return n


def read_jsonl(path: Path | str) -> Iterator[dict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from exc


def load_corpus(path: Path | str) -> list[Document]:
    return [document_from_dict(d) for d in read_jsonl(path)]


def save_corpus(path: Path | str, docs: Sequence[Document]) -> int:
    return write_jsonl(path, (document_to_dict(d) for d in docs))


def load_gold(path: Path | str) -> list[GoldAnnotation]:
    return [gold_from_dict(d) for d in read_jsonl(path)]


def save_gold(path: Path | str, annotations: Sequence[GoldAnnotation]) -> int:
    return write_jsonl(path, (gold_to_dict(a) for a in annotations))


def load_rankings(path: Path | str) -> list[RankedList]:
    return [ranked_list_from_dict(d) for d in read_jsonl(path)]


def save_rankings(path: Path | str, rankings: Sequence[RankedList]) -> int:
    return write_jsonl(path, (ranked_list_to_dict(r) for r in rankings))
