"""Document parsing: sentence segmentation, inline figure mentions, linking.

Everything here is rule-based and deterministic.  The mention grammar favors
precision over recall: self-supervision tolerates missed mentions far better
than wrong ones.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus import (
    Document,
    FigureMention,
    document_from_dict,
    document_to_dict,
    dumps_json,
    normalize_document,
    read_jsonl,
    validate_document,
)


@dataclass(frozen=True)
class SentenceSpan:
    """One sentence as a (start, end) character slice of its source text."""

    start: int
    end: int
    text: str


# Dotted abbreviations that must not terminate a sentence.  Checked as a
# case-insensitive suffix of the text up to and including the period.
_PROTECTED_SUFFIXES = ("fig.", "figs.", "e.g.", "i.e.", "et al.", "cf.", "vs.")

_TERMINATOR = re.compile(r"[.!?]")


def _is_protected_period(text: str, pos: int) -> bool:
    """True if the '.' at ``pos`` is an abbreviation dot, an initial, or a
    decimal point rather than a sentence terminator."""
    if text[pos] != ".":
        return False
    head = text[: pos + 1].lower()
    for suffix in _PROTECTED_SUFFIXES:
        if head.endswith(suffix):
            # Require a boundary before the abbreviation ("config." is not "fig.").
            prev = pos - len(suffix)
            if prev < 0 or not (text[prev].isalnum() or text[prev] == "."):
                return True
    # Single-letter initial: "J. Smith".
    if pos >= 1 and text[pos - 1].isalpha() and (pos == 1 or not text[pos - 2].isalnum()):
        return True
    # Decimal point: digit on both sides.
    if 0 < pos < len(text) - 1 and text[pos - 1].isdigit() and text[pos + 1].isdigit():
        return True
    return False


def split_sentences(text: str) -> list[SentenceSpan]:
    """Segment ``text`` into sentence spans.

    A sentence ends at '.', '!' or '?' followed by whitespace and an
    uppercase letter, or at end of text.  Protected abbreviations, initials
    and decimal points never end a sentence.  Spans exclude surrounding
    whitespace, so the gaps between spans are whitespace-only.
    """
    spans: list[SentenceSpan] = []
    n = len(text)
    start = 0
    while start < n and text[start].isspace():
        start += 1
    if start >= n:
        return []

    pos = start
    while pos < n:
        match = _TERMINATOR.search(text, pos)
        if match is None:
            break
        term = match.start()
        # Consume any run of terminators ("?!", "...") as one ending.
        end = term
        while end + 1 < n and text[end + 1] in ".!?":
            end += 1
        if _is_protected_period(text, end):
            pos = end + 1
            continue
        after = end + 1
        if after >= n:
            break
        if not text[after].isspace():
            pos = end + 1
            continue
        follow = after
        while follow < n and text[follow].isspace():
            follow += 1
        if follow < n and not text[follow].isupper():
            pos = end + 1
            continue
        spans.append(SentenceSpan(start, end + 1, text[start : end + 1]))
        start = follow
        pos = follow
        if follow >= n:
            return spans

    # Trailing sentence (may lack a terminator); trim trailing whitespace.
    end = n
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append(SentenceSpan(start, end, text[start:end]))
    return spans


# -- inline figure mentions -------------------------------------------------

# "figure"/"figures" as whole words, or the dotted forms "fig."/"figs.";
# then one or more integers joined by commas, "and", "&" or range dashes.
_NUMBER_LIST = r"\d+(?:\s*(?:,|and|&|[–—-])\s*\d+)*"
_MENTION = re.compile(
    r"\b(?:figs?\.|figures?\b)\s*(" + _NUMBER_LIST + r")",
    re.IGNORECASE,
)
_NUM_OR_DASH = re.compile(r"(\d+)|([–—-])")

# Figure numbers above this are treated as reference noise (line ids, years).
MAX_FIGURE_NUMBER = 1000


def _expand_numbers(list_text: str) -> list[int]:
    """Parse "2, 3-5 and 7" into [2, 3, 4, 5, 7]."""
    numbers: list[int] = []
    pending_range = False
    for match in _NUM_OR_DASH.finditer(list_text):
        if match.group(2):
            pending_range = bool(numbers)
            continue
        value = int(match.group(1))
        if pending_range and numbers and numbers[-1] < value:
            numbers.extend(range(numbers[-1] + 1, value + 1))
        else:
            numbers.append(value)
        pending_range = False
    seen: set[int] = set()
    out = []
    for num in numbers:
        if 1 <= num <= MAX_FIGURE_NUMBER and num not in seen:
            seen.add(num)
            out.append(num)
    return out


def extract_figure_mentions(paragraph_text: str, paragraph_id: str = "") -> list[FigureMention]:
    """Find every inline figure reference in one paragraph.

    Matches never overlap and are returned in order of appearance.  Numbers
    above ``MAX_FIGURE_NUMBER`` are discarded as spurious; a mention whose
    numbers are all spurious is dropped entirely.
    """
    mentions: list[FigureMention] = []
    for match in _MENTION.finditer(paragraph_text):
        numbers = _expand_numbers(match.group(1))
        if not numbers:
            continue
        mentions.append(
            FigureMention(
                paragraph_id=paragraph_id,
                char_span=(match.start(), match.end()),
                referenced_numbers=tuple(numbers),
            )
        )
    return mentions


_CAPTION_LABEL = re.compile(r"^\s*(?:figure|fig\.)\s*(\d+)(?=[:.\s]|$)", re.IGNORECASE)


def parse_caption_label(caption: str) -> Optional[int]:
    """Extract the printed figure number from a caption prefix, if any.

    "Figure 2: ..." -> 2, "Fig. 10. ..." -> 10, "Overview ..." -> None.
    """
    match = _CAPTION_LABEL.match(caption)
    if match is None:
        return None
    number = int(match.group(1))
    return number if number >= 1 else None


# -- paragraph <-> figure linking -------------------------------------------


@dataclass
class MentionDiagnostics:
    mentions_found: int = 0
    numbers_resolved: int = 0
    numbers_unresolved: int = 0


@dataclass(frozen=True)
class MentionIndex:
    """Bidirectional paragraph <-> figure links for one document.

    The two maps are exact inverses; lists follow document order and carry
    no duplicates.
    """

    paper_id: str
    paragraphs_of_figure: dict[str, tuple[str, ...]]
    figures_of_paragraph: dict[str, tuple[str, ...]]
    diagnostics: MentionDiagnostics = field(compare=False, default_factory=MentionDiagnostics)

    def mentioned_figures(self) -> list[str]:
        return [fid for fid, pars in self.paragraphs_of_figure.items() if pars]


def build_mention_index(doc: Document) -> MentionIndex:
    """Resolve every inline mention to a figure and build the link index.

    A mention number n maps to the figure whose printed label is n (from the
    ``label_number`` field, else parsed from the caption).  Only when no
    figure in the document carries any label does n fall back to the figure
    at order_index n-1.  Unresolvable numbers are dropped and tallied.
    """
    violations = validate_document(doc)
    if violations:
        raise ValueError(f"invalid document {doc.id!r}: " + "; ".join(violations))

    label_to_figure: dict[int, str] = {}
    for fig in doc.figures:
        label = fig.label_number if fig.label_number is not None else parse_caption_label(fig.caption)
        if label is not None and label not in label_to_figure:
            label_to_figure[label] = fig.figure_id
    use_order_fallback = not label_to_figure

    diag = MentionDiagnostics()
    fig_to_pars: dict[str, list[str]] = {fig.figure_id: [] for fig in doc.figures}
    par_to_figs: dict[str, list[str]] = {par.paragraph_id: [] for par in doc.paragraphs}

    for par in doc.paragraphs:
        mentions = extract_figure_mentions(par.text, par.paragraph_id)
        diag.mentions_found += len(mentions)
        for mention in mentions:
            for number in mention.referenced_numbers:
                if use_order_fallback:
                    fid = (
                        doc.figures[number - 1].figure_id
                        if 1 <= number <= len(doc.figures)
                        else None
                    )
                else:
                    fid = label_to_figure.get(number)
                if fid is None:
                    diag.numbers_unresolved += 1
                    continue
                diag.numbers_resolved += 1
                if par.paragraph_id not in fig_to_pars[fid]:
                    fig_to_pars[fid].append(par.paragraph_id)
                if fid not in par_to_figs[par.paragraph_id]:
                    par_to_figs[par.paragraph_id].append(fid)

    return MentionIndex(
        paper_id=doc.id,
        paragraphs_of_figure={k: tuple(v) for k, v in fig_to_pars.items()},
        figures_of_paragraph={k: tuple(v) for k, v in par_to_figs.items()},
        diagnostics=diag,
    )


# -- corpus ingestion (CLI backend) -----------------------------------------


@dataclass
class IngestStats:
    documents_seen: int = 0
    documents_kept: int = 0
    documents_dropped_invalid: int = 0
    documents_dropped_few_figures: int = 0
    documents_dropped_duplicate_id: int = 0
    mentions_found: int = 0
    numbers_resolved: int = 0
    numbers_unresolved: int = 0
    drop_reasons: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "documents_seen": self.documents_seen,
            "documents_kept": self.documents_kept,
            "documents_dropped_invalid": self.documents_dropped_invalid,
            "documents_dropped_few_figures": self.documents_dropped_few_figures,
            "documents_dropped_duplicate_id": self.documents_dropped_duplicate_id,
            "mentions_found": self.mentions_found,
            "numbers_resolved": self.numbers_resolved,
            "numbers_unresolved": self.numbers_unresolved,
            "drop_reasons": self.drop_reasons,
        }


def iter_input_documents(path: Path) -> Iterable[dict]:
    """Yield raw document dicts from a JSONL file, a JSON file, or a
    directory of JSON files (sorted by name for determinism)."""
    if path.is_dir():
        for child in sorted(path.iterdir()):
            if child.suffix.lower() == ".json":
                with child.open("r", encoding="utf-8") as fh:
                    yield json.load(fh)
            elif child.suffix.lower() == ".jsonl":
                yield from read_jsonl(child)
    elif path.suffix.lower() == ".jsonl":
        yield from read_jsonl(path)
    else:
        with path.open("r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if isinstance(loaded, list):
            yield from loaded
        else:
            yield loaded


def ingest_corpus(
    in_path: Path | str,
    out_path: Path | str,
    min_figures: int = 5,
) -> IngestStats:
    """Normalize, validate and filter raw documents into a corpus JSONL."""
    stats = IngestStats()
    seen_ids: set[str] = set()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as out:
        for raw in iter_input_documents(Path(in_path)):
            stats.documents_seen += 1
            doc = normalize_document(document_from_dict(raw))
            violations = validate_document(doc)
            if violations:
                stats.documents_dropped_invalid += 1
                stats.drop_reasons[doc.id or f"<record {stats.documents_seen}>"] = violations
                continue
            if doc.id in seen_ids:
                stats.documents_dropped_duplicate_id += 1
                stats.drop_reasons[doc.id] = ["id: duplicate in corpus"]
                continue
            if len(doc.figures) < min_figures:
                stats.documents_dropped_few_figures += 1
                continue
            seen_ids.add(doc.id)
            index = build_mention_index(doc)
            stats.mentions_found += index.diagnostics.mentions_found
            stats.numbers_resolved += index.diagnostics.numbers_resolved
            stats.numbers_unresolved += index.diagnostics.numbers_unresolved
            out.write(dumps_json(document_to_dict(doc)) + "\n")
            stats.documents_kept += 1
    return stats
