"""Ranking metrics (acc@k, AP/MAP, MRR) and evaluation reports.

Doubly annotated papers are scored against each annotator's gold set
separately and averaged per paper before the corpus mean, so no rank-fusion
rule is invented.  All metrics live in [0, 1].
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import Document, GoldAnnotation, RankedList
from .ranking import baseline_pick_first, baseline_random, rank_figures
from .scorers import Scorer

KNOWN_METRICS = ("acc@1", "acc@3", "map", "mrr")


def _rankings_by_paper(ranked: Sequence[RankedList]) -> dict[str, RankedList]:
    by_paper: dict[str, RankedList] = {}
    for r in ranked:
        if r.paper_id in by_paper:
            raise ValueError(f"duplicate ranking for paper {r.paper_id!r}")
        by_paper[r.paper_id] = r
    return by_paper


def _gold_by_paper(gold: Sequence[GoldAnnotation]) -> dict[str, list[GoldAnnotation]]:
    by_paper: dict[str, list[GoldAnnotation]] = defaultdict(list)
    for ann in gold:
        by_paper[ann.paper_id].append(ann)
    return dict(by_paper)


def _require_rankings(
    by_paper: Mapping[str, RankedList], gold_papers: Iterable[str]
) -> None:
    missing = sorted(p for p in set(gold_papers) if p not in by_paper)
    if missing:
        raise ValueError(f"no ranking for gold papers: {', '.join(missing)}")


def accuracy_at_k(
    ranked: Sequence[RankedList], gold: Sequence[GoldAnnotation], k: int
) -> float:
    """Fraction of papers whose single gold figure is in the top k.

    Requires K=1 gold; papers with several annotations average their
    per-annotation hits before the corpus mean.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    for ann in gold:
        if len(ann.ranking) != 1:
            raise ValueError(
                f"accuracy@k requires single-gold annotations; paper {ann.paper_id!r} has K={len(ann.ranking)}"
            )
    by_paper = _rankings_by_paper(ranked)
    gold_groups = _gold_by_paper(gold)
    if not gold_groups:
        raise ValueError("no gold annotations")
    _require_rankings(by_paper, gold_groups)

    total = 0.0
    for paper_id, annotations in gold_groups.items():
        top_k = set(by_paper[paper_id].ordering[:k])
        hits = [1.0 if ann.ranking[0] in top_k else 0.0 for ann in annotations]
        total += sum(hits) / len(hits)
    return total / len(gold_groups)


def average_precision(ordering: Sequence[str], relevant: Iterable[str]) -> float:
    """AP = (1/|R|) * sum over relevant positions k of (hits in top k)/k."""
    relevant_set = set(relevant)
    if not relevant_set:
        raise ValueError("relevant set is empty")
    missing = relevant_set.difference(ordering)
    if missing:
        raise ValueError(f"relevant figures missing from ordering: {sorted(missing)}")
    hits = 0
    ap = 0.0
    for position, fid in enumerate(ordering, start=1):
        if fid in relevant_set:
            hits += 1
            ap += hits / position
    return ap / len(relevant_set)


def reciprocal_rank(ordering: Sequence[str], relevant: Iterable[str]) -> float:
    """1 / rank of the first retrieved figure belonging to the gold set."""
    relevant_set = set(relevant)
    if not relevant_set:
        raise ValueError("relevant set is empty")
    missing = relevant_set.difference(ordering)
    if missing:
        raise ValueError(f"relevant figures missing from ordering: {sorted(missing)}")
    for position, fid in enumerate(ordering, start=1):
        if fid in relevant_set:
            return 1.0 / position
    raise AssertionError("unreachable: relevant set verified non-empty")


def _per_paper_mean(
    ranked: Sequence[RankedList],
    gold: Sequence[GoldAnnotation],
    per_annotation,
) -> float:
    by_paper = _rankings_by_paper(ranked)
    gold_groups = _gold_by_paper(gold)
    if not gold_groups:
        raise ValueError("no gold annotations")
    _require_rankings(by_paper, gold_groups)
    total = 0.0
    for paper_id, annotations in gold_groups.items():
        ordering = by_paper[paper_id].ordering
        values = [per_annotation(ordering, set(ann.ranking)) for ann in annotations]
        total += sum(values) / len(values)
    return total / len(gold_groups)


def mean_average_precision(
    ranked: Sequence[RankedList], gold: Sequence[GoldAnnotation]
) -> float:
    return _per_paper_mean(ranked, gold, average_precision)


def mean_reciprocal_rank(
    ranked: Sequence[RankedList], gold: Sequence[GoldAnnotation]
) -> float:
    return _per_paper_mean(ranked, gold, reciprocal_rank)


def compute_metric(
    name: str, ranked: Sequence[RankedList], gold: Sequence[GoldAnnotation]
) -> float:
    if name.startswith("acc@"):
        return accuracy_at_k(ranked, gold, int(name.split("@", 1)[1]))
    if name == "map":
        return mean_average_precision(ranked, gold)
    if name == "mrr":
        return mean_reciprocal_rank(ranked, gold)
    raise ValueError(f"unknown metric {name!r} (known: {', '.join(KNOWN_METRICS)})")


@dataclass
class EvalReport:
    metrics: dict[str, float]
    paper_count: int
    per_domain: dict[str, dict[str, float]] = field(default_factory=dict)
    domain_paper_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {"metrics": self.metrics, "paper_count": self.paper_count}
        if self.per_domain:
            out["per_domain"] = self.per_domain
            out["domain_paper_counts"] = self.domain_paper_counts
        return out


def evaluate(
    ranked: Sequence[RankedList],
    gold: Sequence[GoldAnnotation],
    metric_names: Sequence[str],
    domain_by_paper: Optional[Mapping[str, str]] = None,
) -> EvalReport:
    """Compute the requested metrics, optionally broken down by domain."""
    gold_papers = {ann.paper_id for ann in gold}
    report = EvalReport(
        metrics={name: compute_metric(name, ranked, gold) for name in metric_names},
        paper_count=len(gold_papers),
    )
    if domain_by_paper is not None:
        domains = sorted({domain_by_paper.get(p, "?") for p in gold_papers})
        for domain in domains:
            papers = {p for p in gold_papers if domain_by_paper.get(p, "?") == domain}
            slice_gold = [ann for ann in gold if ann.paper_id in papers]
            slice_ranked = [r for r in ranked if r.paper_id in papers]
            report.per_domain[domain] = {
                name: compute_metric(name, slice_ranked, slice_gold) for name in metric_names
            }
            report.domain_paper_counts[domain] = len(papers)
    return report


# -- cross-domain grid -------------------------------------------------------

BASELINE_COLUMNS = ("random", "pick_first")


@dataclass
class CrossDomainGrid:
    """Table-shaped report: rows are test domains, columns are training
    domains plus the two baselines; empty slices hold None."""

    test_domains: list[str]
    train_domains: list[str]
    cells: dict[str, dict[str, Optional[EvalReport]]]
    metric_names: list[str]

    def to_dict(self) -> dict:
        return {
            "test_domains": self.test_domains,
            "train_domains": self.train_domains,
            "columns": list(self.train_domains) + list(BASELINE_COLUMNS),
            "metrics": self.metric_names,
            "cells": {
                test: {
                    column: (report.to_dict() if report is not None else None)
                    for column, report in row.items()
                }
                for test, row in self.cells.items()
            },
        }


def cross_domain_eval(
    scorers_by_domain: Mapping[str, Scorer],
    docs: Sequence[Document],
    gold: Sequence[GoldAnnotation],
    metric_names: Sequence[str],
    seed: int = 0,
) -> CrossDomainGrid:
    """Evaluate every per-domain scorer on every domain slice.

    Each cell evaluates one (train domain scorer, test domain slice) pair;
    the baseline columns rank the same slices with the seeded random and
    pick-first orderings.
    """
    gold_papers = {ann.paper_id for ann in gold}
    docs_with_gold = [d for d in docs if d.id in gold_papers]
    by_domain: dict[str, list[Document]] = defaultdict(list)
    for doc in docs_with_gold:
        by_domain[doc.domain_label].append(doc)

    test_domains = sorted(by_domain)
    train_domains = sorted(scorers_by_domain)
    cells: dict[str, dict[str, Optional[EvalReport]]] = {}
    for test in test_domains:
        slice_docs = by_domain[test]
        slice_ids = {d.id for d in slice_docs}
        slice_gold = [ann for ann in gold if ann.paper_id in slice_ids]
        row: dict[str, Optional[EvalReport]] = {}
        if not slice_docs or not slice_gold:
            for column in list(train_domains) + list(BASELINE_COLUMNS):
                row[column] = None
            cells[test] = row
            continue
        for train in train_domains:
            scorer = scorers_by_domain[train]
            ranked = [rank_figures(scorer, doc) for doc in slice_docs]
            row[train] = evaluate(ranked, slice_gold, metric_names)
        ranked_random = [baseline_random(doc, seed) for doc in slice_docs]
        row["random"] = evaluate(ranked_random, slice_gold, metric_names)
        ranked_first = [baseline_pick_first(doc) for doc in slice_docs]
        row["pick_first"] = evaluate(ranked_first, slice_gold, metric_names)
        cells[test] = row
    return CrossDomainGrid(
        test_domains=test_domains,
        train_domains=train_domains,
        cells=cells,
        metric_names=list(metric_names),
    )
