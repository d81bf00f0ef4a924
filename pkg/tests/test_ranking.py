"""Figure ranking by summed sentence cost, plus the two baselines."""

from __future__ import annotations

import pytest

from figrank.corpus import Document, Figure, Paragraph
from figrank.ranking import (
    ScoringError,
    baseline_pick_first,
    baseline_random,
    rank_figures,
)
from figrank.scorers import ConstantScorer

import synth


class TableScorer:
    """Cost lookup keyed by (sentence, caption); unknown pairs error."""

    def __init__(self, table: dict[tuple[str, str], float]):
        self.table = table

    def score(self, sentence: str, caption: str) -> float:
        return self.table[(sentence, caption)]


def two_figure_doc() -> Document:
    return Document(
        id="doc",
        title="t",
        abstract="Sentence one. Sentence two.",
        domain_label="x",
        figures=(Figure("f1", 0, "cap one"), Figure("f2", 1, "cap two")),
    )


class TestRankFigures:
    def test_summed_costs_and_ordering(self):
        scorer = TableScorer(
            {
                ("Sentence one.", "cap one"): 0.9,
                ("Sentence two.", "cap one"): 0.9,
                ("Sentence one.", "cap two"): 0.1,
                ("Sentence two.", "cap two"): 1.6,
            }
        )
        ranked = rank_figures(scorer, two_figure_doc())
        # Totals: f1 = 1.8, f2 = 1.7, so the later figure wins on cost.
        assert ranked.ordering == ("f2", "f1")
        assert ranked.costs == pytest.approx((1.7, 1.8), abs=1e-12)
        assert ranked.paper_id == "doc"

    def test_costs_sorted_ascending(self):
        doc, _ = synth.make_separable_doc("p", __import__("numpy").random.default_rng(3))
        scorer = ConstantScorer(0.25)
        ranked = rank_figures(scorer, doc)
        assert list(ranked.costs) == sorted(ranked.costs)

    def test_ties_break_by_document_order(self):
        doc = two_figure_doc()
        ranked = rank_figures(ConstantScorer(0.5), doc)
        assert ranked.ordering == ("f1", "f2")
        assert ranked.costs == pytest.approx((1.0, 1.0))

    def test_single_sentence_abstract(self):
        doc = Document(
            id="d",
            title="t",
            abstract="Only sentence",
            domain_label="x",
            figures=(Figure("f1", 0, "c1"),),
        )
        ranked = rank_figures(TableScorer({("Only sentence", "c1"): 0.4}), doc)
        assert ranked.costs == pytest.approx((0.4,))

    def test_empty_abstract_rejected(self):
        doc = Document(id="d", title="t", abstract="   ", domain_label="x")
        with pytest.raises(ValueError, match="empty abstract"):
            rank_figures(ConstantScorer(0.0), doc)

    def test_scorer_failure_wrapped_with_context(self):
        doc = two_figure_doc()
        scorer = TableScorer({("Sentence one.", "cap one"): 0.1})
        with pytest.raises(ScoringError, match="paper 'doc', figure 'f1'"):
            rank_figures(scorer, doc)

    def test_lowering_one_total_moves_it_first(self):
        doc = two_figure_doc()
        base = {
            ("Sentence one.", "cap one"): 0.9,
            ("Sentence two.", "cap one"): 0.9,
            ("Sentence one.", "cap two"): 0.8,
            ("Sentence two.", "cap two"): 0.8,
        }
        assert rank_figures(TableScorer(base), doc).ordering == ("f2", "f1")
        dominant = dict(base)
        dominant[("Sentence one.", "cap one")] = 0.0
        dominant[("Sentence two.", "cap one")] = 0.0
        assert rank_figures(TableScorer(dominant), doc).ordering == ("f1", "f2")

    def test_constant_shift_of_all_costs_preserves_order(self):
        doc = two_figure_doc()
        base = {
            ("Sentence one.", "cap one"): 0.3,
            ("Sentence two.", "cap one"): 0.7,
            ("Sentence one.", "cap two"): 0.2,
            ("Sentence two.", "cap two"): 0.4,
        }
        shifted = {key: value + 5.0 for key, value in base.items()}
        assert (
            rank_figures(TableScorer(base), doc).ordering
            == rank_figures(TableScorer(shifted), doc).ordering
        )


class TestBaselineRandom:
    def test_permutation_of_figure_ids(self):
        doc, _ = synth.make_separable_doc("p1", __import__("numpy").random.default_rng(0))
        ranked = baseline_random(doc, seed=0)
        assert sorted(ranked.ordering) == sorted(f.figure_id for f in doc.figures)
        assert ranked.costs is None

    def test_deterministic_per_seed_and_paper(self):
        doc, _ = synth.make_separable_doc("p1", __import__("numpy").random.default_rng(0))
        assert baseline_random(doc, 4).ordering == baseline_random(doc, 4).ordering
        assert baseline_random(doc, 4).ordering != baseline_random(doc, 5).ordering

    def test_papers_get_different_permutations(self):
        docs, _ = synth.make_eval_docs(20, seed=6)
        orderings = set()
        for doc in docs:
            positions = tuple(
                sorted(doc.figures, key=lambda f: f.figure_id).index(
                    doc.figure_by_id(fid)
                )
                for fid in baseline_random(doc, seed=0).ordering
            )
            orderings.add(positions)
        assert len(orderings) > 1

    def test_independent_of_document_processing_order(self):
        docs, _ = synth.make_eval_docs(5, seed=2)
        forward = [baseline_random(d, 9).ordering for d in docs]
        backward = [baseline_random(d, 9).ordering for d in reversed(docs)]
        assert forward == list(reversed(backward))


class TestBaselinePickFirst:
    def test_document_order(self):
        doc, _ = synth.make_separable_doc("p1", __import__("numpy").random.default_rng(1))
        ranked = baseline_pick_first(doc)
        assert ranked.ordering == tuple(f.figure_id for f in doc.figures)

    def test_sorts_by_order_index(self):
        doc = Document(
            id="d",
            title="t",
            abstract="a",
            domain_label="x",
            figures=(Figure("f1", 0, "c1"), Figure("f2", 1, "c2"), Figure("f3", 2, "c3")),
        )
        assert baseline_pick_first(doc).ordering == ("f1", "f2", "f3")
