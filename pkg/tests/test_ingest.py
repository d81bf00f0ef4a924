"""Sentence segmentation, mention extraction and corpus ingestion."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from figrank.corpus import (
    Document,
    Figure,
    Paragraph,
    document_to_dict,
    dumps_json,
    load_corpus,
)
from figrank.ingest import (
    MAX_FIGURE_NUMBER,
    build_mention_index,
    extract_figure_mentions,
    ingest_corpus,
    iter_input_documents,
    parse_caption_label,
    split_sentences,
)

import synth


class TestSplitSentences:
    def test_two_plain_sentences(self):
        spans = split_sentences("First one. Second one.")
        assert [s.text for s in spans] == ["First one.", "Second one."]

    def test_spans_slice_source_text(self):
        text = "  Alpha beta. Gamma? Delta ends without period"
        for span in split_sentences(text):
            assert text[span.start : span.end] == span.text

    def test_abbreviation_fig_does_not_split(self):
        spans = split_sentences("See Fig. 3 for details. The rest follows.")
        assert [s.text for s in spans] == ["See Fig. 3 for details.", "The rest follows."]

    def test_plural_figs_and_other_abbreviations(self):
        text = "Results appear in Figs. 2-4, e.g. the loss, i.e. cost, cf. baselines. Done."
        spans = split_sentences(text)
        assert len(spans) == 2
        assert spans[1].text == "Done."

    def test_et_al_protected(self):
        spans = split_sentences("Smith et al. Reported gains. We differ.")
        assert [s.text for s in spans] == ["Smith et al. Reported gains.", "We differ."]

    def test_config_is_not_fig(self):
        spans = split_sentences("We tuned the config. Results improved.")
        assert [s.text for s in spans] == ["We tuned the config.", "Results improved."]

    def test_decimal_point_protected(self):
        spans = split_sentences("Loss fell to 3.5 overall. Great.")
        assert [s.text for s in spans] == ["Loss fell to 3.5 overall.", "Great."]

    def test_single_letter_initial_protected(self):
        spans = split_sentences("J. R. Smith wrote it. We cite it.")
        assert [s.text for s in spans] == ["J. R. Smith wrote it.", "We cite it."]

    def test_lowercase_after_period_does_not_split(self):
        spans = split_sentences("versions 1.x. and 2.x. were tested. All passed.")
        assert spans[-1].text == "All passed."

    def test_terminator_runs_consumed_together(self):
        spans = split_sentences("Really?! Yes... Indeed.")
        assert [s.text for s in spans] == ["Really?!", "Yes...", "Indeed."]

    def test_trailing_sentence_without_terminator(self):
        spans = split_sentences("One. two three")
        assert [s.text for s in spans] == ["One. two three"]
        spans = split_sentences("One. Two three")
        assert [s.text for s in spans] == ["One.", "Two three"]

    def test_empty_and_whitespace(self):
        assert split_sentences("") == []
        assert split_sentences("   \n\t") == []

    @given(st.text(max_size=160))
    @settings(max_examples=80, deadline=None)
    def test_spans_ordered_disjoint_and_cover_non_space(self, text: str):
        spans = split_sentences(text)
        prev_end = -1
        for span in spans:
            assert span.start >= 0 and span.end <= len(text)
            assert span.start > prev_end
            assert text[span.start : span.end] == span.text
            assert span.text == span.text.strip()
            prev_end = span.end
        covered = set()
        for span in spans:
            covered.update(range(span.start, span.end))
        for i, ch in enumerate(text):
            if not ch.isspace():
                assert i in covered


class TestExtractFigureMentions:
    def numbers(self, text: str) -> list[tuple[int, ...]]:
        return [m.referenced_numbers for m in extract_figure_mentions(text)]

    def test_simple_forms(self):
        assert self.numbers("As Figure 3 shows") == [(3,)]
        assert self.numbers("see fig. 2 here") == [(2,)]
        assert self.numbers("In FIGURES 1 and 4") == [(1, 4)]

    def test_list_and_range_expansion(self):
        assert self.numbers("Figs. 2, 3-5 and 7 summarize") == [(2, 3, 4, 5, 7)]

    def test_en_and_em_dash_ranges(self):
        assert self.numbers("Figures 1–3") == [(1, 2, 3)]
        assert self.numbers("Figures 1—3") == [(1, 2, 3)]

    def test_descending_pair_is_not_a_range(self):
        assert self.numbers("Figures 5-2") == [(5, 2)]

    def test_duplicates_dropped_within_mention(self):
        assert self.numbers("Figures 2 and 2") == [(2,)]

    def test_word_boundary_required(self):
        assert self.numbers("We configure 5 nodes") == []
        assert self.numbers("The prefigure 2 idea") == []

    def test_bare_word_without_number_ignored(self):
        assert self.numbers("This figure shows nothing numeric") == []

    def test_huge_numbers_discarded(self):
        assert self.numbers(f"Figure {MAX_FIGURE_NUMBER + 1} is noise") == []
        assert self.numbers(f"Figures 2 and {MAX_FIGURE_NUMBER + 1}") == [(2,)]

    def test_char_spans_point_at_source(self):
        text = "Intro text. See Figure 12 and Fig. 3 for shapes."
        mentions = extract_figure_mentions(text, "p9")
        assert len(mentions) == 2
        for mention in mentions:
            start, end = mention.char_span
            assert mention.paragraph_id == "p9"
            fragment = text[start:end].lower()
            assert fragment.startswith(("figure", "fig."))
        assert text[mentions[0].char_span[0] : mentions[0].char_span[1]] == "Figure 12"

    def test_multiple_mentions_in_order(self):
        assert self.numbers("Figure 1 then Figure 2") == [(1,), (2,)]


class TestParseCaptionLabel:
    @pytest.mark.parametrize(
        "caption,expected",
        [
            ("Figure 2: overview", 2),
            ("Fig. 10. The pipeline", 10),
            ("figure 7 shows the flow", 7),
            ("  Figure 3: indented", 3),
            ("Figure 4", 4),
            ("Overview of the system", None),
            ("Figure2x is glued", None),
            ("Figureling 5", None),
            ("Fig 5: dotless fig word", None),
        ],
    )
    def test_cases(self, caption, expected):
        assert parse_caption_label(caption) == expected


class TestBuildMentionIndex:
    def test_enumerated_fixture_links(self):
        doc = synth.mention_fixture_doc()
        index = build_mention_index(doc)
        assert index.paper_id == doc.id
        assert index.paragraphs_of_figure == {"f1": ("p1", "p2"), "f2": ("p2",)}
        assert index.figures_of_paragraph == {"p1": ("f1",), "p2": ("f1", "f2"), "p3": ()}

    def test_maps_are_inverses(self):
        index = build_mention_index(synth.triplet_fixture_doc())
        for fid, pars in index.paragraphs_of_figure.items():
            for pid in pars:
                assert fid in index.figures_of_paragraph[pid]
        for pid, figs in index.figures_of_paragraph.items():
            for fid in figs:
                assert pid in index.paragraphs_of_figure[fid]

    def test_label_resolution_beats_order(self):
        doc = Document(
            id="lab",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "Figure 9 is discussed."),),
            figures=(
                Figure("first", 0, "Figure 9: out of order label"),
                Figure("second", 1, "Figure 1: also labeled"),
            ),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure["first"] == ("p1",)
        assert index.paragraphs_of_figure["second"] == ()

    def test_explicit_label_number_field_wins(self):
        doc = Document(
            id="lab2",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "See Figure 5."),),
            figures=(Figure("f", 0, "No printed label", label_number=5),),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure["f"] == ("p1",)

    def test_order_fallback_only_without_labels(self):
        doc = Document(
            id="fall",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "Figure 2 shows it."),),
            figures=(Figure("fa", 0, "plain caption"), Figure("fb", 1, "plain caption two")),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure == {"fa": (), "fb": ("p1",)}
        assert index.diagnostics.numbers_resolved == 1

    def test_mixed_labels_disable_fallback(self):
        doc = Document(
            id="mixed",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "Figure 2 shows it."),),
            figures=(Figure("fa", 0, "Figure 1: labeled"), Figure("fb", 1, "plain")),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure == {"fa": (), "fb": ()}
        assert index.diagnostics.numbers_unresolved == 1

    def test_duplicate_labels_first_wins(self):
        doc = Document(
            id="dup",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "Figure 1 appears twice."),),
            figures=(Figure("fa", 0, "Figure 1: first"), Figure("fb", 1, "Figure 1: second")),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure["fa"] == ("p1",)
        assert index.paragraphs_of_figure["fb"] == ()

    def test_no_duplicate_links_for_repeated_mentions(self):
        doc = Document(
            id="rep",
            title="t",
            abstract="a",
            domain_label="x",
            paragraphs=(Paragraph("p1", "Figure 1 and Figure 1 again."),),
            figures=(Figure("f1", 0, "Figure 1: once"),),
        )
        index = build_mention_index(doc)
        assert index.paragraphs_of_figure["f1"] == ("p1",)
        assert index.diagnostics.mentions_found == 2
        assert index.diagnostics.numbers_resolved == 2

    def test_invalid_document_rejected(self):
        doc = Document(id="", title="t", abstract="", domain_label="x")
        with pytest.raises(ValueError, match="invalid document"):
            build_mention_index(doc)

    def test_mentioned_figures_helper(self):
        index = build_mention_index(synth.mention_fixture_doc())
        assert index.mentioned_figures() == ["f1", "f2"]


def raw_doc(doc_id: str, n_figures: int = 5, labeled: bool = True) -> dict:
    figures = []
    for k in range(n_figures):
        caption = f"Figure {k + 1}: caption {k}" if labeled else f"plain caption {k}"
        figures.append({"id": f"{doc_id}:f{k}", "order_index": k, "caption": caption})
    return {
        "id": doc_id,
        "title": f"Title {doc_id}",
        "abstract": "An   abstract  with spaces.",
        "domain": "cs",
        "paragraphs": [{"id": f"{doc_id}:p0", "text": "Figure 1 and Figure 2 appear."}],
        "figures": figures,
    }


class TestIngestCorpus:
    def test_filters_and_counts(self, tmp_path):
        raw = [
            raw_doc("keep1"),
            raw_doc("keep2"),
            raw_doc("small", n_figures=2),
            raw_doc("keep1"),
            {"id": "bad", "abstract": "", "paragraphs": [], "figures": []},
        ]
        in_path = tmp_path / "raw.jsonl"
        in_path.write_text("".join(json.dumps(r) + "\n" for r in raw), encoding="utf-8")
        out_path = tmp_path / "corpus.jsonl"
        stats = ingest_corpus(in_path, out_path, min_figures=5)
        assert stats.documents_seen == 5
        assert stats.documents_kept == 2
        assert stats.documents_dropped_few_figures == 1
        assert stats.documents_dropped_duplicate_id == 1
        assert stats.documents_dropped_invalid == 1
        assert "bad" in stats.drop_reasons
        assert stats.mentions_found == 4
        assert stats.numbers_resolved == 4
        kept = load_corpus(out_path)
        assert [d.id for d in kept] == ["keep1", "keep2"]
        assert kept[0].abstract == "An abstract with spaces."

    def test_stats_to_dict_keys(self, tmp_path):
        in_path = tmp_path / "raw.jsonl"
        in_path.write_text(json.dumps(raw_doc("a")) + "\n", encoding="utf-8")
        stats = ingest_corpus(in_path, tmp_path / "out.jsonl", min_figures=1)
        data = stats.to_dict()
        assert set(data) == {
            "documents_seen",
            "documents_kept",
            "documents_dropped_invalid",
            "documents_dropped_few_figures",
            "documents_dropped_duplicate_id",
            "mentions_found",
            "numbers_resolved",
            "numbers_unresolved",
            "drop_reasons",
        }
        assert data["documents_kept"] == 1

    def test_output_byte_stable(self, tmp_path):
        in_path = tmp_path / "raw.jsonl"
        in_path.write_text(
            "".join(json.dumps(raw_doc(f"d{i}")) + "\n" for i in range(3)), encoding="utf-8"
        )
        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        ingest_corpus(in_path, out_a)
        ingest_corpus(in_path, out_b)
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_min_figures_threshold(self, tmp_path):
        in_path = tmp_path / "raw.jsonl"
        in_path.write_text(json.dumps(raw_doc("three", n_figures=3)) + "\n", encoding="utf-8")
        out_path = tmp_path / "out.jsonl"
        stats = ingest_corpus(in_path, out_path, min_figures=3)
        assert stats.documents_kept == 1
        stats = ingest_corpus(in_path, out_path, min_figures=4)
        assert stats.documents_kept == 0
        assert stats.documents_dropped_few_figures == 1


class TestIterInputDocuments:
    def test_jsonl_file(self, tmp_path):
        path = tmp_path / "in.jsonl"
        path.write_text('{"id":"a"}\n{"id":"b"}\n', encoding="utf-8")
        assert [d["id"] for d in iter_input_documents(path)] == ["a", "b"]

    def test_json_file_with_list_or_single(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text('[{"id":"a"},{"id":"b"}]', encoding="utf-8")
        assert [d["id"] for d in iter_input_documents(path)] == ["a", "b"]
        single = tmp_path / "one.json"
        single.write_text('{"id":"only"}', encoding="utf-8")
        assert [d["id"] for d in iter_input_documents(single)] == ["only"]

    def test_directory_sorted_by_name(self, tmp_path):
        (tmp_path / "b.json").write_text('{"id":"b"}', encoding="utf-8")
        (tmp_path / "a.json").write_text('{"id":"a"}', encoding="utf-8")
        (tmp_path / "c.jsonl").write_text('{"id":"c1"}\n{"id":"c2"}\n', encoding="utf-8")
        (tmp_path / "notes.txt").write_text("ignored", encoding="utf-8")
        assert [d["id"] for d in iter_input_documents(tmp_path)] == ["a", "b", "c1", "c2"]


def test_separable_corpus_round_trips_through_ingest(tmp_path):
    docs, _ = synth.make_separable_corpus(6, seed=5)
    in_path = tmp_path / "raw.jsonl"
    in_path.write_text(
        "".join(dumps_json(document_to_dict(d)) + "\n" for d in docs), encoding="utf-8"
    )
    out_path = tmp_path / "corpus.jsonl"
    stats = ingest_corpus(in_path, out_path, min_figures=5)
    assert stats.documents_kept == 6
    assert load_corpus(out_path) == list(docs)
