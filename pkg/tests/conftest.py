"""Shared fixtures for the test suite."""

from __future__ import annotations

import pytest

from figrank.neural import ModelConfig, init_params
from figrank.tokenizer import Vocabulary

import synth

# One line per acceptance criterion, printed after the run so the verdicts
# survive pytest's output capturing.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_vocab() -> Vocabulary:
    """Small vocabulary over the fixture documents' text."""
    doc = synth.triplet_fixture_doc()
    texts = [doc.abstract]
    texts += [p.text for p in doc.paragraphs]
    texts += [f.caption for f in doc.figures]
    return Vocabulary.build(texts, min_freq=1)


@pytest.fixture(scope="session")
def tiny_config(tiny_vocab: Vocabulary) -> ModelConfig:
    return ModelConfig(
        vocab_size=tiny_vocab.size,
        embed_dim=8,
        n_layers=2,
        n_heads=2,
        ff_dim=16,
        max_len=24,
    )


@pytest.fixture(scope="session")
def tiny_params(tiny_config: ModelConfig):
    return init_params(tiny_config, seed=0)
