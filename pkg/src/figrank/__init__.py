"""Figure ranking for scientific papers.

Mines self-supervised (caption, paragraph) training pairs from inline
figure mentions, trains and applies scorers that rank a paper's figures as
visual summaries of its abstract, evaluates rankings against human gold
annotations, and serves the annotation workflow over HTTP.
"""

from .agreement import AgreementReport, compute_agreement, krippendorff_alpha
from .corpus import (
    Document,
    Figure,
    FigureMention,
    GoldAnnotation,
    Paragraph,
    RankedList,
    load_corpus,
    load_gold,
    load_rankings,
    save_corpus,
    save_gold,
    save_rankings,
    validate_document,
    validate_gold,
)
from .ingest import (
    MentionIndex,
    build_mention_index,
    extract_figure_mentions,
    ingest_corpus,
    parse_caption_label,
    split_sentences,
)
from .metrics import (
    EvalReport,
    accuracy_at_k,
    average_precision,
    cross_domain_eval,
    evaluate,
    mean_average_precision,
    mean_reciprocal_rank,
)
from .model_io import load_model, save_model
from .neural import AttentionRecord, ModelConfig, NeuralScorerParams, neural_cost
from .pairs import (
    PairGenConfig,
    TrainingTriplet,
    build_corpus_triplets,
    generate_triplets,
    load_triplets,
)
from .ranking import baseline_pick_first, baseline_random, rank_figures
from .scorers import ConstantScorer, NeuralScorer, Scorer, TfIdfScorer
from .tfidf import TfIdfModel, fit_tfidf, tfidf_cost
from .tokenizer import Vocabulary, encode_pair, tokenize
from .training import TrainConfig, TrainedModel, grad_check, train_neural

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "AttentionRecord",
    "ConstantScorer",
    "Document",
    "EvalReport",
    "Figure",
    "FigureMention",
    "GoldAnnotation",
    "MentionIndex",
    "ModelConfig",
    "NeuralScorer",
    "NeuralScorerParams",
    "PairGenConfig",
    "Paragraph",
    "RankedList",
    "Scorer",
    "TfIdfModel",
    "TfIdfScorer",
    "TrainConfig",
    "TrainedModel",
    "TrainingTriplet",
    "Vocabulary",
    "accuracy_at_k",
    "average_precision",
    "baseline_pick_first",
    "baseline_random",
    "build_corpus_triplets",
    "build_mention_index",
    "compute_agreement",
    "cross_domain_eval",
    "encode_pair",
    "evaluate",
    "extract_figure_mentions",
    "fit_tfidf",
    "generate_triplets",
    "grad_check",
    "ingest_corpus",
    "krippendorff_alpha",
    "load_corpus",
    "load_gold",
    "load_model",
    "load_rankings",
    "load_triplets",
    "mean_average_precision",
    "mean_reciprocal_rank",
    "neural_cost",
    "parse_caption_label",
    "rank_figures",
    "save_corpus",
    "save_gold",
    "save_model",
    "save_rankings",
    "split_sentences",
    "tfidf_cost",
    "tokenize",
    "train_neural",
    "validate_document",
    "validate_gold",
]
