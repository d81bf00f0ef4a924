"""Command-line entry point.

Every subcommand accepts ``--config FILE`` (key=value lines overriding that
subcommand's defaults; explicit flags still win) and ``--seed N``.  Report
subcommands print JSON to stdout and, given ``--report-dir``, also render a
delimited table plus matplotlib figures there.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional

from .agreement import compute_agreement
from .attention import (
    attention_cosine,
    sample_pairs_from_triplets,
    top_attended_cross_pairs,
)
from .corpus import (
    load_corpus,
    load_gold,
    load_rankings,
    ranked_list_to_dict,
    write_jsonl,
)
from .ingest import ingest_corpus
from .metrics import cross_domain_eval, evaluate
from .model_io import load_model, save_model
from .neural import ModelConfig
from .pairs import PairGenConfig, build_corpus_triplets, load_triplets
from .ranking import ScoringError, baseline_pick_first, baseline_random, rank_figures
from .scorers import NeuralScorer, TfIdfScorer
from .tfidf import fit_tfidf, load_tfidf
from .training import TrainConfig, TrainingDiverged, train_neural

PROG = "figrank"


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def load_config_file(path: Path) -> dict:
    """key=value per line; '#' starts a comment; keys use flag names with
    dashes or underscores."""
    overrides: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        overrides[key.strip().replace("-", "_")] = _coerce(value.strip())
    return overrides


def _seed(args: argparse.Namespace) -> int:
    return 0 if args.seed is None else args.seed


def _require(parser: argparse.ArgumentParser, args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            parser.error(f"--{name.replace('_', '-')} is required (flag or config file)")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


# -- subcommand handlers -----------------------------------------------------


def cmd_ingest(parser, args) -> int:
    _require(parser, args, "input", "out")
    stats = ingest_corpus(args.input, args.out, min_figures=args.min_figures)
    diagnostics = Path(
        args.diagnostics if args.diagnostics else f"{args.out}.diagnostics.json"
    )
    diagnostics.parent.mkdir(parents=True, exist_ok=True)
    diagnostics.write_text(
        json.dumps(stats.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(
        f"kept {stats.documents_kept}/{stats.documents_seen} documents -> {args.out}"
        f" (diagnostics: {diagnostics})"
    )
    return 0


def cmd_pairs(parser, args) -> int:
    _require(parser, args, "corpus", "out")
    docs = load_corpus(args.corpus)
    cfg = PairGenConfig(
        negatives_per_positive=args.neg_per_pos,
        rng_seed=_seed(args),
        max_pairs=args.max_pairs,
    )
    stats = build_corpus_triplets(docs, cfg, args.out)
    print(
        f"emitted {stats.triplets_emitted} triplets from {stats.documents_seen}"
        f" documents -> {args.out}"
    )
    return 0


def _model_config_from_args(args) -> ModelConfig:
    return ModelConfig(
        vocab_size=4,  # placeholder; training substitutes the real size
        embed_dim=args.embed_dim,
        n_layers=args.layers,
        n_heads=args.heads,
        ff_dim=args.ff_dim,
        max_len=args.max_len,
    )


def cmd_train(parser, args) -> int:
    _require(parser, args, "pairs", "out")
    triplets = load_triplets(args.pairs)
    cfg = TrainConfig(
        alpha=args.alpha,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        dropout_rate=args.dropout,
        grad_clip_norm=args.clip,
        rng_seed=_seed(args),
        freeze_encoder=args.freeze_encoder,
    )
    model = train_neural(
        triplets,
        cfg,
        model_config=_model_config_from_args(args),
        min_token_freq=args.min_token_freq,
    )
    save_model(model, args.out)
    final_loss = model.log[-1].loss if model.log else float("nan")
    print(
        f"trained on {len(triplets)} triplets ({len(model.log)} batches,"
        f" final batch loss {final_loss:.4f}) -> {args.out}"
    )
    if args.report_dir:
        from .reporting import write_training_log

        for path in write_training_log(model.log, args.report_dir):
            print(f"report: {path}")
    return 0


def cmd_rank(parser, args) -> int:
    _require(parser, args, "corpus", "out")
    docs = load_corpus(args.corpus)
    if args.scorer == "neural":
        _require(parser, args, "model")
        model = load_model(args.model)
        scorer = NeuralScorer(model.params, model.vocab)
        ranked = [rank_figures(scorer, doc) for doc in docs]
    elif args.scorer == "tfidf":
        tfidf = load_tfidf(args.model) if args.model else fit_tfidf(docs)
        scorer = TfIdfScorer(tfidf)
        ranked = [rank_figures(scorer, doc) for doc in docs]
    elif args.scorer == "random":
        ranked = [baseline_random(doc, _seed(args)) for doc in docs]
    elif args.scorer == "first":
        ranked = [baseline_pick_first(doc) for doc in docs]
    else:  # argparse choices make this unreachable
        parser.error(f"unknown scorer {args.scorer!r}")
    write_jsonl(args.out, (ranked_list_to_dict(r) for r in ranked))
    print(f"ranked {len(ranked)} papers with {args.scorer} -> {args.out}")
    return 0


def _metric_list(spec: str) -> list[str]:
    return [m.strip() for m in spec.split(",") if m.strip()]


def cmd_eval(parser, args) -> int:
    _require(parser, args, "ranks", "gold")
    ranked = load_rankings(args.ranks)
    gold = load_gold(args.gold)
    domain_by_paper = None
    if args.by_domain:
        _require(parser, args, "corpus")
        domain_by_paper = {d.id: d.domain_label for d in load_corpus(args.corpus)}
    report = evaluate(ranked, gold, _metric_list(args.metrics), domain_by_paper)
    _emit(report.to_dict())
    if args.report_dir:
        from .reporting import write_eval_report

        for path in write_eval_report(report, args.report_dir):
            print(f"report: {path}", file=sys.stderr)
    return 0


def cmd_cross_eval(parser, args) -> int:
    _require(parser, args, "corpus", "gold")
    docs = load_corpus(args.corpus)
    gold = load_gold(args.gold)
    if args.models:
        scorers = {}
        for item in args.models:
            if "=" not in item:
                parser.error(f"--models expects domain=model_path, got {item!r}")
            domain, _, path = item.partition("=")
            model = load_model(path)
            scorers[domain] = NeuralScorer(model.params, model.vocab)
    else:
        by_domain = defaultdict(list)
        for doc in docs:
            by_domain[doc.domain_label].append(doc)
        scorers = {
            domain: TfIdfScorer(fit_tfidf(slice_docs))
            for domain, slice_docs in by_domain.items()
        }
    grid = cross_domain_eval(
        scorers, docs, gold, _metric_list(args.metrics), seed=_seed(args)
    )
    _emit(grid.to_dict())
    if args.report_dir:
        from .reporting import write_cross_domain_report

        for path in write_cross_domain_report(grid, args.report_dir):
            print(f"report: {path}", file=sys.stderr)
    return 0


def cmd_agreement(parser, args) -> int:
    _require(parser, args, "gold", "corpus")
    gold = load_gold(args.gold)
    docs = load_corpus(args.corpus)
    figures_by_paper = {d.id: [f.figure_id for f in d.figures] for d in docs}
    report = compute_agreement(gold, figures_by_paper)
    _emit(report.to_dict())
    return 0


def cmd_attn_sim(parser, args) -> int:
    _require(parser, args, "model_a", "model_b", "pairs")
    model_a = load_model(args.model_a)
    model_b = load_model(args.model_b)
    triplets = load_triplets(args.pairs)
    sample = sample_pairs_from_triplets(triplets, args.n, _seed(args))
    report = attention_cosine(
        NeuralScorer(model_a.params, model_a.vocab),
        NeuralScorer(model_b.params, model_b.vocab),
        sample,
        per_layer=args.per_layer,
    )
    _emit(report.to_dict())
    if args.report_dir:
        from .reporting import write_attention_report

        for path in write_attention_report(report, args.report_dir):
            print(f"report: {path}", file=sys.stderr)
    return 0


def cmd_attn_top(parser, args) -> int:
    _require(parser, args, "model", "text", "caption")
    model = load_model(args.model)
    scorer = NeuralScorer(model.params, model.vocab)
    cost, trace = scorer.score_with_trace(args.text, args.caption)
    pairs = top_attended_cross_pairs(trace, args.k, include_special=args.include_special)
    _emit({"cost": cost, "pairs": [p.to_dict() for p in pairs]})
    return 0


def cmd_serve(parser, args) -> int:
    _require(parser, args, "corpus", "store")
    from .service import build_store, run_server

    docs = load_corpus(args.corpus)
    store = build_store(docs, args.store, ranking_size=args.ranking_size)
    ui_dir: Optional[Path] = Path(args.ui) if args.ui else None
    if ui_dir is None:
        candidate = Path("frontend/dist")
        if candidate.is_dir():
            ui_dir = candidate
    print(f"serving {len(docs)} papers on {args.host}:{args.port} (store: {args.store})")
    run_server(
        store,
        host=args.host,
        port=args.port,
        server_seed=_seed(args),
        images_dir=Path(args.images) if args.images else None,
        ui_dir=ui_dir,
    )
    return 0


# -- parser wiring -----------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file overriding this subcommand's defaults")
    common.add_argument("--seed", type=int, default=None, help="global RNG seed (default 0)")

    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Mine figure-mention training pairs, train and apply "
        "figure-ranking scorers, evaluate against gold annotations, and "
        "serve the annotation UI.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def command(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(handler=handler)
        registry[name] = sp
        return sp

    sp = command("ingest", cmd_ingest, "validate raw documents into a corpus JSONL")
    sp.add_argument("--in", dest="input", help="document JSON/JSONL file or directory")
    sp.add_argument("--out", help="output corpus JSONL")
    sp.add_argument("--min-figures", type=int, default=5)
    sp.add_argument("--diagnostics", help="diagnostics JSON path (default OUT.diagnostics.json)")

    sp = command("pairs", cmd_pairs, "mine self-supervised training triplets")
    sp.add_argument("--corpus", help="corpus JSONL")
    sp.add_argument("--out", help="output triplet JSONL")
    sp.add_argument("--neg-per-pos", type=int, default=1)
    sp.add_argument("--max-pairs", type=int, default=None)

    sp = command("train", cmd_train, "train the neural scorer on triplets")
    sp.add_argument("--pairs", help="triplet JSONL")
    sp.add_argument("--out", help="output model file")
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--batch", type=int, default=32)
    sp.add_argument("--epochs", type=int, default=1)
    sp.add_argument("--dropout", type=float, default=0.2)
    sp.add_argument("--clip", type=float, default=5.0)
    sp.add_argument("--freeze-encoder", action="store_true")
    sp.add_argument("--embed-dim", type=int, default=64)
    sp.add_argument("--layers", type=int, default=2)
    sp.add_argument("--heads", type=int, default=2)
    sp.add_argument("--ff-dim", type=int, default=128)
    sp.add_argument("--max-len", type=int, default=128)
    sp.add_argument("--min-token-freq", type=int, default=2)
    sp.add_argument("--report-dir", help="write training-log CSV and loss-curve figure here")

    sp = command("rank", cmd_rank, "rank every paper's figures against its abstract")
    sp.add_argument("--corpus", help="corpus JSONL")
    sp.add_argument("--out", help="output rankings JSONL")
    sp.add_argument("--scorer", choices=("neural", "tfidf", "random", "first"), default="neural")
    sp.add_argument("--model", help="model file (neural; optional fitted model JSON for tfidf)")

    sp = command("eval", cmd_eval, "score rankings against gold annotations")
    sp.add_argument("--ranks", help="rankings JSONL")
    sp.add_argument("--gold", help="gold JSONL")
    sp.add_argument("--metrics", default="acc@1,acc@3,map,mrr")
    sp.add_argument("--by-domain", action="store_true")
    sp.add_argument("--corpus", help="corpus JSONL (needed for --by-domain)")
    sp.add_argument("--report-dir", help="write metric CSV and bar-chart figure here")

    sp = command("cross-eval", cmd_cross_eval, "train-domain x test-domain evaluation grid")
    sp.add_argument("--corpus", help="corpus JSONL")
    sp.add_argument("--gold", help="gold JSONL")
    sp.add_argument(
        "--models",
        action="append",
        metavar="DOMAIN=MODEL",
        help="per-domain neural model files; omitted: per-domain TF-IDF fits",
    )
    sp.add_argument("--metrics", default="map,mrr")
    sp.add_argument("--report-dir", help="write grid CSV and heatmap figures here")

    sp = command("agreement", cmd_agreement, "inter-annotator agreement (ordinal alpha)")
    sp.add_argument("--gold", help="gold JSONL")
    sp.add_argument("--corpus", help="corpus JSONL (full figure lists per paper)")

    sp = command("attn-sim", cmd_attn_sim, "attention-map cosine similarity between two models")
    sp.add_argument("--model-a", help="first model file")
    sp.add_argument("--model-b", help="second model file")
    sp.add_argument("--pairs", help="triplet JSONL to sample (text, caption) pairs from")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--per-layer", action="store_true")
    sp.add_argument("--report-dir", help="write similarity CSV and bar-chart figure here")

    sp = command("attn-top", cmd_attn_top, "largest cross-segment attention weights for one pair")
    sp.add_argument("--model", help="model file")
    sp.add_argument("--text", help="abstract sentence or paragraph text")
    sp.add_argument("--caption", help="figure caption")
    sp.add_argument("-k", type=int, default=10)
    sp.add_argument("--include-special", action="store_true")

    sp = command("serve", cmd_serve, "run the annotation HTTP service")
    sp.add_argument("--corpus", help="corpus JSONL")
    sp.add_argument("--store", help="append-only annotation event log (JSONL)")
    sp.add_argument("--images", help="directory of figure images served at /images")
    sp.add_argument("--ui", help="built UI directory (default: frontend/dist if present)")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--ranking-size", type=int, default=3)

    return parser, registry


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    sp = registry[args.command]
    try:
        if args.config:
            overrides = load_config_file(Path(args.config))
            known = {action.dest for action in sp._actions}
            unknown = sorted(set(overrides) - known)
            if unknown:
                sp.error(
                    f"config keys not recognized by {args.command!r}: {', '.join(unknown)}"
                )
            sp.set_defaults(**overrides)
            args = parser.parse_args(argv)
        return args.handler(sp, args)
    except (ValueError, OSError, ScoringError, TrainingDiverged) as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
