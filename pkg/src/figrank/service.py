"""HTTP annotation service: session views, durable submissions, gold export.

JSON API under /api plus static serving for figure images and the built
browser UI.  Annotator identity is a self-declared string; sessions are
isolated by deriving the figure-shuffle seed from (server seed, annotator).
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Optional, Sequence

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agreement import compute_agreement
from .corpus import Document, GoldAnnotation
from .store import AnnotationError, AnnotationStore, session_seed_for, shuffle_figures


class AnnotationBody(BaseModel):
    annotator_id: str
    ranking: list[str]


class SkipBody(BaseModel):
    annotator_id: str


def create_app(
    store: AnnotationStore,
    server_seed: int = 0,
    images_dir: Optional[Path] = None,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="figrank annotation service")
    docs = store.documents

    def _doc(paper_id: str) -> Document:
        doc = docs.get(paper_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"unknown paper {paper_id!r}")
        return doc

    @app.get("/api/papers")
    def list_papers(annotator: Optional[str] = None) -> list[dict]:
        entries = []
        for paper_id in sorted(docs):
            doc = docs[paper_id]
            n_annotators = store.annotator_count(paper_id)
            entry = {
                "paper_id": paper_id,
                "title": doc.title,
                "n_figures": len(doc.figures),
                "annotation_status": n_annotators,
            }
            if annotator is not None:
                entry["annotated_by_me"] = (
                    store.latest_annotation(paper_id, annotator) is not None
                )
            entries.append(entry)
        # unannotated first; for a known annotator, "unannotated" means by them
        if annotator is not None:
            entries.sort(key=lambda e: (e["annotated_by_me"], e["paper_id"]))
        else:
            entries.sort(key=lambda e: (e["annotation_status"] > 0, e["paper_id"]))
        return entries

    @app.get("/api/papers/{paper_id}")
    def paper_view(paper_id: str, annotator: str = Query(min_length=1)) -> dict:
        doc = _doc(paper_id)
        view = shuffle_figures(doc, session_seed_for(annotator, server_seed))
        prior = store.latest_annotation(paper_id, annotator)
        payload = view.to_dict()
        payload["prior_ranking"] = list(prior.ranking) if prior is not None else None
        payload["required_ranking_size"] = store.required_ranking_size(paper_id)
        return payload

    @app.post("/api/papers/{paper_id}/annotations", status_code=201)
    def submit_annotation(paper_id: str, body: AnnotationBody) -> dict:
        _doc(paper_id)
        annotation = GoldAnnotation(
            paper_id=paper_id,
            annotator_id=body.annotator_id,
            ranking=tuple(body.ranking),
            timestamp=time.time(),
        )
        try:
            offset = store.record_annotation(annotation)
        except AnnotationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"status": "recorded", "offset": offset}

    @app.post("/api/papers/{paper_id}/skip", status_code=201)
    def submit_skip(paper_id: str, body: SkipBody) -> dict:
        _doc(paper_id)
        try:
            offset = store.record_skip(paper_id, body.annotator_id)
        except AnnotationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"status": "skipped", "offset": offset}

    @app.get("/api/export")
    def export() -> PlainTextResponse:
        return PlainTextResponse(
            store.export_gold_lines(), media_type="application/x-ndjson"
        )

    @app.get("/api/coverage")
    def coverage() -> dict:
        _gold, stats = store.export_gold()
        return stats.to_dict()

    @app.get("/api/agreement")
    def agreement() -> dict:
        gold, stats = store.export_gold()
        figures_by_paper = {
            doc.id: [fig.figure_id for fig in doc.figures] for doc in docs.values()
        }
        payload: dict = {"n_doubly_annotated": stats.papers_double}
        try:
            payload["alpha"] = compute_agreement(gold, figures_by_paper).alpha
        except ValueError as exc:
            payload["alpha"] = None
            payload["detail"] = str(exc)
        return payload

    if images_dir is not None:
        app.mount("/images", StaticFiles(directory=str(images_dir)), name="images")
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def run_server(
    store: AnnotationStore,
    host: str = "127.0.0.1",
    port: int = 8080,
    server_seed: int = 0,
    images_dir: Optional[Path] = None,
    ui_dir: Optional[Path] = None,
) -> None:
    import uvicorn

    app = create_app(
        store, server_seed=server_seed, images_dir=images_dir, ui_dir=ui_dir
    )
    uvicorn.run(app, host=host, port=port)


def build_store(
    documents: Sequence[Document], store_path: Path | str, ranking_size: int = 3
) -> AnnotationStore:
    return AnnotationStore(store_path, documents, ranking_size=ranking_size)
