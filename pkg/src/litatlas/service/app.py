"""Read-only HTTP service over a pipeline artifact directory.

All analytics happen at build time; every endpoint is a pure view over the
immutable loaded artifacts, so concurrent reads need no locking. Re-analysis
goes through the CLI and a service restart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import atlas, topics
from ..chemparse import DocumentElementMatrix, load_markers
from ..corpus import Corpus, load_corpus
from ..errors import AtlasError, FilterSyntaxError, UnknownNameError
from ..topics import TopicModel, load_topic_model
from . import schemas

REQUIRED_ARTIFACTS = (
    "corpus.jsonl",
    "lda.json",
    "map_lda.json",
    "map_ccp.json",
    "markers.csv",
    "caption_labels.json",
)


@dataclass
class ArtifactState:
    corpus: Corpus
    model: TopicModel
    map_lda: atlas.MapDocument
    map_ccp: atlas.MapDocument
    markers: DocumentElementMatrix
    caption_labels: dict[str, str | None]
    rules: list[atlas.LabelRule]
    topic_names: dict[int, str]

    @property
    def known_labels(self) -> set[str]:
        labels = {r.label for r in self.rules}
        labels.update(v for v in self.caption_labels.values() if v is not None)
        return labels


def load_artifacts(artifact_dir: str | Path) -> ArtifactState:
    """Load everything the service exposes; error lists any missing files."""
    root = Path(artifact_dir)
    missing = [name for name in REQUIRED_ARTIFACTS if not (root / name).exists()]
    if missing:
        raise AtlasError(f"artifact directory {root} is missing: {', '.join(missing)}")
    corpus = load_corpus(root / "corpus.jsonl")
    model = load_topic_model(root / "lda.json")
    map_lda = atlas.load_map(root / "map_lda.json")
    map_ccp = atlas.load_map(root / "map_ccp.json")
    markers = load_markers(root / "markers.csv")
    payload = json.loads((root / "caption_labels.json").read_text(encoding="utf-8"))
    rules = [
        atlas.LabelRule(r["label"], tuple(r["patterns"]), int(r["priority"]))
        for r in payload.get("rules", [])
    ]
    # The topic map's groups already carry the configured display names;
    # recover the id -> name mapping from the assignment of each point.
    topic_names: dict[int, str] = {}
    for i, point in enumerate(map_lda.points):
        if point.group is not None:
            topic_names.setdefault(topics.assign_topic(model, i), point.group)
    return ArtifactState(
        corpus=corpus,
        model=model,
        map_lda=map_lda,
        map_ccp=map_ccp,
        markers=markers,
        caption_labels=payload.get("labels", {}),
        rules=rules,
        topic_names=topic_names,
    )


# --- view builders: the service returns exactly what these produce ----------


def map_view(map_doc: atlas.MapDocument) -> dict:
    return {
        "map_type": map_doc.map_type,
        "points": [
            {"id": p.item_id, "x": p.x, "y": p.y, "group": p.group} for p in map_doc.points
        ],
        "labels": [
            {"text": l.text, "x": l.x, "y": l.y, "count": l.count} for l in map_doc.placed_labels
        ],
        "provenance": map_doc.provenance,
    }


def stats_view(state: ArtifactState) -> dict:
    marked = sum(1 for sym in state.markers.elements if state.markers.docs_with(sym))
    return {
        "documents": len(state.corpus),
        "captions": len(state.corpus.captions()),
        "topics": state.model.K,
        "labeled_captions": sum(1 for v in state.caption_labels.values() if v is not None),
        "elements_marked": marked,
    }


def topics_view(state: ArtifactState, top_n: int = 10) -> list[dict]:
    out = []
    for k in range(state.model.K):
        n = min(top_n, len(state.model.vocab))
        words = topics.top_words(state.model, k, n)
        out.append(
            {
                "topic": k,
                "name": atlas.topic_group_name(k, state.topic_names),
                "words": [{"term": t, "p": p} for t, p in words],
            }
        )
    return out


def labels_view(state: ArtifactState) -> dict:
    counts: dict[str, int] = {r.label: 0 for r in state.rules}
    for v in state.caption_labels.values():
        if v is not None:
            counts[v] = counts.get(v, 0) + 1
    return {
        "rules": [
            {"label": r.label, "priority": r.priority, "patterns": list(r.patterns)}
            for r in state.rules
        ],
        "counts": counts,
    }


def doc_view(state: ArtifactState, doc_id: str) -> dict | None:
    index = {d.doc_id: i for i, d in enumerate(state.corpus.documents)}
    i = index.get(doc_id)
    if i is None:
        return None
    doc = state.corpus.documents[i]
    topic = topics.assign_topic(state.model, i)
    elements = sorted(sym for sym in state.markers.elements if state.markers.has(doc_id, sym))
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
        "journal": doc.journal,
        "authors": list(doc.authors),
        "captions": [
            {
                "figure": c.figure_ordinal,
                "text": c.text,
                "label": state.caption_labels.get(c.caption_id),
            }
            for c in doc.captions
        ],
        "relevant": doc.relevant,
        "topic": topic,
        "topic_name": atlas.topic_group_name(topic, state.topic_names),
        "elements": elements,
    }


def overlay_view(state: ArtifactState, map_name: str, mode: str, elements: set[str]) -> dict:
    map_doc = state.map_lda if map_name == "lda" else state.map_ccp
    ids = atlas.element_overlay(map_doc, state.markers, elements, mode)
    return {
        "map": map_name,
        "mode": mode,
        "elements": sorted(elements),
        "item_ids": sorted(ids),
    }


def query_view(state: ArtifactState, expr_text: str) -> dict:
    expr = atlas.parse_filter(expr_text)
    result = atlas.query(
        state.corpus,
        state.model,
        state.markers,
        state.caption_labels,
        expr,
        topic_names=state.topic_names,
        known_labels=state.known_labels,
    )
    return {"doc_ids": result.doc_ids, "caption_ids": result.caption_ids}


def create_app(artifact_dir: str | Path, frontend_dir: str | Path | None = None) -> FastAPI:
    state = load_artifacts(artifact_dir)
    app = FastAPI(title="litatlas", docs_url="/api/docs", openapi_url="/api/openapi.json")

    def error(status: int, message: str, position: int | None = None) -> JSONResponse:
        body = {"error": message}
        if position is not None:
            body["position"] = position
        return JSONResponse(status_code=status, content=body)

    @app.get("/stats", response_model=schemas.StatsResponse)
    def get_stats():
        return stats_view(state)

    @app.get("/map/{map_name}", response_model=schemas.MapResponse)
    def get_map(map_name: str):
        if map_name not in ("lda", "ccp"):
            return error(404, f"unknown map {map_name!r}")
        return map_view(state.map_lda if map_name == "lda" else state.map_ccp)

    @app.get("/overlay/element/{symbol}", response_model=schemas.OverlayResponse)
    def get_overlay(symbol: str, map: str = "lda", mode: str = "all", elements: str = ""):
        if map not in ("lda", "ccp"):
            return error(400, f"map must be 'lda' or 'ccp', got {map!r}")
        if mode not in ("all", "any"):
            return error(400, f"mode must be 'all' or 'any', got {mode!r}")
        selected = {symbol} | {e for e in elements.split(",") if e}
        try:
            return overlay_view(state, map, mode, selected)
        except AtlasError as exc:
            return error(400, str(exc))

    @app.post("/query", response_model=schemas.QueryResponse)
    def post_query(request: schemas.QueryRequest):
        try:
            return query_view(state, request.expr)
        except FilterSyntaxError as exc:
            return error(400, str(exc), position=exc.position)
        except UnknownNameError as exc:
            return error(400, str(exc))

    @app.get("/doc/{doc_id:path}", response_model=schemas.DocumentResponse)
    def get_doc(doc_id: str):
        view = doc_view(state, doc_id)
        if view is None:
            return error(404, f"unknown document {doc_id!r}")
        return view

    @app.get("/topics", response_model=list[schemas.TopicResponse])
    def get_topics():
        return topics_view(state)

    @app.get("/labels", response_model=schemas.LabelsResponse)
    def get_labels():
        return labels_view(state)

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="explorer")

    return app
