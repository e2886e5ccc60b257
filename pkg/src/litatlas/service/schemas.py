"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel


class PointModel(BaseModel):
    id: str
    x: float
    y: float
    group: str | None = None


class PlacedLabelModel(BaseModel):
    text: str
    x: float
    y: float
    count: int


class MapResponse(BaseModel):
    map_type: str
    points: list[PointModel]
    labels: list[PlacedLabelModel]
    provenance: dict


class StatsResponse(BaseModel):
    documents: int
    captions: int
    topics: int
    labeled_captions: int
    elements_marked: int


class QueryRequest(BaseModel):
    expr: str


class QueryResponse(BaseModel):
    doc_ids: list[str]
    caption_ids: list[str]


class OverlayResponse(BaseModel):
    map: str
    mode: str
    elements: list[str]
    item_ids: list[str]


class TopicWordModel(BaseModel):
    term: str
    p: float


class TopicResponse(BaseModel):
    topic: int
    name: str
    words: list[TopicWordModel]


class RuleModel(BaseModel):
    label: str
    priority: int
    patterns: list[str]


class LabelsResponse(BaseModel):
    rules: list[RuleModel]
    counts: dict[str, int]


class CaptionView(BaseModel):
    figure: int
    text: str
    label: str | None = None


class DocumentResponse(BaseModel):
    doc_id: str
    title: str
    abstract: str
    journal: str | None = None
    authors: list[str] = []
    captions: list[CaptionView] = []
    relevant: bool | None = None
    topic: int
    topic_name: str
    elements: list[str] = []


class ErrorResponse(BaseModel):
    error: str
    position: int | None = None
