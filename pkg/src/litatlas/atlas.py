"""Map artifacts and compositional queries.

Builds the three navigable views (topic map, caption cluster plot, elemental
overlays), places group labels at median positions, profiles labels against
the four ontology axes, and evaluates boolean filter expressions over
topic x chemistry x phrase x caption-type.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .chemparse import DocumentElementMatrix
from .corpus import CAPTION_ID_SEP, Caption, Corpus
from .embed import Embedding2D
from .errors import AtlasError, FilterSyntaxError, UnknownNameError
from .topics import TopicModel, assign_topic


# ---------------------------------------------------------------------------
# Caption labeling


@dataclass(frozen=True)
class LabelRule:
    label: str
    patterns: tuple[str, ...]
    priority: int

    def __post_init__(self):
        if not self.patterns:
            raise AtlasError(f"rule {self.label!r} has no patterns")


def load_rules(path: str | Path | None = None) -> list[LabelRule]:
    """Rule table sorted by descending priority; bundled default when no path.

    The bundled table reconstructs the usual image-type keywords of this
    domain and is not canonical; operators are expected to tune it.
    """
    if path is None:
        text = resources.files("litatlas.data").joinpath("caption_rules.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text)
    rules = [LabelRule(r["label"], tuple(r["patterns"]), int(r["priority"])) for r in raw]
    seen = set()
    for r in rules:
        key = (r.label, r.priority)
        if key in seen:
            raise AtlasError(f"duplicate rule (label, priority): {key}")
        seen.add(key)
    return sorted(rules, key=lambda r: (-r.priority, r.label))


def _pattern_regex(pattern: str) -> re.Pattern:
    # Case-insensitive match anchored at a word start, so "anneal" catches
    # "annealed" but "ple" does not fire inside "complex".
    return re.compile(r"\b" + re.escape(pattern.lower()), re.IGNORECASE)


def label_caption(caption: Caption, rules: list[LabelRule]) -> str | None:
    """First rule (highest priority) with any matching pattern wins."""
    text = caption.text
    for rule in rules:
        for pattern in rule.patterns:
            if _pattern_regex(pattern).search(text):
                return rule.label
    return None


def label_captions(corpus: Corpus, rules: list[LabelRule]) -> dict[str, str | None]:
    """Label every caption in the corpus; unmatched captions map to None."""
    return {c.caption_id: label_caption(c, rules) for c in corpus.captions()}


# ---------------------------------------------------------------------------
# Map documents


@dataclass(frozen=True)
class MapPoint:
    item_id: str
    x: float
    y: float
    group: str | None


@dataclass(frozen=True)
class PlacedLabel:
    text: str
    x: float
    y: float
    count: int


@dataclass
class MapDocument:
    map_type: str  # "lda" | "ccp"
    points: list[MapPoint]
    placed_labels: list[PlacedLabel]
    provenance: dict = field(default_factory=dict)

    def point_ids(self) -> list[str]:
        return [p.item_id for p in self.points]


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def place_labels(points: list[MapPoint]) -> list[PlacedLabel]:
    """One label per group at the median (x, y) of its members.

    An even member count takes the mean of the two central order statistics.
    Ungrouped points (group None) are skipped. Output is ordered by first
    appearance of the group.
    """
    groups: dict[str, list[MapPoint]] = {}
    for p in points:
        if p.group is not None:
            groups.setdefault(p.group, []).append(p)
    return [
        PlacedLabel(
            text=group,
            x=_median([p.x for p in members]),
            y=_median([p.y for p in members]),
            count=len(members),
        )
        for group, members in groups.items()
    ]


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _hash_json(obj) -> str:
    return _hash_bytes(json.dumps(obj, sort_keys=True, ensure_ascii=False).encode("utf-8"))


def model_hash(model: TopicModel) -> str:
    h = hashlib.sha256()
    h.update(json.dumps([model.K, model.alpha, model.beta, model.seed, model.passes]).encode())
    h.update("\x00".join(model.vocab).encode("utf-8"))
    h.update(model.phi.tobytes())
    h.update(model.theta.tobytes())
    return h.hexdigest()


def embedding_hash(embedding: Embedding2D) -> str:
    h = hashlib.sha256()
    h.update(embedding.coords.tobytes())
    h.update(json.dumps(embedding.config, sort_keys=True).encode("utf-8"))
    return h.hexdigest()


def topic_group_name(topic: int, topic_names: dict[int, str] | None) -> str:
    if topic_names and topic in topic_names:
        return topic_names[topic]
    return str(topic)


def build_lda_map(
    embedding: Embedding2D,
    doc_ids: list[str],
    model: TopicModel,
    topic_names: dict[int, str] | None = None,
) -> MapDocument:
    """Topic map: one point per document, grouped by its assigned topic.

    Groups carry the configured topic name, falling back to the topic id.
    """
    if not (embedding.n == len(doc_ids) == model.n_docs):
        raise AtlasError(
            f"alignment mismatch: embedding {embedding.n}, ids {len(doc_ids)}, model {model.n_docs}"
        )
    points = [
        MapPoint(
            item_id=doc_ids[i],
            x=float(embedding.coords[i, 0]),
            y=float(embedding.coords[i, 1]),
            group=topic_group_name(assign_topic(model, i), topic_names),
        )
        for i in range(embedding.n)
    ]
    provenance = {
        "model": model_hash(model),
        "embedding": embedding_hash(embedding),
        "topic_names": _hash_json({str(k): v for k, v in (topic_names or {}).items()}),
    }
    return MapDocument("lda", points, place_labels(points), provenance)


def build_ccp_map(
    embedding: Embedding2D,
    caption_ids: list[str],
    labels: dict[str, str | None],
) -> MapDocument:
    """Caption cluster plot: unlabeled captions stay as ungrouped points."""
    if embedding.n != len(caption_ids):
        raise AtlasError(
            f"alignment mismatch: embedding {embedding.n}, caption ids {len(caption_ids)}"
        )
    points = [
        MapPoint(
            item_id=cid,
            x=float(embedding.coords[i, 0]),
            y=float(embedding.coords[i, 1]),
            group=labels.get(cid),
        )
        for i, cid in enumerate(caption_ids)
    ]
    provenance = {
        "embedding": embedding_hash(embedding),
        "labels": _hash_json({k: labels.get(k) for k in caption_ids}),
    }
    return MapDocument("ccp", points, place_labels(points), provenance)


def export_map(map_doc: MapDocument, path: str | Path) -> None:
    obj = {
        "map_type": map_doc.map_type,
        "points": [
            {"id": p.item_id, "x": p.x, "y": p.y, "group": p.group} for p in map_doc.points
        ],
        "labels": [
            {"text": l.text, "x": l.x, "y": l.y, "count": l.count} for l in map_doc.placed_labels
        ],
        "provenance": map_doc.provenance,
    }
    try:
        Path(path).write_text(
            json.dumps(obj, ensure_ascii=False, separators=(",", ":")), encoding="utf-8"
        )
    except OSError as exc:
        raise AtlasError(f"cannot write map to {path}: {exc}") from exc


def load_map(path: str | Path) -> MapDocument:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return MapDocument(
        map_type=obj["map_type"],
        points=[MapPoint(p["id"], p["x"], p["y"], p.get("group")) for p in obj["points"]],
        placed_labels=[PlacedLabel(l["text"], l["x"], l["y"], l["count"]) for l in obj["labels"]],
        provenance=obj.get("provenance", {}),
    )


# ---------------------------------------------------------------------------
# Axis profile


@dataclass(frozen=True)
class AxisEntry:
    label: str
    distances: dict[str, float]
    nearest: str
    boundary: bool


@dataclass(frozen=True)
class AxisProfile:
    anchors: dict[str, tuple[float, float]]
    entries: list[AxisEntry]


DEFAULT_AXIS_NAMES = ("Mechanical", "Microstructural", "Optical", "Thermodynamic")


def default_axis_anchors(points: list[MapPoint]) -> dict[str, tuple[float, float]]:
    """Anchors at the corners of the point bounding box, names in fixed order:
    Mechanical (min,min), Microstructural (max,min), Optical (min,max),
    Thermodynamic (max,max)."""
    if not points:
        raise AtlasError("cannot derive anchors from an empty point set")
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    corners = [(min(xs), min(ys)), (max(xs), min(ys)), (min(xs), max(ys)), (max(xs), max(ys))]
    return dict(zip(DEFAULT_AXIS_NAMES, corners))


def axis_profile(
    placed_labels: list[PlacedLabel],
    anchors: dict[str, tuple[float, float]],
    boundary_rel_tol: float = 0.05,
) -> AxisProfile:
    """Euclidean distance of every label to each anchor, with nearest-axis
    assignment (lowest name wins ties) and a boundary flag when the two
    smallest distances are within ``boundary_rel_tol`` relatively."""
    if len(anchors) != 4:
        raise AtlasError(f"expected 4 axis anchors, got {len(anchors)}")
    seen_points = set(anchors.values())
    if len(seen_points) != len(anchors):
        raise AtlasError("axis anchors must be distinct points")
    entries = []
    for label in placed_labels:
        distances = {
            name: ((label.x - ax) ** 2 + (label.y - ay) ** 2) ** 0.5
            for name, (ax, ay) in anchors.items()
        }
        ranked = sorted(distances.items(), key=lambda kv: (kv[1], kv[0]))
        nearest, d1 = ranked[0]
        d2 = ranked[1][1]
        boundary = (d2 - d1) <= boundary_rel_tol * max(d1, 1e-12)
        entries.append(AxisEntry(label.text, distances, nearest, boundary))
    return AxisProfile(anchors=dict(anchors), entries=entries)


# ---------------------------------------------------------------------------
# Elemental overlays


def element_overlay(
    map_doc: MapDocument,
    markers: DocumentElementMatrix,
    elements: set[str],
    mode: str = "all",
) -> set[str]:
    """Item ids whose (parent) document carries the requested element markers.

    On the topic map items are documents; on the caption cluster plot they are
    captions, tested through their parent document. ``mode`` is "all" (every
    element present) or "any" (at least one).
    """
    if mode not in ("all", "any"):
        raise AtlasError(f"overlay mode must be 'all' or 'any', got {mode!r}")
    for sym in elements:
        if sym not in markers.elements:
            raise AtlasError(f"unknown element {sym!r}")
    combine = all if mode == "all" else any
    selected = set()
    for p in map_doc.points:
        doc_id = p.item_id
        if map_doc.map_type == "ccp":
            doc_id = doc_id.rsplit(CAPTION_ID_SEP, 1)[0]
        if combine(markers.has(doc_id, sym) for sym in elements):
            selected.add(p.item_id)
    return selected


# ---------------------------------------------------------------------------
# Filter expressions


@dataclass(frozen=True)
class TopicTerm:
    name: str


@dataclass(frozen=True)
class ElementTerm:
    symbol: str


@dataclass(frozen=True)
class PhraseTerm:
    text: str


@dataclass(frozen=True)
class CaptionTerm:
    name: str


@dataclass(frozen=True)
class MatchAll:
    pass


@dataclass(frozen=True)
class NotExpr:
    inner: "FilterExpr"


@dataclass(frozen=True)
class AndExpr:
    parts: tuple["FilterExpr", ...]


@dataclass(frozen=True)
class OrExpr:
    parts: tuple["FilterExpr", ...]


FilterExpr = TopicTerm | ElementTerm | PhraseTerm | CaptionTerm | MatchAll | NotExpr | AndExpr | OrExpr

_NAME_CHARS = re.compile(r"[A-Za-z0-9_+\-.]+")


def _tokenize_filter(s: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
            continue
        if c == "(":
            tokens.append(("LPAREN", "(", i))
            i += 1
        elif c == ")":
            tokens.append(("RPAREN", ")", i))
            i += 1
        elif c == "*":
            tokens.append(("STAR", "*", i))
            i += 1
        elif s.startswith("phrase:", i):
            j = i + len("phrase:")
            if j >= n or s[j] != '"':
                raise FilterSyntaxError("phrase term requires a quoted string", j)
            end = s.find('"', j + 1)
            if end == -1:
                raise FilterSyntaxError("unterminated quoted phrase", j)
            tokens.append(("PHRASE", s[j + 1 : end], i))
            i = end + 1
        else:
            matched = False
            for prefix, kind in (("topic:", "TOPIC"), ("element:", "ELEMENT"), ("caption:", "CAPTION")):
                if s.startswith(prefix, i):
                    m = _NAME_CHARS.match(s, i + len(prefix))
                    if not m:
                        raise FilterSyntaxError(f"{prefix} requires a name", i + len(prefix))
                    tokens.append((kind, m.group(), i))
                    i = m.end()
                    matched = True
                    break
            if matched:
                continue
            m = _NAME_CHARS.match(s, i)
            if m and m.group() in ("AND", "OR", "NOT"):
                tokens.append((m.group(), m.group(), i))
                i = m.end()
            else:
                raise FilterSyntaxError(f"unexpected character {c!r}", i)
    return tokens


class _FilterParser:
    def __init__(self, s: str):
        self.source = s
        self.tokens = _tokenize_filter(s)
        self.pos = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise FilterSyntaxError("unexpected end of expression", len(self.source))
        self.pos += 1
        return tok

    def parse(self) -> FilterExpr:
        expr = self.parse_or()
        leftover = self.peek()
        if leftover is not None:
            raise FilterSyntaxError(f"unexpected token {leftover[1]!r}", leftover[2])
        return expr

    def parse_or(self) -> FilterExpr:
        parts = [self.parse_and()]
        while (tok := self.peek()) is not None and tok[0] == "OR":
            self.take()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else OrExpr(tuple(parts))

    def parse_and(self) -> FilterExpr:
        parts = [self.parse_not()]
        while (tok := self.peek()) is not None and tok[0] == "AND":
            self.take()
            parts.append(self.parse_not())
        return parts[0] if len(parts) == 1 else AndExpr(tuple(parts))

    def parse_not(self) -> FilterExpr:
        tok = self.peek()
        if tok is None:
            raise FilterSyntaxError("unexpected end of expression", len(self.source))
        if tok[0] == "NOT":
            self.take()
            return NotExpr(self.parse_not())
        if tok[0] == "LPAREN":
            self.take()
            inner = self.parse_or()
            closing = self.peek()
            if closing is None or closing[0] != "RPAREN":
                pos = closing[2] if closing else len(self.source)
                raise FilterSyntaxError("expected ')'", pos)
            self.take()
            return inner
        return self.parse_term()

    def parse_term(self) -> FilterExpr:
        kind, value, pos = self.take()
        if kind == "STAR":
            return MatchAll()
        if kind == "TOPIC":
            return TopicTerm(value)
        if kind == "ELEMENT":
            return ElementTerm(value)
        if kind == "CAPTION":
            return CaptionTerm(value)
        if kind == "PHRASE":
            return PhraseTerm(value)
        raise FilterSyntaxError(f"unexpected token {value!r}", pos)


def parse_filter(s: str) -> FilterExpr:
    """Parse a boolean filter expression; NOT binds tighter than AND than OR."""
    return _FilterParser(s).parse()


def _walk(expr: FilterExpr):
    yield expr
    if isinstance(expr, NotExpr):
        yield from _walk(expr.inner)
    elif isinstance(expr, (AndExpr, OrExpr)):
        for part in expr.parts:
            yield from _walk(part)


def validate_filter(
    expr: FilterExpr,
    topics: set[str],
    elements: set[str],
    labels: set[str],
) -> None:
    """Raise UnknownNameError when the expression references missing names."""
    for node in _walk(expr):
        if isinstance(node, TopicTerm) and node.name not in topics:
            raise UnknownNameError(f"unknown topic {node.name!r}")
        if isinstance(node, ElementTerm) and node.symbol not in elements:
            raise UnknownNameError(f"unknown element {node.symbol!r}")
        if isinstance(node, CaptionTerm) and node.name not in labels:
            raise UnknownNameError(f"unknown caption label {node.name!r}")


@dataclass(frozen=True)
class QueryResult:
    doc_ids: list[str]
    caption_ids: list[str]


def query(
    corpus: Corpus,
    model: TopicModel,
    markers: DocumentElementMatrix,
    caption_labels: dict[str, str | None],
    expr: FilterExpr,
    topic_names: dict[int, str] | None = None,
    known_labels: set[str] | None = None,
) -> QueryResult:
    """Evaluate a filter expression over the loaded artifacts.

    Documents match topic terms through their assigned topic (by configured
    name or numeric id), element terms through the marker matrix, phrase
    terms by case-insensitive substring over the abstract, and caption terms
    when at least one of their captions carries the label. Caption ids cover
    all captions of matched documents, narrowed to the caption labels the
    expression mentions (if any).
    """
    n = len(corpus)
    if model.n_docs != n or len(markers.doc_ids) != n:
        raise AtlasError("corpus, model and markers are not aligned")

    names_by_topic = {k: topic_group_name(k, topic_names) for k in range(model.K)}
    topic_inventory = set(names_by_topic.values()) | {str(k) for k in range(model.K)}
    label_inventory = (known_labels or set()) | {
        v for v in caption_labels.values() if v is not None
    }
    validate_filter(expr, topic_inventory, set(markers.elements), label_inventory)

    doc_topic = [assign_topic(model, i) for i in range(n)]
    index_of = {doc_id: i for i, doc_id in enumerate(corpus.doc_ids())}
    all_docs = frozenset(range(n))

    def evaluate(node: FilterExpr) -> frozenset[int]:
        if isinstance(node, MatchAll):
            return all_docs
        if isinstance(node, TopicTerm):
            wanted = {
                k for k in range(model.K) if names_by_topic[k] == node.name or str(k) == node.name
            }
            return frozenset(i for i in range(n) if doc_topic[i] in wanted)
        if isinstance(node, ElementTerm):
            return frozenset(index_of[d] for d in markers.docs_with(node.symbol))
        if isinstance(node, PhraseTerm):
            needle = node.text.lower()
            return frozenset(
                i for i, doc in enumerate(corpus.documents) if needle in doc.abstract.lower()
            )
        if isinstance(node, CaptionTerm):
            return frozenset(
                i
                for i, doc in enumerate(corpus.documents)
                if any(caption_labels.get(c.caption_id) == node.name for c in doc.captions)
            )
        if isinstance(node, NotExpr):
            return all_docs - evaluate(node.inner)
        if isinstance(node, AndExpr):
            out = all_docs
            for part in node.parts:
                out &= evaluate(part)
            return out
        if isinstance(node, OrExpr):
            out = frozenset()
            for part in node.parts:
                out |= evaluate(part)
            return out
        raise AtlasError(f"unknown filter node {node!r}")

    matched = sorted(evaluate(expr))
    mentioned = {node.name for node in _walk(expr) if isinstance(node, CaptionTerm)}
    doc_ids = [corpus.documents[i].doc_id for i in matched]
    caption_ids = []
    for i in matched:
        for c in corpus.documents[i].captions:
            if not mentioned or caption_labels.get(c.caption_id) in mentioned:
                caption_ids.append(c.caption_id)
    return QueryResult(doc_ids=doc_ids, caption_ids=caption_ids)
