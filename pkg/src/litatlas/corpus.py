"""Article-record ingestion: XML records in, line-delimited JSON corpora in/out."""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError, DuplicateIdError, RecordParseError, RecordSchemaError

_DOI_PREFIX = re.compile(r"^(doi:)", re.IGNORECASE)
_TAG_STRIP = re.compile(r"<[^>]+>")
_WS = re.compile(r"\s+")

CAPTION_ID_SEP = "::"


def normalize_doc_id(raw: str) -> str:
    """Trim whitespace and lowercase a leading ``doi:`` scheme prefix."""
    doc_id = raw.strip()
    return _DOI_PREFIX.sub(lambda m: m.group(1).lower(), doc_id)


def flatten_text(raw: str) -> str:
    """Strip residual markup tags and collapse whitespace to single spaces."""
    return _WS.sub(" ", _TAG_STRIP.sub(" ", raw)).strip()


@dataclass(frozen=True)
class Caption:
    """One figure caption; ``caption_id`` is ``doc_id + separator + ordinal``."""

    caption_id: str
    text: str
    figure_ordinal: int

    def __post_init__(self):
        if not self.text:
            raise CorpusError(f"caption {self.caption_id!r} has empty text")
        if self.figure_ordinal < 1:
            raise CorpusError(f"caption {self.caption_id!r} has ordinal < 1")

    @property
    def doc_id(self) -> str:
        return self.caption_id.rsplit(CAPTION_ID_SEP, 1)[0]


def make_caption_id(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}{CAPTION_ID_SEP}{ordinal}"


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str
    journal: str | None = None
    authors: tuple[str, ...] = ()
    captions: tuple[Caption, ...] = ()
    relevant: bool | None = None

    def __post_init__(self):
        if not self.doc_id:
            raise CorpusError("document has empty doc_id")
        if not self.abstract and not self.captions:
            raise CorpusError(f"document {self.doc_id!r} has neither abstract nor captions")
        ordinals = [c.figure_ordinal for c in self.captions]
        if ordinals != list(range(1, len(ordinals) + 1)):
            raise CorpusError(f"document {self.doc_id!r} caption ordinals are not 1..n: {ordinals}")


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    source_manifest: list[dict] = field(default_factory=list)

    def __post_init__(self):
        seen: set[str] = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise DuplicateIdError(doc.doc_id)
            seen.add(doc.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def captions(self) -> list[Caption]:
        """All captions in corpus order."""
        return [c for d in self.documents for c in d.captions]


def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.splitlines(keepends=True)
    prefix = "".join(lines[: line - 1])
    return len(prefix.encode("utf-8")) + column


def parse_article_record(xml_text: str) -> Document:
    """Parse one flat XML article record into a Document.

    Unknown elements are ignored; abstract and caption text is flattened to
    plain text. Raises RecordParseError (with byte offset) on malformed
    markup and RecordSchemaError when required fields are missing.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise RecordParseError(str(exc), offset=_byte_offset(xml_text, line, column)) from exc

    raw_id = root.findtext("id")
    if raw_id is None or not raw_id.strip():
        raise RecordSchemaError("record is missing <id>")
    doc_id = normalize_doc_id(raw_id)

    captions = []
    figures = root.find("figures")
    if figures is not None:
        for pos, cap in enumerate(figures.findall("caption"), start=1):
            ordinal = int(cap.get("n", pos))
            text = flatten_text("".join(cap.itertext()))
            captions.append(Caption(make_caption_id(doc_id, ordinal), text, ordinal))

    authors = ()
    author_el = root.find("authors")
    if author_el is not None:
        authors = tuple(a.text.strip() for a in author_el.findall("author") if a.text and a.text.strip())

    journal = root.findtext("journal")
    return Document(
        doc_id=doc_id,
        title=flatten_text(root.findtext("title") or ""),
        abstract=flatten_text(root.findtext("abstract") or ""),
        journal=journal.strip() if journal else None,
        authors=authors,
        captions=tuple(captions),
    )


def _doc_from_json(obj: dict, line_no: int) -> Document:
    try:
        doc_id = normalize_doc_id(obj["doc_id"])
        captions = tuple(
            Caption(make_caption_id(doc_id, c["figure"]), c["text"], c["figure"])
            for c in obj.get("captions", ())
        )
        return Document(
            doc_id=doc_id,
            title=obj.get("title", ""),
            abstract=obj.get("abstract", ""),
            journal=obj.get("journal"),
            authors=tuple(obj.get("authors", ())),
            captions=captions,
            relevant=obj.get("relevant"),
        )
    except (KeyError, TypeError, CorpusError) as exc:
        raise CorpusError(f"line {line_no}: invalid document record: {exc}") from exc


def _doc_to_json(doc: Document) -> dict:
    obj: dict = {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
    }
    if doc.journal is not None:
        obj["journal"] = doc.journal
    if doc.authors:
        obj["authors"] = list(doc.authors)
    obj["captions"] = [{"figure": c.figure_ordinal, "text": c.text} for c in doc.captions]
    if doc.relevant is not None:
        obj["relevant"] = doc.relevant
    return obj


def load_corpus(path: str | Path) -> Corpus:
    """Load a line-delimited JSON corpus, failing fast on the first bad line."""
    path = Path(path)
    documents: list[Document] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: not valid JSON: {exc}") from exc
            doc = _doc_from_json(obj, line_no)
            if doc.doc_id in seen:
                raise DuplicateIdError(doc.doc_id)
            seen.add(doc.doc_id)
            documents.append(doc)
    manifest = [{"path": str(path), "records": len(documents)}]
    return Corpus(documents=documents, source_manifest=manifest)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus as one JSON object per line; output is byte-stable."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            for doc in corpus.documents:
                fh.write(json.dumps(_doc_to_json(doc), ensure_ascii=False, separators=(",", ":")))
                fh.write("\n")
    except OSError as exc:
        raise CorpusError(f"cannot write corpus to {path}: {exc}") from exc


def ingest_xml_records(paths: list[Path]) -> Corpus:
    """Parse one XML record per file into a corpus, in the given file order."""
    documents = []
    seen: set[str] = set()
    for p in paths:
        doc = parse_article_record(p.read_text(encoding="utf-8"))
        if doc.doc_id in seen:
            raise DuplicateIdError(doc.doc_id)
        seen.add(doc.doc_id)
        documents.append(doc)
    manifest = [{"path": str(p), "records": 1} for p in paths]
    return Corpus(documents=documents, source_manifest=manifest)
