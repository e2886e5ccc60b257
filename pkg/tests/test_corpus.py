import random

import pytest

from litatlas.corpus import (
    Caption,
    Corpus,
    Document,
    load_corpus,
    make_caption_id,
    normalize_doc_id,
    parse_article_record,
    save_corpus,
)
from litatlas.errors import CorpusError, DuplicateIdError, RecordParseError, RecordSchemaError

RECORD = """
<article>
  <id>10.1000/example.1</id>
  <title>Glass ceramics</title>
  <abstract>An abstract about glasses.</abstract>
  <journal>J. Test</journal>
  <authors><author>A. One</author><author>B. Two</author></authors>
  <figures>
    <caption n="1">XRD patterns of the samples</caption>
    <caption n="2">SEM micrograph of the surface</caption>
  </figures>
</article>
"""


def test_parse_record_with_two_captions():
    doc = parse_article_record(RECORD)
    assert doc.doc_id == "10.1000/example.1"
    assert doc.abstract == "An abstract about glasses."
    assert [c.figure_ordinal for c in doc.captions] == [1, 2]
    assert doc.captions[0].text == "XRD patterns of the samples"
    assert doc.authors == ("A. One", "B. Two")


def test_parse_record_without_captions():
    xml = "<article><id>x1</id><title>t</title><abstract>a</abstract></article>"
    doc = parse_article_record(xml)
    assert doc.captions == ()


def test_parse_record_missing_id_is_schema_error():
    xml = "<article><title>t</title><abstract>a</abstract></article>"
    with pytest.raises(RecordSchemaError):
        parse_article_record(xml)


def test_parse_record_malformed_markup_reports_offset():
    xml = "<article><id>x</id><abstract>a</article>"
    with pytest.raises(RecordParseError) as err:
        parse_article_record(xml)
    assert err.value.offset is not None
    assert err.value.offset > 0


def test_parse_record_ignores_unknown_elements():
    xml = (
        "<article><id>x1</id><noise>zzz</noise><title>t</title>"
        "<abstract>a</abstract><extra><deep/></extra></article>"
    )
    doc = parse_article_record(xml)
    assert doc.doc_id == "x1"


def test_doc_id_normalization():
    assert normalize_doc_id("  DOI:10.1/ABC  ") == "doi:10.1/ABC"
    assert normalize_doc_id("10.1/abc") == "10.1/abc"


def test_document_requires_abstract_or_captions():
    with pytest.raises(CorpusError):
        Document(doc_id="d", title="t", abstract="")
    cap = Caption(make_caption_id("d", 1), "text", 1)
    assert Document(doc_id="d", title="t", abstract="", captions=(cap,)).abstract == ""


def test_caption_ordinals_must_be_contiguous():
    caps = (Caption(make_caption_id("d", 2), "text", 2),)
    with pytest.raises(CorpusError):
        Document(doc_id="d", title="t", abstract="a", captions=caps)


def _mk_doc(i, **kwargs):
    defaults = dict(doc_id=f"doc-{i}", title=f"title {i}", abstract=f"abstract {i}")
    defaults.update(kwargs)
    return Document(**defaults)


def test_load_corpus_three_lines(tmp_path):
    path = tmp_path / "c.jsonl"
    save_corpus(Corpus(documents=[_mk_doc(i) for i in range(3)]), path)
    corpus = load_corpus(path)
    assert len(corpus) == 3
    assert corpus.source_manifest[0]["records"] == 3


def test_load_corpus_duplicate_id_names_the_id(tmp_path):
    path = tmp_path / "c.jsonl"
    line = '{"doc_id":"dup","title":"t","abstract":"a","captions":[]}\n'
    path.write_text(line + line, encoding="utf-8")
    with pytest.raises(DuplicateIdError) as err:
        load_corpus(path)
    assert "dup" in str(err.value)


def test_load_corpus_invalid_line_is_fail_fast(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        '{"doc_id":"a","title":"t","abstract":"x","captions":[]}\nnot json\n', encoding="utf-8"
    )
    with pytest.raises(CorpusError) as err:
        load_corpus(path)
    assert "line 2" in str(err.value)


def test_load_empty_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("", encoding="utf-8")
    corpus = load_corpus(path)
    assert len(corpus) == 0
    assert corpus.source_manifest[0]["records"] == 0


def test_round_trip_and_byte_stability(tmp_path):
    rng = random.Random(5)
    docs = []
    for i in range(100):
        caps = tuple(
            Caption(make_caption_id(f"d{i}", n), f"caption {i}.{n}", n)
            for n in range(1, rng.randint(1, 4))
        )
        docs.append(
            _mk_doc(
                i,
                doc_id=f"d{i}",
                journal=rng.choice([None, "J1", "J2"]),
                authors=tuple(rng.sample(["A", "B", "C", "D"], rng.randint(0, 3))),
                captions=caps,
            )
        )
    corpus = Corpus(documents=docs)
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(corpus, p1)
    loaded = load_corpus(p1)
    assert loaded.documents == corpus.documents
    save_corpus(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_round_trip_preserves_non_ascii_exactly(tmp_path):
    rng = random.Random(11)
    alphabet = "abcXYZ äöüßéèñ 千葉 Łukasz –—· ∂µΩ 🔬"
    for trial in range(20):
        name = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12))).strip() or "x"
        doc = _mk_doc(trial, authors=(name,), title=name, abstract=name)
        path = tmp_path / f"t{trial}.jsonl"
        save_corpus(Corpus(documents=[doc]), path)
        loaded = load_corpus(path)
        assert loaded.documents[0].authors == (name,)
        assert loaded.documents[0].title == name


def test_empty_corpus_round_trip(tmp_path):
    path = tmp_path / "empty.jsonl"
    save_corpus(Corpus(documents=[]), path)
    assert len(load_corpus(path)) == 0


def test_parse_is_deterministic():
    assert parse_article_record(RECORD) == parse_article_record(RECORD)
