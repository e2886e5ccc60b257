"""Tokenization, vocabulary, TF-IDF vectors and cosine distances.

The shared text-numeric substrate: term weight is binary presence times
ln(N / df), and 1 - cosine similarity is the distance fed to the 2-D
embedding.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import AtlasError, DimensionMismatchError

# Maximal runs of letters/digits/plus/hyphen; keeps chemically meaningful
# tokens such as er3+ and glass-ceramics intact.
_TOKEN = re.compile(r"(?:[^\W_]|[+-])+", re.UNICODE)
_HAS_LETTER = re.compile(r"[^\W\d_]", re.UNICODE)

TokenList = list[str]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stopword file (one lowercase token per line, ``#`` comments).

    With no path, returns the bundled English list.
    """
    if path is None:
        text = resources.files("litatlas.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def tokenize(text: str, stopwords: frozenset[str] | set[str] | None = None) -> TokenList:
    """Lowercase tokens with punctuation, numerals and stopwords removed.

    A token survives only if it contains at least one letter, so pure
    numerals drop out while tokens like ``er3+`` stay.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    tokens = []
    for match in _TOKEN.finditer(text):
        tok = match.group().lower()
        if not _HAS_LETTER.search(tok):
            continue
        if tok in stopwords:
            continue
        tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    """Corpus dictionary: term order defines the vector-space dimensions."""

    terms: tuple[str, ...]
    index: dict[str, int]
    doc_freq: tuple[int, ...]
    corpus_size: int

    def __len__(self) -> int:
        return len(self.terms)


def build_vocabulary(docs: list[TokenList], min_df: int = 1) -> Vocabulary:
    """Count document frequencies and assign dimensions to retained terms.

    Terms appearing in fewer than ``min_df`` documents are pruned. Dimension
    order is first-appearance order across the corpus.
    """
    if not docs:
        raise AtlasError("cannot build a vocabulary from an empty document list")
    df: dict[str, int] = {}
    for doc in docs:
        for tok in set(doc):
            df[tok] = df.get(tok, 0) + 1
    terms = tuple(t for t in _first_appearance_order(docs) if df[t] >= min_df)
    return Vocabulary(
        terms=terms,
        index={t: i for i, t in enumerate(terms)},
        doc_freq=tuple(df[t] for t in terms),
        corpus_size=len(docs),
    )


def _first_appearance_order(docs: list[TokenList]) -> list[str]:
    seen: dict[str, None] = {}
    for doc in docs:
        for tok in doc:
            seen.setdefault(tok)
    return list(seen)


@dataclass(frozen=True)
class SparseVector:
    """Sparse nonnegative vector: entries sorted by dimension, zeros omitted."""

    entries: tuple[tuple[int, float], ...]
    dim: int

    def __post_init__(self):
        prev = -1
        for d, w in self.entries:
            if d <= prev or d >= self.dim:
                raise AtlasError("sparse entries must be strictly increasing and < dim")
            if w < 0:
                raise AtlasError("sparse weights must be nonnegative")
            prev = d

    def norm(self) -> float:
        return math.sqrt(sum(w * w for _, w in self.entries))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for d, w in self.entries:
            out[d] = w
        return out


def vectorize_tfidf(doc: TokenList, vocab: Vocabulary, tf_mode: str = "binary") -> SparseVector:
    """TF-IDF weights over the vocabulary's dimensions.

    tf is a presence indicator by default (``tf_mode="count"`` switches to raw
    counts); idf is ln(corpus_size / doc_freq). Terms present in every
    document get weight 0 and are omitted, as are out-of-vocabulary tokens.
    """
    if tf_mode not in ("binary", "count"):
        raise AtlasError(f"unknown tf_mode {tf_mode!r}")
    counts: dict[int, int] = {}
    for tok in doc:
        d = vocab.index.get(tok)
        if d is not None:
            counts[d] = counts.get(d, 0) + 1
    entries = []
    for d in sorted(counts):
        idf = math.log(vocab.corpus_size / vocab.doc_freq[d])
        tf = 1.0 if tf_mode == "binary" else float(counts[d])
        w = tf * idf
        if w > 0.0:
            entries.append((d, w))
    return SparseVector(entries=tuple(entries), dim=len(vocab))


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    """dot(a,b) / (|a||b|), with 0 when either vector is all zeros."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dim mismatch: {a.dim} != {b.dim}")
    dot = 0.0
    i = j = 0
    ea, eb = a.entries, b.entries
    while i < len(ea) and j < len(eb):
        da, wa = ea[i]
        db, wb = eb[j]
        if da == db:
            dot += wa * wb
            i += 1
            j += 1
        elif da < db:
            i += 1
        else:
            j += 1
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def pairwise_cosine_distance(vectors: list[SparseVector]) -> np.ndarray:
    """Dense n x n matrix of 1 - cosine similarity; symmetric, zero diagonal."""
    n = len(vectors)
    if n < 2:
        raise AtlasError("pairwise distance needs at least 2 vectors")
    dim = vectors[0].dim
    for v in vectors:
        if v.dim != dim:
            raise DimensionMismatchError("vectors have mixed dimensions")
    dense = np.zeros((n, dim))
    for i, v in enumerate(vectors):
        for d, w in v.entries:
            dense[i, d] = w
    norms = np.linalg.norm(dense, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = dense / safe[:, None]
    sim = unit @ unit.T
    np.clip(sim, 0.0, 1.0, out=sim)
    dist = 1.0 - sim
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return dist


def save_distance_matrix(matrix: np.ndarray, ids: list[str], path: str | Path) -> None:
    """Dense CSV export, row-major, header row of item ids."""
    if matrix.shape[0] != len(ids):
        raise DimensionMismatchError("id count does not match matrix rows")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ids)
        for row in matrix:
            writer.writerow([repr(float(x)) for x in row])
