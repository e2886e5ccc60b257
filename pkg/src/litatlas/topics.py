"""LDA topic modeling via collapsed Gibbs sampling.

Covers model fitting, coherence-based topic-count selection, per-document
topic assignment, topic-based corpus filtering and recursive refitting of a
single topic's sub-corpus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import _gibbs
from .corpus import Corpus
from .errors import AtlasError
from .textproc import TokenList, build_vocabulary, load_stopwords, tokenize

DEFAULT_BETA = 0.01


def default_alpha(K: int) -> float:
    return 50.0 / K


@dataclass
class GibbsCounts:
    """Count tables and per-token assignments from the final sweep."""

    token_topics: np.ndarray
    doc_topic: np.ndarray
    topic_word: np.ndarray
    topic_totals: np.ndarray


@dataclass
class TopicModel:
    K: int
    alpha: float
    beta: float
    seed: int
    passes: int
    vocab: tuple[str, ...]
    phi: np.ndarray
    theta: np.ndarray
    counts: GibbsCounts | None = None

    @property
    def n_docs(self) -> int:
        return int(self.theta.shape[0])


@dataclass(frozen=True)
class CoherenceReport:
    K: int
    per_topic: tuple[float, ...]
    mean: float


def _flatten(docs: list[TokenList], index: dict[str, int]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(docs) + 1, dtype=np.int32)
    words: list[int] = []
    for d, doc in enumerate(docs):
        kept = [index[t] for t in doc if t in index]
        if not kept:
            raise AtlasError(f"document {d} is empty after vocabulary pruning")
        words.extend(kept)
        offsets[d + 1] = len(words)
    return np.asarray(words, dtype=np.int32), offsets


def fit_lda(
    docs: list[TokenList],
    K: int,
    passes: int,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    seed: int = 0,
    min_df: int = 1,
    validate_counts: bool = False,
    average_after: int | None = None,
    sweep_order: list[int] | None = None,
) -> TopicModel:
    """Run collapsed Gibbs sampling for ``passes`` full sweeps.

    phi and theta come from the final counts with Dirichlet smoothing, or from
    an average over the sweeps starting at ``average_after`` when given. The
    run is deterministic for fixed inputs and seed. ``sweep_order`` overrides
    the document visiting order (reproducibility harness hook).

    When ``validate_counts`` is set, count conservation is checked after
    every sweep.
    """
    if not docs or all(len(d) == 0 for d in docs):
        raise AtlasError("empty corpus or all-empty documents")
    if K < 2:
        raise AtlasError(f"K must be >= 2, got {K}")
    if passes < 1:
        raise AtlasError(f"passes must be >= 1, got {passes}")
    if alpha is None:
        alpha = default_alpha(K)

    vocab = build_vocabulary(docs, min_df=min_df)
    word_of, offsets = _flatten(docs, vocab.index)
    D, V = len(docs), len(vocab)
    n_tokens = int(word_of.shape[0])

    if sweep_order is None:
        order = np.arange(D, dtype=np.int32)
    else:
        order = np.asarray(sweep_order, dtype=np.int32)
        if sorted(order.tolist()) != list(range(D)):
            raise AtlasError("sweep_order must be a permutation of the document indices")

    z = np.zeros(n_tokens, dtype=np.int32)
    n_dk = np.zeros((D, K), dtype=np.int64)
    n_kw = np.zeros((K, V), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    state = _gibbs.seed_state(seed)

    _gibbs.init_assignments(word_of, offsets, order, K, z, n_dk, n_kw, n_k, state)

    phi_acc = np.zeros((K, V)) if average_after is not None else None
    theta_acc = np.zeros((D, K)) if average_after is not None else None
    averaged = 0
    doc_lengths = (offsets[1:] - offsets[:-1]).astype(np.float64)

    for p in range(passes):
        _gibbs.sweep(word_of, offsets, order, z, n_dk, n_kw, n_k, alpha, beta, state)
        if validate_counts:
            if int(n_kw.sum()) != n_tokens or int(n_dk.sum()) != n_tokens:
                raise AtlasError(f"count conservation violated after pass {p}")
            if not np.array_equal(n_k, n_kw.sum(axis=1)):
                raise AtlasError(f"topic totals inconsistent after pass {p}")
        if phi_acc is not None and p >= average_after:
            phi_acc += _phi_from_counts(n_kw, n_k, beta)
            theta_acc += _theta_from_counts(n_dk, doc_lengths, alpha)
            averaged += 1

    if phi_acc is not None and averaged > 0:
        phi = phi_acc / averaged
        theta = theta_acc / averaged
    else:
        phi = _phi_from_counts(n_kw, n_k, beta)
        theta = _theta_from_counts(n_dk, doc_lengths, alpha)

    return TopicModel(
        K=K,
        alpha=alpha,
        beta=beta,
        seed=seed,
        passes=passes,
        vocab=vocab.terms,
        phi=phi,
        theta=theta,
        counts=GibbsCounts(token_topics=z, doc_topic=n_dk, topic_word=n_kw, topic_totals=n_k),
    )


def _phi_from_counts(n_kw: np.ndarray, n_k: np.ndarray, beta: float) -> np.ndarray:
    V = n_kw.shape[1]
    return (n_kw + beta) / (n_k + V * beta)[:, None]


def _theta_from_counts(n_dk: np.ndarray, doc_lengths: np.ndarray, alpha: float) -> np.ndarray:
    K = n_dk.shape[1]
    return (n_dk + alpha) / (doc_lengths + K * alpha)[:, None]


def top_words(model: TopicModel, topic: int, n: int) -> list[tuple[str, float]]:
    """Top-n terms of a topic by probability; ties break on vocabulary index."""
    if not 0 <= topic < model.K:
        raise AtlasError(f"topic {topic} out of range 0..{model.K - 1}")
    if n > len(model.vocab):
        raise AtlasError(f"n={n} exceeds vocabulary size {len(model.vocab)}")
    row = model.phi[topic]
    ranked = np.argsort(-row, kind="stable")[:n]
    return [(model.vocab[i], float(row[i])) for i in ranked]


def assign_topic(model: TopicModel, doc_index: int) -> int:
    """Most probable topic of a document; the lowest index wins ties."""
    return int(np.argmax(model.theta[doc_index]))


def assignments(model: TopicModel) -> list[int]:
    return [assign_topic(model, d) for d in range(model.n_docs)]


def coherence(model: TopicModel, docs: list[TokenList], top_n: int = 10) -> CoherenceReport:
    """Document co-occurrence coherence of each topic's top words.

    For top words w_1..w_m in rank order the score sums
    ln((D(w_i, w_j) + 1) / D(w_j)) over pairs i < j, where D counts documents
    containing the word(s).
    """
    if top_n < 2:
        raise AtlasError(f"top_n must be >= 2, got {top_n}")
    doc_sets = [set(d) for d in docs]
    per_topic = []
    for t in range(model.K):
        words = [w for w, _ in top_words(model, t, min(top_n, len(model.vocab)))]
        doc_freq = {}
        for w in words:
            doc_freq[w] = sum(1 for s in doc_sets if w in s)
            if doc_freq[w] == 0:
                raise AtlasError(f"top word {w!r} of topic {t} occurs in no document")
        score = 0.0
        for wi, wj in combinations(words, 2):
            co = sum(1 for s in doc_sets if wi in s and wj in s)
            score += math.log((co + 1) / doc_freq[wj])
        per_topic.append(score)
    return CoherenceReport(K=model.K, per_topic=tuple(per_topic), mean=sum(per_topic) / model.K)


def coherence_scan(
    docs: list[TokenList],
    K_range: list[int],
    passes: int,
    seed: int = 0,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    top_n: int = 10,
) -> list[tuple[int, float]]:
    """Mean coherence for each candidate K, fit with the same seed policy."""
    if not K_range:
        raise AtlasError("K_range is empty")
    results = []
    for K in K_range:
        model = fit_lda(docs, K=K, passes=passes, alpha=alpha, beta=beta, seed=seed)
        results.append((K, coherence(model, docs, top_n=top_n).mean))
    return results


def filter_by_topics(corpus: Corpus, model: TopicModel, drop: set[int]) -> Corpus:
    """Remove documents assigned to the dropped topics, preserving order."""
    if not drop:
        return Corpus(documents=list(corpus.documents), source_manifest=list(corpus.source_manifest))
    bad = [t for t in drop if not 0 <= t < model.K]
    if bad:
        raise AtlasError(f"topics out of range: {bad}")
    if len(corpus) != model.n_docs:
        raise AtlasError("corpus and model document counts differ")
    kept = [doc for i, doc in enumerate(corpus.documents) if assign_topic(model, i) not in drop]
    return Corpus(documents=kept, source_manifest=list(corpus.source_manifest))


def refit_subtopics(
    corpus: Corpus,
    model: TopicModel,
    topic: int,
    K_sub: int,
    passes: int,
    seed: int = 0,
    stopwords: frozenset[str] | None = None,
) -> TopicModel:
    """Fit a fresh model over only the documents assigned to ``topic``.

    The sub-model's vocabulary is rebuilt on the subset; its document rows
    follow parent-corpus order restricted to the topic.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    selected = [doc for i, doc in enumerate(corpus.documents) if assign_topic(model, i) == topic]
    if len(selected) < K_sub:
        raise AtlasError(
            f"topic {topic} has {len(selected)} documents, fewer than K_sub={K_sub}"
        )
    sub_docs = [tokenize(doc.abstract, stopwords) for doc in selected]
    return fit_lda(sub_docs, K=K_sub, passes=passes, seed=seed)


def save_topic_model(model: TopicModel, path: str | Path) -> None:
    obj = {
        "K": model.K,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "passes": model.passes,
        "vocab": list(model.vocab),
        "phi": [[float(x) for x in row] for row in model.phi],
        "theta": [[float(x) for x in row] for row in model.theta],
        "assignments": assignments(model),
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, separators=(",", ":")), encoding="utf-8")


def load_topic_model(path: str | Path) -> TopicModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return TopicModel(
        K=int(obj["K"]),
        alpha=float(obj["alpha"]),
        beta=float(obj["beta"]),
        seed=int(obj["seed"]),
        passes=int(obj["passes"]),
        vocab=tuple(obj["vocab"]),
        phi=np.asarray(obj["phi"], dtype=float),
        theta=np.asarray(obj["theta"], dtype=float),
        counts=None,
    )
