import itertools
import math
import random
from collections import Counter

import numpy as np
import pytest

from litatlas.corpus import Corpus, Document
from litatlas.errors import AtlasError
from litatlas.topics import (
    CoherenceReport,
    TopicModel,
    assign_topic,
    assignments,
    coherence,
    coherence_scan,
    filter_by_topics,
    fit_lda,
    load_topic_model,
    refit_subtopics,
    save_topic_model,
    top_words,
)


def planted_corpus(K: int, docs_per_topic: int, doc_len: int, seed: int, vocab_per_topic: int = 10):
    """Disjoint per-topic vocabularies; the planted label is the only oracle."""
    rng = random.Random(seed)
    vocabs = [[f"t{k}w{i}" for i in range(vocab_per_topic)] for k in range(K)]
    docs, labels = [], []
    for k in range(K):
        for _ in range(docs_per_topic):
            docs.append([rng.choice(vocabs[k]) for _ in range(doc_len)])
            labels.append(k)
    order = list(range(len(docs)))
    rng.shuffle(order)
    return [docs[i] for i in order], [labels[i] for i in order], vocabs


def permutation_purity(predicted, planted, K):
    best = 0
    for perm in itertools.permutations(range(K)):
        hits = sum(1 for p, t in zip(predicted, planted) if perm[t] == p)
        best = max(best, hits)
    return best / len(planted)


def test_planted_two_topic_recovery():
    docs, labels, vocabs = planted_corpus(K=2, docs_per_topic=100, doc_len=15, seed=4)
    model = fit_lda(docs, K=2, passes=200, seed=1)
    predicted = assignments(model)
    assert permutation_purity(predicted, labels, 2) >= 0.9
    for k in range(2):
        top5 = {w for w, _ in top_words(model, k, 5)}
        assert top5 <= set(vocabs[0]) or top5 <= set(vocabs[1])


def test_single_repeated_token_document():
    model = fit_lda([["x", "x", "x", "x"]], K=2, passes=10, seed=0)
    assert abs(model.theta[0].sum() - 1.0) <= 1e-9
    assert model.vocab == ("x",)
    # With a one-term vocabulary every topic row is a point mass on it.
    assert np.allclose(model.phi[:, 0], 1.0)


def test_fit_rejects_empty_corpus():
    with pytest.raises(AtlasError):
        fit_lda([], K=2, passes=1)
    with pytest.raises(AtlasError):
        fit_lda([[], []], K=2, passes=1)


def test_row_stochasticity():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=20, doc_len=10, seed=5)
    model = fit_lda(docs, K=3, passes=30, seed=2)
    assert np.abs(model.phi.sum(axis=1) - 1.0).max() <= 1e-9
    assert np.abs(model.theta.sum(axis=1) - 1.0).max() <= 1e-9


def test_count_conservation_every_pass():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=15, doc_len=8, seed=6)
    model = fit_lda(docs, K=3, passes=40, seed=3, validate_counts=True)
    total = sum(len(d) for d in docs)
    assert int(model.counts.topic_word.sum()) == total
    assert int(model.counts.doc_topic.sum()) == total


def test_determinism_identical_counts():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=15, doc_len=8, seed=7)
    a = fit_lda(docs, K=2, passes=25, seed=9)
    b = fit_lda(docs, K=2, passes=25, seed=9)
    assert np.array_equal(a.counts.token_topics, b.counts.token_topics)
    assert np.array_equal(a.counts.topic_word, b.counts.topic_word)
    c = fit_lda(docs, K=2, passes=25, seed=10)
    assert not np.array_equal(a.counts.token_topics, c.counts.token_topics)


def test_exchangeability_smoke():
    """Permuted docs visited in the original physical order reproduce the
    same per-token draws, so the assignment multiset is identical."""
    docs, _, _ = planted_corpus(K=2, docs_per_topic=10, doc_len=6, seed=8)
    n = len(docs)
    rng = random.Random(0)
    perm = list(range(n))
    rng.shuffle(perm)  # position i of the new list holds old doc perm[i]
    permuted = [docs[perm[i]] for i in range(n)]
    # Visiting new-index order that restores the original sequence:
    # old doc j sits at new position inv[j].
    inv = [0] * n
    for new_pos, old in enumerate(perm):
        inv[old] = new_pos
    base = fit_lda(docs, K=2, passes=15, seed=4)
    moved = fit_lda(permuted, K=2, passes=15, seed=4, sweep_order=inv)
    assert Counter(base.counts.token_topics.tolist()) == Counter(
        moved.counts.token_topics.tolist()
    )


def test_top_words_full_vocabulary_is_permutation():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=10, doc_len=6, seed=9)
    model = fit_lda(docs, K=2, passes=10, seed=5)
    ranked = [w for w, _ in top_words(model, 0, len(model.vocab))]
    assert sorted(ranked) == sorted(model.vocab)


def test_top_words_tie_break_by_vocab_index():
    model = TopicModel(
        K=1,
        alpha=1.0,
        beta=0.1,
        seed=0,
        passes=1,
        vocab=("b", "a", "c"),
        phi=np.array([[1 / 3, 1 / 3, 1 / 3]]),
        theta=np.array([[1.0]]),
    )
    assert [w for w, _ in top_words(model, 0, 3)] == ["b", "a", "c"]


def test_top_words_validation():
    model = TopicModel(
        K=1, alpha=1.0, beta=0.1, seed=0, passes=1,
        vocab=("a",), phi=np.array([[1.0]]), theta=np.array([[1.0]]),
    )
    with pytest.raises(AtlasError):
        top_words(model, 1, 1)
    with pytest.raises(AtlasError):
        top_words(model, 0, 2)


def _manual_model(theta_rows, K=None):
    theta = np.array(theta_rows, dtype=float)
    K = K or theta.shape[1]
    return TopicModel(
        K=K, alpha=1.0, beta=0.1, seed=0, passes=1,
        vocab=("a",), phi=np.full((K, 1), 1.0), theta=theta,
    )


def test_assign_topic_argmax_and_tie():
    model = _manual_model([[0.1, 0.8, 0.1], [0.5, 0.5, 0.0]])
    assert assign_topic(model, 0) == 1
    assert assign_topic(model, 1) == 0


def test_coherence_cooccurring_pair_positive():
    # Two words appearing together in every one of d documents.
    d = 7
    docs = [["a", "b"] for _ in range(d)]
    model = TopicModel(
        K=1, alpha=1.0, beta=0.1, seed=0, passes=1,
        vocab=("a", "b"), phi=np.array([[0.6, 0.4]]), theta=np.ones((d, 1)),
    )
    report = coherence(model, docs, top_n=2)
    assert abs(report.per_topic[0] - math.log((d + 1) / d)) < 1e-12
    assert report.per_topic[0] > 0


def test_coherence_never_cooccurring_pair_negative():
    docs = [["a"], ["b"], ["b"], ["b"]]
    model = TopicModel(
        K=1, alpha=1.0, beta=0.1, seed=0, passes=1,
        vocab=("a", "b"), phi=np.array([[0.6, 0.4]]), theta=np.ones((4, 1)),
    )
    report = coherence(model, docs, top_n=2)
    assert abs(report.per_topic[0] - math.log(1 / 3)) < 1e-12
    assert report.per_topic[0] < 0


def test_coherence_top2_single_pair_per_topic():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=10, doc_len=6, seed=10)
    model = fit_lda(docs, K=2, passes=10, seed=6)
    report = coherence(model, docs, top_n=2)
    assert len(report.per_topic) == 2
    for t in range(2):
        (w1, _), (w2, _) = top_words(model, t, 2)
        co = sum(1 for d in docs if w1 in d and w2 in d)
        dj = sum(1 for d in docs if w2 in d)
        assert abs(report.per_topic[t] - math.log((co + 1) / dj)) < 1e-12


def test_coherence_scan_prefers_true_k():
    docs, _, _ = planted_corpus(K=3, docs_per_topic=40, doc_len=20, seed=11)
    scan = coherence_scan(docs, [2, 3, 4], passes=80, seed=1)
    scores = dict(scan)
    assert scores[3] >= scores[2]


def test_coherence_scan_single_k_and_determinism():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=10, doc_len=8, seed=12)
    one = coherence_scan(docs, [2], passes=15, seed=2)
    assert len(one) == 1 and one[0][0] == 2
    assert coherence_scan(docs, [2, 3], passes=15, seed=2) == coherence_scan(
        docs, [2, 3], passes=15, seed=2
    )


def _corpus_of(n):
    return Corpus(
        documents=[Document(doc_id=f"d{i}", title="t", abstract=f"abstract {i}") for i in range(n)]
    )


def test_filter_by_topics_empty_drop_is_identity():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=5, doc_len=6, seed=13)
    model = fit_lda(docs, K=2, passes=10, seed=7)
    corpus = _corpus_of(len(docs))
    assert filter_by_topics(corpus, model, set()).documents == corpus.documents


def test_filter_by_topics_drop_all_empties_corpus():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=5, doc_len=6, seed=14)
    model = fit_lda(docs, K=2, passes=10, seed=8)
    corpus = _corpus_of(len(docs))
    assert len(filter_by_topics(corpus, model, {0, 1})) == 0


def test_filter_by_topics_survivor_count_matches_histogram():
    docs, _, _ = planted_corpus(K=3, docs_per_topic=10, doc_len=8, seed=15)
    model = fit_lda(docs, K=3, passes=15, seed=9)
    corpus = _corpus_of(len(docs))
    hist = Counter(assignments(model))
    survivors = filter_by_topics(corpus, model, {1})
    assert len(survivors) == len(corpus) - hist[1]
    assert [d.doc_id for d in survivors.documents] == [
        d.doc_id for i, d in enumerate(corpus.documents) if assign_topic(model, i) != 1
    ]


def test_refit_subtopics_recovers_subthemes():
    rng = random.Random(16)
    # Parent topics split by construction: docs assigned via a manual model.
    sub_vocab = [["red", "crimson", "scarlet"], ["blue", "azure", "navy"]]
    documents = []
    theta_rows = []
    planted = []
    for i in range(40):
        sub = i % 2
        words = " ".join(rng.choice(sub_vocab[sub]) for _ in range(20))
        documents.append(Document(doc_id=f"d{i}", title="t", abstract=words))
        theta_rows.append([0.9, 0.1])  # every doc assigned to topic 0
        planted.append(sub)
    parent = _manual_model(theta_rows)
    corpus = Corpus(documents=documents)
    sub_model = refit_subtopics(corpus, parent, topic=0, K_sub=2, passes=150, seed=3)
    purity = permutation_purity(assignments(sub_model), planted, 2)
    assert purity >= 0.9
    assert np.abs(sub_model.theta.sum(axis=1) - 1.0).max() <= 1e-9


def test_refit_subtopics_empty_topic_errors():
    corpus = _corpus_of(4)
    parent = _manual_model([[0.9, 0.1]] * 4)
    with pytest.raises(AtlasError):
        refit_subtopics(corpus, parent, topic=1, K_sub=2, passes=10, seed=0)


def test_model_file_round_trip(tmp_path):
    docs, _, _ = planted_corpus(K=2, docs_per_topic=8, doc_len=6, seed=17)
    model = fit_lda(docs, K=2, passes=10, seed=11)
    path = tmp_path / "lda.json"
    save_topic_model(model, path)
    loaded = load_topic_model(path)
    assert loaded.K == model.K and loaded.vocab == model.vocab
    assert np.array_equal(loaded.phi, model.phi)
    assert np.array_equal(loaded.theta, model.theta)
    assert assignments(loaded) == assignments(model)


def test_coherence_report_shape():
    docs, _, _ = planted_corpus(K=2, docs_per_topic=8, doc_len=6, seed=18)
    model = fit_lda(docs, K=2, passes=10, seed=12)
    report = coherence(model, docs, top_n=3)
    assert isinstance(report, CoherenceReport)
    assert report.K == 2 and len(report.per_topic) == 2
    assert abs(report.mean - sum(report.per_topic) / 2) < 1e-12
