"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import hashlib
import json
import math
import random
import statistics
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from litatlas import atlas, embed, pipeline, relevance, textproc, topics
from litatlas.chemparse import element_markers, extract_corpus_species, load_lexicon, parse_formula, normalize_species
from litatlas.corpus import save_corpus
from litatlas.errors import FormulaError, NotASpeciesError
from litatlas.minicorpus import generate_minicorpus
from litatlas.service.app import (
    create_app,
    doc_view,
    labels_view,
    load_artifacts,
    map_view,
    overlay_view,
    query_view,
    stats_view,
    topics_view,
)
from litatlas.textproc import SparseVector

from conftest import write_demo_config
from query_oracle import GrammarSampler, brute_force_query
from test_chemparse import GOLDEN_FORMULAS, GOLDEN_NAMES, GOLDEN_NEGATIVES
from test_topics import permutation_purity, planted_corpus


def _report(name: str, detail: str = ""):
    print(f"\nPASS {name}" + (f" ({detail})" if detail else ""))


# --- 1. TF-IDF oracle equivalence ------------------------------------------------


def test_tfidf_oracle_equivalence():
    rng = random.Random(101)
    alphabet = [f"term{i}" for i in range(200)]
    started = time.perf_counter()
    corpora = 0
    for _ in range(100):
        n_docs = rng.randint(2, 50)
        vocab_pool = rng.sample(alphabet, rng.randint(5, 200))
        docs = [
            [rng.choice(vocab_pool) for _ in range(rng.randint(1, 30))] for _ in range(n_docs)
        ]
        vocab = textproc.build_vocabulary(docs)
        for doc in docs:
            got = {vocab.terms[d]: w for d, w in textproc.vectorize_tfidf(doc, vocab).entries}
            want = {}
            for term in set(doc):
                df = sum(1 for d in docs if term in d)
                w = 1.0 * math.log(n_docs / df)
                if w > 0.0:
                    want[term] = w
            assert got == want  # exact float equality
        corpora += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _report("tfidf-oracle-equivalence", f"{corpora} corpora, {elapsed:.2f}s")


# --- 2. Classifier ------------------------------------------------------------------


def _vec(values) -> SparseVector:
    return SparseVector(
        entries=tuple((i, float(v)) for i, v in enumerate(values) if v != 0.0), dim=len(values)
    )


def test_classifier_training_and_gradient():
    rng = random.Random(202)
    data = []
    for i in range(500):
        label = i % 2
        cx = 3.5 if label else 0.5
        data.append(
            (_vec([max(cx + rng.gauss(0, 0.35), 0.0), max(cx + rng.gauss(0, 0.35), 0.0)]), label)
        )
    model = relevance.train_logreg(
        data, relevance.TrainConfig(learning_rate=1.0, max_iters=2000, tol=0.0)
    )
    accuracy = relevance.evaluate(model, data).accuracy
    assert accuracy >= 0.99
    assert model.training_meta["iterations"] <= 2000

    nprng = np.random.default_rng(203)
    worst = 0.0
    for _ in range(20):
        n, dim = int(nprng.integers(3, 15)), int(nprng.integers(1, 6))
        X = nprng.normal(size=(n, dim))
        y = nprng.integers(0, 2, size=n).astype(float)
        w = nprng.normal(size=dim)
        b = float(nprng.normal())
        lam = float(nprng.uniform(0, 0.1))
        _, gw, gb = relevance.loss_and_gradient(w, b, X, y, lam)
        h = 1e-6
        fw = np.zeros_like(w)
        for i in range(dim):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            fw[i] = (
                relevance.loss_and_gradient(wp, b, X, y, lam)[0]
                - relevance.loss_and_gradient(wm, b, X, y, lam)[0]
            ) / (2 * h)
        fb = (
            relevance.loss_and_gradient(w, b + h, X, y, lam)[0]
            - relevance.loss_and_gradient(w, b - h, X, y, lam)[0]
        ) / (2 * h)
        rel = np.linalg.norm(np.append(gw - fw, gb - fb)) / max(
            np.linalg.norm(np.append(fw, fb)), 1e-12
        )
        worst = max(worst, rel)
        assert rel <= 1e-5
    _report("classifier", f"training accuracy {accuracy:.3f}, max gradient error {worst:.2e}")


# --- 3. LDA planted-topic recovery ----------------------------------------------------


def test_lda_planted_topic_recovery():
    docs, labels, _ = planted_corpus(K=3, docs_per_topic=100, doc_len=30, seed=303)
    started = time.perf_counter()
    successes = 0
    purities = []
    for seed in range(10):
        model = topics.fit_lda(docs, K=3, passes=300, seed=seed, validate_counts=True)
        purity = permutation_purity(topics.assignments(model), labels, 3)
        purities.append(purity)
        if purity >= 0.9:
            successes += 1
    elapsed = time.perf_counter() - started
    assert successes >= 9, f"purities {purities}"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _report(
        "lda-planted-recovery",
        f"{successes}/10 seeds >= 0.9 purity (min {min(purities):.3f}), {elapsed:.1f}s",
    )


# --- 4. Coherence scan ------------------------------------------------------------------


def test_coherence_scan_ranks_true_k():
    docs, _, _ = planted_corpus(K=3, docs_per_topic=100, doc_len=30, seed=404)
    scan = dict(topics.coherence_scan(docs, [2, 3], passes=120, seed=1))
    assert scan[3] >= scan[2], scan
    _report("coherence-scan", f"mean coherence K=3: {scan[3]:.3f} vs K=2: {scan[2]:.3f}")


# --- 5. t-SNE ------------------------------------------------------------------------------


def test_tsne_gradient_clusters_and_trend():
    started = time.perf_counter()

    nprng = np.random.default_rng(505)
    worst = 0.0
    for seed in range(20):
        rng2 = np.random.default_rng(1000 + seed)
        X = rng2.random((8, 3))
        D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
        D = (D + D.T) / 2
        np.fill_diagonal(D, 0.0)
        A = embed.joint_probabilities(D, 3.5)
        coords = nprng.normal(size=(8, 2))
        g = embed.gradient(A, coords)
        fd = np.zeros_like(coords)
        h = 1e-6
        for i in range(8):
            for k in range(2):
                up, dn = coords.copy(), coords.copy()
                up[i, k] += h
                dn[i, k] -= h
                fd[i, k] = (embed.kl_divergence(A, up) - embed.kl_divergence(A, dn)) / (2 * h)
        rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        assert rel <= 1e-4

    n_per = 10
    D = np.full((30, 30), 0.9)
    for c in range(3):
        s = c * n_per
        D[s : s + n_per, s : s + n_per] = 0.05
    np.fill_diagonal(D, 0.0)
    A = embed.joint_probabilities(D, 15.0)
    separations = 0
    for seed in range(10):
        cfg = embed.TsneConfig(
            iters=500,
            learning_rate=200.0,
            exaggeration_iters=100,
            momentum_schedule=((0, 0.5), (100, 0.8)),
            seed=seed,
        )
        emb = embed.tsne_fit(A, cfg)
        trace = emb.kl_trace
        assert statistics.median(trace[-50:]) < statistics.median(trace[100:150])
        C = emb.coords
        within, between = [], []
        for i in range(30):
            for j in range(i + 1, 30):
                dist = float(np.linalg.norm(C[i] - C[j]))
                (within if i // n_per == j // n_per else between).append(dist)
        if np.mean(within) < np.mean(between):
            separations += 1
    elapsed = time.perf_counter() - started
    assert separations >= 9
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    _report(
        "tsne",
        f"max gradient error {worst:.2e}, separation {separations}/10, {elapsed:.1f}s",
    )


# --- 6. Chemical parser ----------------------------------------------------------------------


def test_chemical_parser_golden_and_fuzz():
    lexicon = load_lexicon()
    for text, expected in GOLDEN_FORMULAS:
        assert parse_formula(text).as_dict() == expected, text
    for text, expected in GOLDEN_NAMES:
        assert normalize_species(text, lexicon).symbols() == frozenset(expected), text
    for text in GOLDEN_NEGATIVES:
        with pytest.raises((FormulaError, NotASpeciesError)):
            normalize_species(text, lexicon)
    assert parse_formula("SiO2-CaO-Na2O-P2O5").symbols() == {"Si", "O", "Ca", "Na", "P"}
    assert normalize_species("Indium Tin Oxide", lexicon).symbols() == {"In", "Sn", "O"}
    assert normalize_species("ITO", lexicon).symbols() == {"In", "Sn", "O"}

    rng = random.Random(606)
    alphabet = (
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
        "0123456789()+-.·−–₂₃³⁺⁻ \t\n"
    )
    for _ in range(2000):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        try:
            parse_formula(s)
        except FormulaError:
            pass  # the only permitted failure mode
    golden_count = len(GOLDEN_FORMULAS) + len(GOLDEN_NAMES) + len(GOLDEN_NEGATIVES)
    _report("chemical-parser", f"{golden_count} golden entries, 2000 fuzz inputs")


# --- 7. Query engine ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def query_artifacts(minicorpus):
    stop = textproc.load_stopwords()
    docs = [textproc.tokenize(d.abstract, stop) for d in minicorpus.documents]
    model = topics.fit_lda(docs, K=4, passes=150, seed=11)
    names = pipeline.resolve_topic_names(model, "auto")
    lexicon = load_lexicon()
    markers = element_markers(
        minicorpus, extract_corpus_species(minicorpus, lexicon), lexicon.element_symbols
    )
    rules = atlas.load_rules()
    caption_labels = atlas.label_captions(minicorpus, rules)
    known = {r.label for r in rules}
    return minicorpus, model, markers, caption_labels, names, known


def test_query_engine_matches_brute_force(query_artifacts):
    corpus, model, markers, caption_labels, names, known = query_artifacts
    assert "bioactive" in names.values()

    fig4 = atlas.parse_filter("topic:bioactive AND element:F AND element:Cl")
    got = atlas.query(corpus, model, markers, caption_labels, fig4, names, known_labels=known)
    want_docs, want_caps = brute_force_query(corpus, model, markers, caption_labels, fig4, names)
    assert got.doc_ids == want_docs and got.caption_ids == want_caps
    assert got.doc_ids, "the F+Cl bioactive conjunction must be non-empty on the demo corpus"

    sampler = GrammarSampler(
        topics=sorted(names.values()) + ["0", "3"],
        elements=["F", "Cl", "Si", "O", "Er", "In", "Na", "Ca", "Am"],
        labels=sorted(known)[:12],
        phrases=["bioactive", "sputtering", "upconversion", "solid state synthesis", "zzz"],
        seed=707,
    )
    checked = 0
    for _ in range(500):
        text = sampler.expr()
        expr = atlas.parse_filter(text)
        got = atlas.query(corpus, model, markers, caption_labels, expr, names, known_labels=known)
        want_docs, want_caps = brute_force_query(corpus, model, markers, caption_labels, expr, names)
        assert got.doc_ids == want_docs, text
        assert got.caption_ids == want_caps, text
        checked += 1

    for _ in range(200):
        a, b = sampler.expr(depth=2), sampler.expr(depth=2)
        lhs = atlas.query(
            corpus, model, markers, caption_labels,
            atlas.parse_filter(f"NOT ( ( {a} ) AND ( {b} ) )"), names, known_labels=known,
        )
        rhs = atlas.query(
            corpus, model, markers, caption_labels,
            atlas.parse_filter(f"NOT ( {a} ) OR NOT ( {b} )"), names, known_labels=known,
        )
        assert lhs.doc_ids == rhs.doc_ids, (a, b)
    _report("query-engine", f"{checked} sampled expressions, 200 De Morgan pairs")


# --- 8. Pipeline determinism ----------------------------------------------------------------------


def test_pipeline_determinism(tmp_path_factory, minicorpus):
    started = time.perf_counter()
    hashes = []
    for run in range(2):
        base = tmp_path_factory.mktemp(f"det{run}")
        save_corpus(minicorpus, base / "minicorpus.jsonl")
        config = pipeline.load_config(write_demo_config(base))
        manifest = pipeline.run_pipeline(config)
        assert manifest["artifact_count"] == 8
        digest = {}
        for p in sorted((base / "out").iterdir()):
            if p.name != "manifest.json":
                digest[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        hashes.append(digest)
    elapsed = time.perf_counter() - started
    assert hashes[0] == hashes[1]
    assert len(hashes[0]) == 10  # 8 artifacts, two with meta sidecars
    assert elapsed < 300.0, f"took {elapsed:.1f}s"
    _report("pipeline-determinism", f"8 artifacts identical across reruns, {elapsed:.1f}s")


# --- 9. Service parity -------------------------------------------------------------------------------


def test_service_parity(artifact_dir):
    state = load_artifacts(artifact_dir)
    client = TestClient(create_app(artifact_dir))

    assert client.get("/stats").json() == stats_view(state)
    assert client.get("/map/lda").json() == map_view(state.map_lda)
    assert client.get("/map/ccp").json() == map_view(state.map_ccp)
    assert client.get("/topics").json() == topics_view(state)
    assert client.get("/labels").json() == labels_view(state)

    doc_id = state.corpus.documents[0].doc_id
    assert client.get(f"/doc/{doc_id}").json() == doc_view(state, doc_id)

    overlay = client.get(
        "/overlay/element/F", params={"map": "lda", "mode": "all", "elements": "F,Cl"}
    )
    assert overlay.json() == overlay_view(state, "lda", "all", {"F", "Cl"})

    for expr in (
        "topic:bioactive AND element:F AND element:Cl",
        "*",
        'phrase:"upconversion" OR caption:XRD',
        "NOT element:Si",
    ):
        response = client.post("/query", json={"expr": expr})
        assert response.status_code == 200
        assert response.json() == query_view(state, expr)

    direct = atlas.query(
        state.corpus,
        state.model,
        state.markers,
        state.caption_labels,
        atlas.parse_filter("topic:bioactive AND element:F AND element:Cl"),
        topic_names=state.topic_names,
        known_labels=state.known_labels,
    )
    payload = client.post(
        "/query", json={"expr": "topic:bioactive AND element:F AND element:Cl"}
    ).json()
    assert payload == {"doc_ids": direct.doc_ids, "caption_ids": direct.caption_ids}
    _report("service-parity", "all endpoints equal library views; no explorer build required")
