"""Command-line interface.

Every command is a thin wrapper over the library: parse arguments, call the
corresponding functions, write artifacts. Exit codes: 0 success, 2 validation
error, 3 stage failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import atlas as atlas_mod
from . import chemparse, embed, pipeline, relevance, textproc, topics
from .corpus import ingest_xml_records, load_corpus, save_corpus
from .errors import AtlasError, ConfigError, FilterSyntaxError, StageError, UnknownNameError
from .minicorpus import generate_minicorpus


def _fail_validation(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _fail_stage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(3)


@click.group()
def main():
    """Literature knowledge-atlas toolkit."""


@main.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def ingest(source: Path, output: Path):
    """Ingest XML records (directory) or a JSONL corpus into a corpus file."""
    try:
        corpus = ingest_xml_records(sorted(source.glob("*.xml"))) if source.is_dir() else load_corpus(source)
        save_corpus(corpus, output)
    except AtlasError as exc:
        _fail_validation(str(exc))
    click.echo(f"wrote {output} ({len(corpus)} documents)")


@main.group()
def classify():
    """Train or apply the relevance classifier."""


def _labeled_vectors(path: Path):
    corpus, labels = relevance.load_labeled_corpus(path)
    stop = textproc.load_stopwords()
    token_lists = [textproc.tokenize(d.abstract, stop) for d in corpus.documents]
    vocab = textproc.build_vocabulary(token_lists)
    vectors = [textproc.vectorize_tfidf(t, vocab) for t in token_lists]
    return vocab, list(zip(vectors, labels))


@classify.command("train")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
@click.option("--learning-rate", default=0.5, show_default=True)
@click.option("--l2", default=1e-4, show_default=True)
@click.option("--iters", default=1000, show_default=True)
@click.option("--split", "split_ratio", default=0.8, show_default=True)
@click.option("--seed", default=0, show_default=True)
def classify_train(corpus_path, output, learning_rate, l2, iters, split_ratio, seed):
    """Train on a labeled corpus and report held-out metrics."""
    try:
        vocab, dataset = _labeled_vectors(corpus_path)
        train_set, test_set = relevance.split(dataset, split_ratio, seed)
        config = relevance.TrainConfig(
            learning_rate=learning_rate, l2_lambda=l2, max_iters=iters, seed=seed
        )
        model = relevance.train_logreg(train_set, config)
        import math

        model.training_meta["vocab"] = list(vocab.terms)
        model.training_meta["idf"] = [
            math.log(vocab.corpus_size / df) for df in vocab.doc_freq
        ]
        relevance.save_model(model, output)
        if test_set:
            metrics = relevance.evaluate(model, test_set)
            click.echo(
                f"held-out accuracy={metrics.accuracy:.3f} precision={metrics.precision:.3f} "
                f"recall={metrics.recall:.3f}"
            )
    except AtlasError as exc:
        _fail_validation(str(exc))
    click.echo(f"wrote {output}")


@classify.command("apply")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
@click.option("--drop", is_flag=True, help="Drop documents classified as non-relevant.")
def classify_apply(model_path, corpus_path, output, drop):
    """Tag corpus documents with the classifier's relevance decision."""
    import dataclasses

    try:
        corpus = load_corpus(corpus_path)
        model = relevance.load_model(model_path)
        meta = model.training_meta
        if "vocab" not in meta or "idf" not in meta:
            _fail_validation("model has no vocab/idf metadata; retrain with `atlas classify train`")
        index = {t: i for i, t in enumerate(meta["vocab"])}
        stop = textproc.load_stopwords()
        tagged = []
        for doc in corpus.documents:
            present = sorted({index[t] for t in textproc.tokenize(doc.abstract, stop) if t in index})
            vec = textproc.SparseVector(
                entries=tuple((d, meta["idf"][d]) for d in present if meta["idf"][d] > 0),
                dim=len(index),
            )
            verdict = relevance.classify(model, vec) == 1
            if drop and not verdict:
                continue
            tagged.append(dataclasses.replace(doc, relevant=verdict))
        out_corpus = dataclasses.replace(corpus, documents=tagged)
        save_corpus(out_corpus, output)
    except AtlasError as exc:
        _fail_validation(str(exc))
    click.echo(f"wrote {output} ({len(tagged)} documents)")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--topics", "n_topics", default=15, show_default=True)
@click.option("--passes", default=500, show_default=True)
@click.option("--alpha", default=None, type=float)
@click.option("--beta", default=0.01, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def lda(corpus_path, n_topics, passes, alpha, beta, seed, output):
    """Fit the topic model over corpus abstracts."""
    try:
        corpus = load_corpus(corpus_path)
        stop = textproc.load_stopwords()
        docs = [textproc.tokenize(d.abstract, stop) for d in corpus.documents]
        model = topics.fit_lda(docs, K=n_topics, passes=passes, alpha=alpha, beta=beta, seed=seed)
        topics.save_topic_model(model, output)
    except AtlasError as exc:
        _fail_stage(str(exc))
    click.echo(f"wrote {output} (K={n_topics}, passes={passes})")


@main.command("embed")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--target", type=click.Choice(["abstracts", "captions"]), default="abstracts", show_default=True)
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iters", default=1000, show_default=True)
@click.option("--learning-rate", default=200.0, show_default=True)
@click.option("--exaggeration-iters", default=250, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def embed_cmd(corpus_path, target, perplexity, iters, learning_rate, exaggeration_iters, seed, output):
    """Project abstracts or captions to 2-D coordinates."""
    try:
        corpus = load_corpus(corpus_path)
        stop = textproc.load_stopwords()
        if target == "abstracts":
            ids = corpus.doc_ids()
            texts = [d.abstract for d in corpus.documents]
        else:
            captions = corpus.captions()
            ids = [c.caption_id for c in captions]
            texts = [c.text for c in captions]
        params = pipeline.TsneParams(
            perplexity=perplexity,
            iters=iters,
            learning_rate=learning_rate,
            exaggeration_iters=exaggeration_iters,
            seed=seed,
        )
        embedding = pipeline._embed_items([textproc.tokenize(t, stop) for t in texts], params)
        embed.save_embedding(embedding, ids, output)
    except AtlasError as exc:
        _fail_stage(str(exc))
    click.echo(f"wrote {output} ({len(ids)} points)")


@main.group()
def chem():
    """Chemical species extraction."""


@chem.command("extract")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--min-count", default=1, show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def chem_extract(corpus_path, lexicon_path, min_count, output):
    """Extract species from abstracts and write the element marker matrix."""
    try:
        corpus = load_corpus(corpus_path)
        lexicon = chemparse.load_lexicon(lexicon_path)
        species = chemparse.extract_corpus_species(corpus, lexicon, min_count)
        markers = chemparse.element_markers(corpus, species, lexicon.element_symbols)
        chemparse.save_markers(markers, output)
    except AtlasError as exc:
        _fail_stage(str(exc))
    click.echo(f"wrote {output}")


@main.group()
def captions():
    """Caption processing."""


@captions.command("label")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--rules", "rules_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def captions_label(corpus_path, rules_path, output):
    """Assign image-type labels to captions by rule-based string search."""
    try:
        corpus = load_corpus(corpus_path)
        rules = atlas_mod.load_rules(rules_path)
        labels = atlas_mod.label_captions(corpus, rules)
        payload = {
            "rules": [
                {"label": r.label, "priority": r.priority, "patterns": list(r.patterns)}
                for r in rules
            ],
            "labels": labels,
        }
        Path(output).write_text(
            json.dumps(payload, ensure_ascii=False, separators=(",", ":")), encoding="utf-8"
        )
    except AtlasError as exc:
        _fail_stage(str(exc))
    labeled = sum(1 for v in labels.values() if v)
    click.echo(f"wrote {output} ({labeled}/{len(labels)} captions labeled)")


@main.group("map")
def map_group():
    """Map artifact construction."""


@map_group.command("build")
@click.option("--type", "map_type", type=click.Choice(["lda", "ccp"]), required=True)
@click.option("--embedding", "embedding_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", "model_path", type=click.Path(path_type=Path), default=None)
@click.option("--labels", "labels_path", type=click.Path(path_type=Path), default=None)
@click.option("--topic-names", "topic_names", default="auto", show_default=True,
              help="'auto', 'none', or a JSON file mapping topic id to name.")
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True)
def map_build(map_type, embedding_path, model_path, labels_path, topic_names, output):
    """Build a map JSON from an embedding plus groups."""
    try:
        embedding, ids = embed.load_embedding(embedding_path)
        if map_type == "lda":
            if model_path is None:
                _fail_validation("--model is required for the lda map")
            model = topics.load_topic_model(model_path)
            if topic_names == "auto":
                names = pipeline.resolve_topic_names(model, "auto")
            elif topic_names == "none":
                names = {}
            else:
                raw = json.loads(Path(topic_names).read_text(encoding="utf-8"))
                names = {int(k): str(v) for k, v in raw.items()}
            map_doc = atlas_mod.build_lda_map(embedding, ids, model, names)
        else:
            if labels_path is None:
                _fail_validation("--labels is required for the ccp map")
            payload = json.loads(Path(labels_path).read_text(encoding="utf-8"))
            map_doc = atlas_mod.build_ccp_map(embedding, ids, payload["labels"])
        atlas_mod.export_map(map_doc, output)
    except AtlasError as exc:
        _fail_stage(str(exc))
    click.echo(f"wrote {output}")


@main.command()
@click.argument("expr")
@click.option("--dir", "artifact_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--captions", "show_captions", is_flag=True, help="Print caption ids instead.")
def query(expr, artifact_dir, show_captions):
    """Evaluate a filter expression; prints matching doc ids, one per line."""
    from .service.app import load_artifacts, query_view

    try:
        state = load_artifacts(artifact_dir)
        result = query_view(state, expr)
    except (FilterSyntaxError, UnknownNameError) as exc:
        _fail_validation(str(exc))
    except AtlasError as exc:
        _fail_stage(str(exc))
    for item in result["caption_ids"] if show_captions else result["doc_ids"]:
        click.echo(item)


@main.command()
@click.option("--dir", "artifact_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--frontend", type=click.Path(path_type=Path), default=None,
              help="Directory of built explorer assets to serve at /.")
def serve(artifact_dir, port, host, frontend):
    """Serve the artifact directory over HTTP (read-only)."""
    import uvicorn

    from .service.app import create_app

    try:
        app = create_app(artifact_dir, frontend_dir=frontend)
    except AtlasError as exc:
        _fail_validation(str(exc))
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), required=True)
def run(config_path):
    """Run the full pipeline described by a config file."""
    try:
        config = pipeline.load_config(config_path)
    except ConfigError as exc:
        _fail_validation(str(exc))
    try:
        manifest = pipeline.run_pipeline(config, log=click.echo)
    except StageError as exc:
        _fail_stage(str(exc))
    click.echo(f"{manifest['artifact_count']} artifacts in {config.output_dir}")


@main.command()
@click.option("-o", "--output", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--docs", default=200, show_default=True)
@click.option("--seed", default=7, show_default=True)
def demo(out_dir, docs, seed):
    """Materialize the bundled demo corpus and a runnable pipeline config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate_minicorpus(docs, seed)
    save_corpus(corpus, out_dir / "minicorpus.jsonl")
    config = {
        "input": "minicorpus.jsonl",
        "output_dir": "out",
        "lda": {"topics": 4, "passes": 150, "beta": 0.01, "seed": 11},
        "tsne": {"perplexity": 25.0, "iters": 300, "learning_rate": 200.0,
                 "early_exaggeration": 12.0, "exaggeration_iters": 80, "seed": 12},
        "chem": {"min_species_count": 1},
        "topic_names": "auto",
    }
    (out_dir / "atlas.json").write_text(json.dumps(config, indent=1), encoding="utf-8")
    click.echo(f"wrote {out_dir / 'minicorpus.jsonl'} and {out_dir / 'atlas.json'}")
    click.echo(f"next: atlas run --config {out_dir / 'atlas.json'}")


if __name__ == "__main__":
    main()
