"""End-to-end pipeline: ingest through maps, with content-hash resumability.

Each stage hashes its parameters and input artifacts into a signature; when
the signature and the produced files are unchanged since the last run the
stage is skipped. Editing only the caption rules therefore re-executes just
the labeling and caption-map stages, not the expensive model fits.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import atlas, chemparse, embed, relevance, textproc, topics
from .corpus import Corpus, ingest_xml_records, load_corpus, save_corpus
from .errors import AtlasError, ConfigError, StageError
from .textproc import SparseVector

ARTIFACT_FILES = {
    "corpus": ("corpus.jsonl",),
    "lda": ("lda.json",),
    "embed_abstracts": ("embed_abstracts.csv", "embed_abstracts.meta.json"),
    "embed_captions": ("embed_captions.csv", "embed_captions.meta.json"),
    "markers": ("markers.csv",),
    "caption_labels": ("caption_labels.json",),
    "map_lda": ("map_lda.json",),
    "map_ccp": ("map_ccp.json",),
}
CLASSIFY_ARTIFACT = ("corpus_relevant.jsonl",)
MANIFEST_NAME = "manifest.json"


@dataclass
class LdaParams:
    topics: int = 15
    passes: int = 500
    alpha: float | None = None
    beta: float = 0.01
    seed: int | None = None


@dataclass
class TsneParams:
    perplexity: float = 30.0
    iters: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    seed: int | None = None


@dataclass
class PipelineConfig:
    input: Path
    output_dir: Path
    stopwords: Path | None = None
    lexicon: Path | None = None
    rules: Path | None = None
    classifier_model: Path | None = None
    lda: LdaParams = field(default_factory=LdaParams)
    tsne: TsneParams = field(default_factory=TsneParams)
    min_species_count: int = 1
    topic_names: str | dict[int, str] | None = "auto"


def load_config(path: str | Path) -> PipelineConfig:
    """Read a pipeline config JSON; relative paths resolve against the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent

    def resolve(key: str) -> Path | None:
        value = raw.get(key)
        return (base / value) if value else None

    lda_raw = raw.get("lda", {})
    tsne_raw = raw.get("tsne", {})
    classifier = raw.get("classifier") or {}
    topic_names = raw.get("topic_names", "auto")
    if isinstance(topic_names, dict):
        topic_names = {int(k): str(v) for k, v in topic_names.items()}
    config = PipelineConfig(
        input=base / raw["input"] if "input" in raw else None,
        output_dir=base / raw.get("output_dir", "out"),
        stopwords=resolve("stopwords"),
        lexicon=resolve("lexicon"),
        rules=resolve("rules"),
        classifier_model=(base / classifier["model"]) if classifier.get("model") else None,
        lda=LdaParams(
            topics=int(lda_raw.get("topics", 15)),
            passes=int(lda_raw.get("passes", 500)),
            alpha=lda_raw.get("alpha"),
            beta=float(lda_raw.get("beta", 0.01)),
            seed=lda_raw.get("seed"),
        ),
        tsne=TsneParams(
            perplexity=float(tsne_raw.get("perplexity", 30.0)),
            iters=int(tsne_raw.get("iters", 1000)),
            learning_rate=float(tsne_raw.get("learning_rate", 200.0)),
            early_exaggeration=float(tsne_raw.get("early_exaggeration", 12.0)),
            exaggeration_iters=int(tsne_raw.get("exaggeration_iters", 250)),
            seed=tsne_raw.get("seed"),
        ),
        min_species_count=int(raw.get("chem", {}).get("min_species_count", 1)),
        topic_names=topic_names,
    )
    validate_config(config)
    return config


def validate_config(config: PipelineConfig) -> None:
    if config.input is None or not Path(config.input).exists():
        raise ConfigError(f"input does not exist: {config.input}")
    for name in ("stopwords", "lexicon", "rules", "classifier_model"):
        p = getattr(config, name)
        if p is not None and not Path(p).exists():
            raise ConfigError(f"{name} file does not exist: {p}")
    if config.lda.seed is None or config.tsne.seed is None:
        raise ConfigError("lda.seed and tsne.seed must be set explicitly; wall-clock seeding is refused")
    if config.lda.topics < 2:
        raise ConfigError(f"lda.topics must be >= 2, got {config.lda.topics}")
    if config.lda.passes < 1:
        raise ConfigError(f"lda.passes must be >= 1, got {config.lda.passes}")


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resource_hash(name: str) -> str:
    data = resources.files("litatlas.data").joinpath(name).read_bytes()
    return hashlib.sha256(data).hexdigest()


def _signature(stage: str, params: dict, inputs: dict[str, str]) -> str:
    payload = json.dumps({"stage": stage, "params": params, "inputs": inputs}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def resolve_topic_names(
    model: topics.TopicModel, spec: str | dict[int, str] | None
) -> dict[int, str]:
    """Topic id -> display name.

    "auto" names each topic by its most probable term (ties get the id as a
    suffix); a dict is taken verbatim; None leaves ids as names.
    """
    if spec is None:
        return {}
    if isinstance(spec, dict):
        return dict(spec)
    if spec != "auto":
        raise ConfigError(f"topic_names must be 'auto', a mapping, or null; got {spec!r}")
    names: dict[int, str] = {}
    used: set[str] = set()
    for k in range(model.K):
        name = topics.top_words(model, k, 1)[0][0]
        if name in used:
            name = f"{name}-{k}"
        used.add(name)
        names[k] = name
    return names


def tfidf_vectors(token_lists: list[textproc.TokenList], min_df: int = 1) -> list[SparseVector]:
    vocab = textproc.build_vocabulary(token_lists, min_df=min_df)
    return [textproc.vectorize_tfidf(doc, vocab) for doc in token_lists]


def _embed_items(
    token_lists: list[textproc.TokenList], params: TsneParams
) -> embed.Embedding2D:
    vectors = tfidf_vectors(token_lists)
    distances = textproc.pairwise_cosine_distance(vectors)
    affinity = embed.joint_probabilities(distances, params.perplexity)
    config = embed.TsneConfig(
        iters=params.iters,
        learning_rate=params.learning_rate,
        early_exaggeration=params.early_exaggeration,
        exaggeration_iters=params.exaggeration_iters,
        momentum_schedule=((0, 0.5), (params.exaggeration_iters, 0.8)),
        seed=params.seed,
    )
    return embed.tsne_fit(affinity, config)


def _apply_classifier(corpus: Corpus, model_path: Path) -> Corpus:
    model = relevance.load_model(model_path)
    meta = model.training_meta
    if "vocab" not in meta or "idf" not in meta:
        raise AtlasError("classifier model lacks vocab/idf metadata; retrain with this toolkit")
    index = {t: i for i, t in enumerate(meta["vocab"])}
    idf = meta["idf"]
    stop = textproc.load_stopwords()
    kept = []
    for doc in corpus.documents:
        present = sorted({index[t] for t in textproc.tokenize(doc.abstract, stop) if t in index})
        vec = SparseVector(
            entries=tuple((d, idf[d]) for d in present if idf[d] > 0), dim=len(index)
        )
        if relevance.classify(model, vec) == 1:
            kept.append(doc)
    return Corpus(documents=kept, source_manifest=list(corpus.source_manifest))


@dataclass
class StageStatus:
    stage: str
    state: str  # pending | running | done | failed
    elapsed: float = 0.0
    signature: str = ""
    artifacts: dict[str, str] = field(default_factory=dict)
    reused: bool = False


class _Runner:
    def __init__(self, config: PipelineConfig, log=None):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.log = log or (lambda msg: None)
        manifest_path = self.out / MANIFEST_NAME
        self.previous: dict = {}
        if manifest_path.exists():
            try:
                self.previous = json.loads(manifest_path.read_text(encoding="utf-8")).get("stages", {})
            except json.JSONDecodeError:
                self.previous = {}
        self.statuses: dict[str, StageStatus] = {}

    def artifact_hash(self, stage: str) -> str:
        combined = hashlib.sha256()
        for name in sorted(self.statuses[stage].artifacts):
            combined.update(self.statuses[stage].artifacts[name].encode())
        return combined.hexdigest()

    def run_stage(self, stage: str, params: dict, inputs: dict[str, str], files: tuple[str, ...], builder) -> None:
        signature = _signature(stage, params, inputs)
        status = StageStatus(stage=stage, state="pending", signature=signature)
        self.statuses[stage] = status
        prev = self.previous.get(stage)
        if prev and prev.get("signature") == signature:
            paths = [self.out / f for f in files]
            if all(p.exists() for p in paths):
                hashes = {f: _file_hash(self.out / f) for f in files}
                if hashes == prev.get("artifacts"):
                    status.state = "done"
                    status.artifacts = hashes
                    status.reused = True
                    self.log(f"{stage}: unchanged, skipped")
                    return
        status.state = "running"
        started = time.perf_counter()
        try:
            builder()
        except Exception as exc:
            status.state = "failed"
            status.elapsed = time.perf_counter() - started
            raise StageError(stage, str(exc)) from exc
        status.elapsed = time.perf_counter() - started
        status.artifacts = {f: _file_hash(self.out / f) for f in files}
        status.state = "done"
        self.log(f"{stage}: done in {status.elapsed:.2f}s")

    def manifest(self) -> dict:
        return {
            "stages": {
                name: {
                    "state": s.state,
                    "elapsed": round(s.elapsed, 6),
                    "signature": s.signature,
                    "artifacts": s.artifacts,
                    "reused": s.reused,
                }
                for name, s in self.statuses.items()
            },
            "artifact_count": sum(1 for s in self.statuses.values() if s.artifacts),
        }


def run_pipeline(config: PipelineConfig, log=None) -> dict:
    """Execute all stages in dependency order and write the manifest.

    Returns the manifest dict. Raises ConfigError before any stage runs when
    the configuration is invalid, and StageError when a stage fails.
    """
    validate_config(config)
    runner = _Runner(config, log=log)
    out = runner.out

    stopwords_hash = _file_hash(config.stopwords) if config.stopwords else _resource_hash("stopwords.txt")
    lexicon_hash = _file_hash(config.lexicon) if config.lexicon else _resource_hash("element_lexicon.json")
    rules_hash = _file_hash(config.rules) if config.rules else _resource_hash("caption_rules.json")
    stopwords = textproc.load_stopwords(config.stopwords)
    lexicon = chemparse.load_lexicon(config.lexicon)
    rules = atlas.load_rules(config.rules)

    # --- ingest ------------------------------------------------------------
    input_path = Path(config.input)
    if input_path.is_dir():
        xml_files = sorted(input_path.glob("*.xml"))
        input_hash = _signature("xml-dir", {}, {str(p): _file_hash(p) for p in xml_files})
    else:
        input_hash = _file_hash(input_path)

    def build_ingest():
        corpus = ingest_xml_records(sorted(input_path.glob("*.xml"))) if input_path.is_dir() else load_corpus(input_path)
        save_corpus(corpus, out / "corpus.jsonl")

    runner.run_stage("ingest", {}, {"input": input_hash}, ARTIFACT_FILES["corpus"], build_ingest)
    corpus_file = "corpus.jsonl"

    # --- optional relevance filter ------------------------------------------
    if config.classifier_model is not None:
        classifier_hash = _file_hash(config.classifier_model)

        def build_classify():
            corpus = load_corpus(out / "corpus.jsonl")
            save_corpus(_apply_classifier(corpus, config.classifier_model), out / CLASSIFY_ARTIFACT[0])

        runner.run_stage(
            "classify",
            {},
            {"corpus": runner.artifact_hash("ingest"), "model": classifier_hash},
            CLASSIFY_ARTIFACT,
            build_classify,
        )
        corpus_file = CLASSIFY_ARTIFACT[0]
    corpus_hash = runner.artifact_hash("classify" if config.classifier_model else "ingest")

    def read_corpus() -> Corpus:
        return load_corpus(out / corpus_file)

    # --- lda -----------------------------------------------------------------
    lda_params = {
        "topics": config.lda.topics,
        "passes": config.lda.passes,
        "alpha": config.lda.alpha,
        "beta": config.lda.beta,
        "seed": config.lda.seed,
    }

    def build_lda():
        corpus = read_corpus()
        docs = [textproc.tokenize(d.abstract, stopwords) for d in corpus.documents]
        model = topics.fit_lda(
            docs,
            K=config.lda.topics,
            passes=config.lda.passes,
            alpha=config.lda.alpha,
            beta=config.lda.beta,
            seed=config.lda.seed,
        )
        topics.save_topic_model(model, out / "lda.json")

    runner.run_stage(
        "lda",
        lda_params,
        {"corpus": corpus_hash, "stopwords": stopwords_hash},
        ARTIFACT_FILES["lda"],
        build_lda,
    )

    # --- embeddings ----------------------------------------------------------
    tsne_params = {
        "perplexity": config.tsne.perplexity,
        "iters": config.tsne.iters,
        "learning_rate": config.tsne.learning_rate,
        "early_exaggeration": config.tsne.early_exaggeration,
        "exaggeration_iters": config.tsne.exaggeration_iters,
        "seed": config.tsne.seed,
    }

    def build_embed_abstracts():
        corpus = read_corpus()
        token_lists = [textproc.tokenize(d.abstract, stopwords) for d in corpus.documents]
        embedding = _embed_items(token_lists, config.tsne)
        embed.save_embedding(embedding, corpus.doc_ids(), out / "embed_abstracts.csv")

    runner.run_stage(
        "embed_abstracts",
        {**tsne_params, "target": "abstracts"},
        {"corpus": corpus_hash, "stopwords": stopwords_hash},
        ARTIFACT_FILES["embed_abstracts"],
        build_embed_abstracts,
    )

    def build_embed_captions():
        corpus = read_corpus()
        captions = corpus.captions()
        token_lists = [textproc.tokenize(c.text, stopwords) for c in captions]
        embedding = _embed_items(token_lists, config.tsne)
        embed.save_embedding(embedding, [c.caption_id for c in captions], out / "embed_captions.csv")

    runner.run_stage(
        "embed_captions",
        {**tsne_params, "target": "captions"},
        {"corpus": corpus_hash, "stopwords": stopwords_hash},
        ARTIFACT_FILES["embed_captions"],
        build_embed_captions,
    )

    # --- chemistry markers -----------------------------------------------------
    def build_markers():
        corpus = read_corpus()
        species = chemparse.extract_corpus_species(corpus, lexicon, config.min_species_count)
        markers = chemparse.element_markers(corpus, species, lexicon.element_symbols)
        chemparse.save_markers(markers, out / "markers.csv")

    runner.run_stage(
        "chem",
        {"min_species_count": config.min_species_count},
        {"corpus": corpus_hash, "lexicon": lexicon_hash},
        ARTIFACT_FILES["markers"],
        build_markers,
    )

    # --- caption labels ---------------------------------------------------------
    def build_labels():
        corpus = read_corpus()
        labels = atlas.label_captions(corpus, rules)
        payload = {
            "rules": [
                {"label": r.label, "priority": r.priority, "patterns": list(r.patterns)}
                for r in rules
            ],
            "labels": labels,
        }
        (out / "caption_labels.json").write_text(
            json.dumps(payload, ensure_ascii=False, separators=(",", ":")), encoding="utf-8"
        )

    runner.run_stage(
        "labels",
        {},
        {"corpus": corpus_hash, "rules": rules_hash},
        ARTIFACT_FILES["caption_labels"],
        build_labels,
    )

    # --- maps ---------------------------------------------------------------------
    names_spec = config.topic_names
    names_param = names_spec if isinstance(names_spec, str) or names_spec is None else {
        str(k): v for k, v in names_spec.items()
    }

    def build_map_lda():
        corpus = read_corpus()
        model = topics.load_topic_model(out / "lda.json")
        embedding, ids = embed.load_embedding(out / "embed_abstracts.csv")
        if ids != corpus.doc_ids():
            raise AtlasError("abstract embedding ids do not match corpus")
        names = resolve_topic_names(model, names_spec)
        atlas.export_map(atlas.build_lda_map(embedding, ids, model, names), out / "map_lda.json")

    runner.run_stage(
        "map_lda",
        {"topic_names": names_param},
        {
            "lda": runner.artifact_hash("lda"),
            "embedding": runner.artifact_hash("embed_abstracts"),
        },
        ARTIFACT_FILES["map_lda"],
        build_map_lda,
    )

    def build_map_ccp():
        embedding, ids = embed.load_embedding(out / "embed_captions.csv")
        payload = json.loads((out / "caption_labels.json").read_text(encoding="utf-8"))
        atlas.export_map(atlas.build_ccp_map(embedding, ids, payload["labels"]), out / "map_ccp.json")

    runner.run_stage(
        "map_ccp",
        {},
        {
            "embedding": runner.artifact_hash("embed_captions"),
            "labels": runner.artifact_hash("labels"),
        },
        ARTIFACT_FILES["map_ccp"],
        build_map_ccp,
    )

    manifest = runner.manifest()
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    return manifest
