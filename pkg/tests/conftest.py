import json
from pathlib import Path

import pytest

from litatlas import pipeline
from litatlas.corpus import save_corpus
from litatlas.minicorpus import generate_minicorpus_with_themes

DEMO_LDA = {"topics": 4, "passes": 150, "beta": 0.01, "seed": 11}
DEMO_TSNE = {
    "perplexity": 25.0,
    "iters": 300,
    "learning_rate": 200.0,
    "early_exaggeration": 12.0,
    "exaggeration_iters": 80,
    "seed": 12,
}


@pytest.fixture(scope="session")
def minicorpus_with_themes():
    return generate_minicorpus_with_themes()


@pytest.fixture(scope="session")
def minicorpus(minicorpus_with_themes):
    return minicorpus_with_themes[0]


def write_demo_config(base: Path, output_dir: str = "out") -> Path:
    config = {
        "input": "minicorpus.jsonl",
        "output_dir": output_dir,
        "lda": DEMO_LDA,
        "tsne": DEMO_TSNE,
        "chem": {"min_species_count": 1},
        "topic_names": "auto",
    }
    path = base / "atlas.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory, minicorpus) -> Path:
    """One full pipeline run over the bundled demo corpus."""
    base = tmp_path_factory.mktemp("pipeline")
    save_corpus(minicorpus, base / "minicorpus.jsonl")
    config = pipeline.load_config(write_demo_config(base))
    pipeline.run_pipeline(config)
    return base / "out"
