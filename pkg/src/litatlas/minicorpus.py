"""Deterministic synthetic demo corpus.

200 article records spread over four planted themes (bioactive glasses, rare
earth luminescence, thin films, glass ceramics) with theme-typical chemistry
in the abstracts and instrument-typical figure captions. Every record is
generated from a seeded RNG, so the corpus is bit-stable and suitable for
determinism tests and demos.
"""

from __future__ import annotations

import random
from importlib import resources
from pathlib import Path

from .corpus import Caption, Corpus, Document, make_caption_id

THEMES = ("bioactive", "luminescence", "films", "ceramics")

_THEME_WORDS = {
    "bioactive": [
        "bioactive", "scaffold", "apatite", "bone", "implant", "osteoblast", "regeneration",
        "simulated", "body", "fluid", "cytotoxicity", "biocompatibility", "degradation",
        "mineralization", "porosity", "tissue", "antibacterial", "mesoporous",
    ],
    "luminescence": [
        "luminescence", "emission", "doped", "phosphor", "upconversion", "laser", "excitation",
        "infrared", "lifetime", "quantum", "radiative", "spectroscopy", "ion", "fluorescence",
        "intensity", "pumping", "gain", "amplifier",
    ],
    "films": [
        "films", "sputtering", "substrate", "coating", "deposition", "transparent",
        "conductivity", "electrode", "resistivity", "thickness", "adhesion", "roughness",
        "magnetron", "vacuum", "photovoltaic", "display", "sheet", "carrier",
    ],
    "ceramics": [
        "ceramics", "crystallization", "nucleation", "sintering", "microstructure", "thermal",
        "annealing", "phase", "grain", "densification", "hardness", "toughness", "kinetics",
        "viscosity", "devitrification", "refractory", "expansion", "strength",
    ],
}

_THEME_FORMULAS = {
    "bioactive": ["SiO2-CaO-Na2O-P2O5", "Ca3(PO4)2", "P2O5", "CaO", "SiO2", "Na2O"],
    "luminescence": ["Er2O3", "Yb2O3", "Nd2O3", "TeO2", "Er3+", "Yb3+", "Tm3+"],
    "films": ["ZnO", "SnO2", "TiO2", "In2O3", "SiO2", "Al2O3"],
    "ceramics": ["Al2O3", "Li2O", "ZrO2", "MgO", "BaO", "B2O3"],
}

_THEME_CAPTIONS = {
    "bioactive": [
        "SEM micrograph of the apatite layer formed on {f} pellets",
        "XRD patterns of the {f} scaffold after immersion",
        "FTIR spectra of the mineralized {f} surface",
        "Optical micrograph of bone ingrowth at the {f} interface",
        "Weight loss of {f} samples in simulated body fluid",
    ],
    "luminescence": [
        "Emission spectra of {f} doped glass under 980 nm excitation",
        "PLE spectra of the {f} phosphor",
        "Absorption spectra of the {f} doped glasses",
        "Energy level diagram of the {f} upconversion process",
        "Luminescence decay curves of {f} samples",
    ],
    "films": [
        "AFM topography of the {f} film surface",
        "XRD patterns of {f} films sputtered at increasing power",
        "Transmittance spectra of the {f} coating",
        "SEM cross-section of the {f} multilayer stack",
        "Sheet resistance of {f} electrodes versus thickness",
    ],
    "ceramics": [
        "DSC curves of {f} glass at different heating rates",
        "TEM image of the crystallized {f} phase",
        "XRD patterns of annealed {f} glass-ceramics",
        "Vickers hardness of {f} versus sintering temperature",
        "Fracture surface of the {f} ceramic after indentation",
    ],
}

_JOURNALS = [
    "Journal of Non-Crystalline Solids",
    "Ceramics International",
    "Acta Materialia",
    "Materials Letters",
    "Optical Materials",
]

_AUTHORS = [
    "A. Sharma", "J. Martínez", "K. Müller", "L. Chen", "M. Rossi", "N. Kowalski",
    "P. Ólafsson", "R. Ferreira", "S. Tanaka", "T. Nguyễn", "V. Petrov", "E. Dubois",
]

_SHARED = ["glass", "samples", "properties", "structure", "temperature", "analysis"]

# A wide verb pool keeps boilerplate terms individually rare, so topics anchor
# on the theme vocabulary instead of shared academic filler.
_VERBS = [
    "examines", "investigates", "reports", "addresses", "explores", "analyzes", "considers",
    "evaluates", "probes", "quantifies", "models", "surveys", "presents", "discusses",
    "demonstrates", "highlights", "reviews", "clarifies", "assesses", "measures", "compares",
    "characterizes", "optimizes", "correlates", "predicts", "establishes", "confirms",
    "validates", "interprets", "describes",
]


def _abstract(rng: random.Random, theme: str, extra_formulas: list[str]) -> str:
    w = rng.sample(_THEME_WORDS[theme], 10)
    formulas = " and ".join(extra_formulas) if extra_formulas else rng.choice(_THEME_FORMULAS[theme])
    return " ".join(
        [
            f"This {theme} study {rng.choice(_VERBS)} the {w[0]}, {w[1]} and {w[2]} of "
            f"{theme} {rng.choice(_SHARED)} prepared from {formulas}.",
            f"We find that {w[3]} and {w[4]} are governed by {w[5]} during {w[6]}.",
            f"The {rng.choice(_THEME_FORMULAS[theme])} system {rng.choice(_VERBS)} "
            f"{w[7]} relevant to {theme} applications.",
            f"Keywords: {theme}, {w[8]}, {w[9]}.",
        ]
    )


_CAPTION_QUALIFIERS = [
    "inset shows magnified view", "scale bar applies throughout", "arrows mark defects",
    "representative region shown", "typical morphology displayed", "dashed lines guide the eye",
    "error bars denote deviation", "legend gives compositions", "before and after treatment",
    "recorded at room conditions", "measured in duplicate runs", "color online",
]


def _captions(rng: random.Random, theme: str, doc_id: str) -> tuple[Caption, ...]:
    n = rng.randint(1, 3)
    templates = rng.sample(_THEME_CAPTIONS[theme], n)
    captions = []
    for i, tpl in enumerate(templates, start=1):
        # Sample codes plus varied qualifiers keep caption token sets distinct;
        # exactly tied distance rows pin the perplexity floor.
        code = f"{rng.choice('ABCDEFGH')}{rng.randint(1, 99)}"
        text = tpl.format(f=rng.choice(_THEME_FORMULAS[theme])) + f" for sample {code}"
        if rng.random() < 0.7:
            text += f" ({rng.choice(_CAPTION_QUALIFIERS)})"
        captions.append(Caption(make_caption_id(doc_id, i), text, i))
    return tuple(captions)


def generate_minicorpus_with_themes(n_docs: int = 200, seed: int = 7) -> tuple[Corpus, list[str]]:
    """Generate the demo corpus together with the planted theme of each doc."""
    rng = random.Random(seed)
    documents = []
    themes = []
    for i in range(n_docs):
        theme = THEMES[i % len(THEMES)]
        doc_id = f"10.5555/atlas.{i:04d}"
        extra = []
        if theme == "bioactive":
            # Chlorine/fluorine chemistry only inside part of the bioactive set,
            # so element overlays on this theme are non-trivial.
            r = rng.random()
            if r < 0.35:
                extra = ["CaF2", "NaCl"]
            elif r < 0.55:
                extra = ["CaF2"]
            elif r < 0.70:
                extra = ["NaCl"]
        elif theme == "films" and rng.random() < 0.5:
            extra = ["indium tin oxide (ITO)"]
        abstract = _abstract(rng, theme, extra)
        title_formula = rng.choice(_THEME_FORMULAS[theme])
        documents.append(
            Document(
                doc_id=doc_id,
                title=f"Study of {theme} {rng.choice(_SHARED)} in the {title_formula} system",
                abstract=abstract,
                journal=rng.choice(_JOURNALS),
                authors=tuple(rng.sample(_AUTHORS, rng.randint(1, 3))),
                captions=_captions(rng, theme, doc_id),
            )
        )
        themes.append(theme)
    return Corpus(documents=documents, source_manifest=[{"path": f"generated(seed={seed})", "records": n_docs}]), themes


def generate_minicorpus(n_docs: int = 200, seed: int = 7) -> Corpus:
    return generate_minicorpus_with_themes(n_docs, seed)[0]


def bundled_minicorpus_path() -> Path:
    """Path of the pre-generated corpus shipped with the package."""
    return Path(str(resources.files("litatlas.data").joinpath("minicorpus.jsonl")))
