"""Chemical species extraction: formulas, element symbols and compound names.

A recursive-descent grammar handles formulas (parenthesized groups, fractional
coefficients, hydrate dots, charge suffixes, Unicode sub/superscripts); a
lexicon maps compound and material names to formulas. Everything reduces to
per-document binary element markers.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import AtlasError, FormulaError, NotASpeciesError

ELEMENT_SYMBOLS: tuple[str, ...] = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd",
    "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
    "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
    "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg",
    "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)

_ELEMENT_SET = frozenset(ELEMENT_SYMBOLS)

# Symbols that double as English words or abbreviations; as bare tokens they
# are only accepted next to another recognized species. Single letters are all
# ambiguous in prose (I, C for Celsius, K for Kelvin, V for volt, ...).
AMBIGUOUS_SYMBOLS: frozenset[str] = frozenset(
    {s for s in ELEMENT_SYMBOLS if len(s) == 1}
    | {"In", "As", "At", "No", "He", "Be", "Am", "Re", "Ac", "La", "Os"}
)

_SUBSCRIPTS = "₀₁₂₃₄₅₆₇₈₉"
_SUPERSCRIPTS = "⁰¹²³⁴⁵⁶⁷⁸⁹"
_NORMALIZE = str.maketrans(
    dict(
        [(c, str(i)) for i, c in enumerate(_SUBSCRIPTS)]
        + [(c, str(i)) for i, c in enumerate(_SUPERSCRIPTS)]
        + [("⁺", "+"), ("⁻", "−"), ("–", "-"), ("—", "-")]
    )
)

_PART_SEP = re.compile(r"[-·•]")
_CHARGE_SUFFIX = re.compile(r"\d*[+−]$")
_NUMBER = re.compile(r"\d+(?:\.\d+)?")


@dataclass(frozen=True)
class ElementBag:
    """Multiset of element symbols with positive rational counts."""

    counts: tuple[tuple[str, Fraction], ...]

    @staticmethod
    def from_dict(d: dict[str, Fraction]) -> "ElementBag":
        if not d:
            raise FormulaError("element bag cannot be empty")
        for sym, c in d.items():
            if c <= 0:
                raise FormulaError(f"element {sym} has nonpositive count {c}")
        return ElementBag(counts=tuple(sorted(d.items())))

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.counts)

    def symbols(self) -> frozenset[str]:
        return frozenset(sym for sym, _ in self.counts)

    def merged(self, other: "ElementBag") -> "ElementBag":
        d = self.as_dict()
        for sym, c in other.counts:
            d[sym] = d.get(sym, Fraction(0)) + c
        return ElementBag.from_dict(d)


@dataclass(frozen=True)
class ChemicalSpecies:
    surface_form: str
    kind: str  # "formula" | "element-symbol" | "compound-name"
    elements: ElementBag
    span: tuple[int, int]


class _FormulaScanner:
    def __init__(self, text: str, known: frozenset[str]):
        self.text = text
        self.pos = 0
        self.known = known

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def fail(self, message: str):
        raise FormulaError(f"{message} in {self.text!r}", position=self.pos)

    def parse_sequence(self) -> dict[str, Fraction]:
        out: dict[str, Fraction] = {}
        parsed_any = False
        while not self.eof() and self.peek() != ")":
            for sym, c in self.parse_group().items():
                out[sym] = out.get(sym, Fraction(0)) + c
            parsed_any = True
        if not parsed_any:
            self.fail("expected an element or group")
        return out

    def parse_group(self) -> dict[str, Fraction]:
        if self.peek() == "(":
            self.pos += 1
            inner = self.parse_sequence()
            if self.peek() != ")":
                self.fail("unbalanced parentheses")
            self.pos += 1
        else:
            inner = {self.parse_element(): Fraction(1)}
        count = Fraction(1)
        m = _NUMBER.match(self.text, self.pos)
        if m:
            count = Fraction(m.group())
            if count <= 0:
                self.fail("count must be positive")
            self.pos += len(m.group())
        return {sym: c * count for sym, c in inner.items()}

    def parse_element(self) -> str:
        # Longest match wins: Nb before N, and lexicon-declared 3-letter
        # placeholder symbols before both.
        for length in (3, 2, 1):
            cand = self.text[self.pos : self.pos + length]
            if cand in self.known:
                self.pos += length
                return cand
        self.fail("unknown element symbol")
        raise AssertionError("unreachable")


def _parse_part(part: str, known: frozenset[str]) -> dict[str, Fraction]:
    part = _CHARGE_SUFFIX.sub("", part)
    if not part:
        raise FormulaError("empty formula part")
    coefficient = Fraction(1)
    m = _NUMBER.match(part)
    if m:
        coefficient = Fraction(m.group())
        if coefficient <= 0:
            raise FormulaError(f"coefficient must be positive in {part!r}")
        part = part[len(m.group()):]
        if not part:
            raise FormulaError("formula part is only a number")
    scanner = _FormulaScanner(part, known)
    counts = scanner.parse_sequence()
    if not scanner.eof():
        scanner.fail("trailing characters")
    return {sym: c * coefficient for sym, c in counts.items()}


def parse_formula(s: str, extra_symbols: frozenset[str] = frozenset()) -> ElementBag:
    """Parse a chemical formula string into an element bag.

    Accepts parenthesized groups with integer or decimal counts, leading part
    coefficients (0.5Na2O), hyphen/en-dash/middle-dot part separators, charge
    suffixes (3+, 2−) and Unicode sub/superscript digits. Raises
    FormulaError on anything else.
    """
    if not isinstance(s, str):
        raise FormulaError(f"not a string: {s!r}")
    text = s.strip().translate(_NORMALIZE)
    if not text:
        raise FormulaError("empty formula")
    if any(ch.isspace() for ch in text):
        raise FormulaError(f"formula contains whitespace: {s!r}")
    known = _ELEMENT_SET | extra_symbols
    total: dict[str, Fraction] = {}
    for raw_part in _PART_SEP.split(text):
        for sym, c in _parse_part(raw_part, known).items():
            total[sym] = total.get(sym, Fraction(0)) + c
    return ElementBag.from_dict(total)


def render_formula(bag: ElementBag) -> str:
    """Canonical rendering: symbols in alphabetical order with plain counts."""
    parts = []
    for sym, c in bag.counts:
        if c == 1:
            parts.append(sym)
        elif c.denominator == 1:
            parts.append(f"{sym}{c.numerator}")
        else:
            parts.append(f"{sym}{_decimal_string(c)}")
    return "".join(parts)


def _decimal_string(frac: Fraction) -> str:
    den = frac.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise AtlasError(f"count {frac} has no finite decimal form")
    k = max(twos, fives)
    scaled = frac.numerator * 10**k // frac.denominator
    digits = str(scaled).rjust(k + 1, "0")
    return f"{digits[:-k]}.{digits[-k:]}"


class Lexicon:
    """Case-insensitive map of compound/material names to element bags.

    Up to two placeholder element symbols may extend the periodic table, which
    covers map sets that count a couple of provisional elements.
    """

    def __init__(self, names: dict[str, str], extra_symbols: tuple[str, ...] = ()):
        if len(extra_symbols) > 2:
            raise AtlasError("at most two placeholder element symbols may be added")
        self.extra_symbols = frozenset(extra_symbols)
        self._bags: dict[str, ElementBag] = {}
        for name, formula in names.items():
            key = " ".join(name.lower().split())
            self._bags[key] = parse_formula(formula, self.extra_symbols)
        self.max_words = max((key.count(" ") + 1 for key in self._bags), default=1)

    def lookup(self, name: str) -> ElementBag | None:
        return self._bags.get(" ".join(name.lower().split()))

    def names(self) -> list[str]:
        return sorted(self._bags)

    @property
    def element_symbols(self) -> tuple[str, ...]:
        return ELEMENT_SYMBOLS + tuple(sorted(self.extra_symbols))


def load_lexicon(path: str | Path | None = None, extra_symbols: tuple[str, ...] = ()) -> Lexicon:
    """Load a name -> formula JSON map; with no path, the bundled default."""
    if path is None:
        text = resources.files("litatlas.data").joinpath("element_lexicon.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    mapping = json.loads(text)
    if not isinstance(mapping, dict):
        raise AtlasError("lexicon file must be a JSON object of name -> formula")
    return Lexicon(mapping, extra_symbols=extra_symbols)


def normalize_species(name: str, lexicon: Lexicon) -> ElementBag:
    """Resolve a name through the lexicon, falling back to formula parsing."""
    bag = lexicon.lookup(name)
    if bag is not None:
        return bag
    try:
        return parse_formula(name.strip(), lexicon.extra_symbols)
    except FormulaError as exc:
        raise NotASpeciesError(f"{name!r} is neither a known name nor a formula") from exc


_WORD = re.compile(r"\S+")
_TRAIL_PUNCT = ".,;:!?\"'”’"
_LEAD_PUNCT = "\"'“‘"


def _clean_token(raw: str, start: int) -> tuple[str, int, int]:
    """Strip surrounding prose punctuation, preserving formula-internal parens."""
    end = start + len(raw)
    tok = raw
    changed = True
    while changed and tok:
        changed = False
        if tok[-1] in _TRAIL_PUNCT:
            tok, end, changed = tok[:-1], end - 1, True
        elif tok[-1] in ")]}" and tok.count(")") > tok.count("("):
            tok, end, changed = tok[:-1], end - 1, True
        elif tok[0] in _LEAD_PUNCT:
            tok, start, changed = tok[1:], start + 1, True
        elif tok[0] in "([{" and tok.count("(") > tok.count(")"):
            tok, start, changed = tok[1:], start + 1, True
        elif tok[0] == "(" and tok[-1] == ")" and _paren_balanced(tok[1:-1]):
            tok, start, end, changed = tok[1:-1], start + 1, end - 1, True
    return tok, start, end


def _paren_balanced(text: str) -> bool:
    depth = 0
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _is_acronym(tok: str) -> bool:
    return len(tok) >= 2 and tok.isalpha() and tok.isupper()


def _looks_chemical(tok: str) -> bool:
    """Cheap pre-filter before attempting a formula parse."""
    if not tok or not (tok[0].isupper() or tok[0].isdigit() or tok[0] == "("):
        return False
    normalized = tok.translate(_NORMALIZE)
    return all(c.isalnum() or c in "()+-.·−•" for c in normalized)


def extract_species(text: str, lexicon: Lexicon) -> list[ChemicalSpecies]:
    """Scan text for chemical species; matches are non-overlapping, longest first.

    Multi-word lexicon names are tried before single tokens. Bare ambiguous
    symbols (those doubling as English words) are kept only when an adjacent
    token is itself a recognized species. All-uppercase alphabetic tokens are
    treated as acronyms and never parsed as formulas.
    """
    tokens: list[tuple[str, int, int]] = []
    for m in _WORD.finditer(text):
        tok, s, e = _clean_token(m.group(), m.start())
        if tok:
            tokens.append((tok, s, e))

    # matches: token index -> (species, window width, needs-context flag)
    matches: dict[int, tuple[ChemicalSpecies, int, bool]] = {}
    i = 0
    while i < len(tokens):
        window = None
        for width in range(min(lexicon.max_words, len(tokens) - i), 1, -1):
            phrase = " ".join(tokens[j][0] for j in range(i, i + width))
            bag = lexicon.lookup(phrase)
            if bag is not None:
                span = (tokens[i][1], tokens[i + width - 1][2])
                window = (ChemicalSpecies(text[span[0]:span[1]], "compound-name", bag, span), width)
                break
        if window is not None:
            matches[i] = (window[0], window[1], False)
            i += window[1]
            continue

        tok, s, e = tokens[i]
        span = (s, e)
        bag = lexicon.lookup(tok)
        if bag is not None:
            matches[i] = (ChemicalSpecies(tok, "compound-name", bag, span), 1, False)
        elif tok in _ELEMENT_SET or tok in lexicon.extra_symbols:
            species = ChemicalSpecies(tok, "element-symbol", ElementBag.from_dict({tok: Fraction(1)}), span)
            matches[i] = (species, 1, tok in AMBIGUOUS_SYMBOLS)
        elif not _is_acronym(tok) and _looks_chemical(tok):
            try:
                parsed = parse_formula(tok, lexicon.extra_symbols)
            except FormulaError:
                parsed = None
            if parsed is not None:
                matches[i] = (ChemicalSpecies(tok, "formula", parsed, span), 1, False)
        i += 1

    covered = [False] * len(tokens)
    for idx, (_, width, needs_context) in matches.items():
        if not needs_context:
            for j in range(idx, idx + width):
                covered[j] = True

    result = []
    for idx in sorted(matches):
        species, _, needs_context = matches[idx]
        if needs_context:
            before = idx > 0 and covered[idx - 1]
            after = idx + 1 < len(tokens) and covered[idx + 1]
            if not (before or after):
                continue
        result.append(species)
    return result


@dataclass
class DocumentElementMatrix:
    """Binary marker per (document, element): 1 when the element appears."""

    doc_ids: list[str]
    elements: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (len(self.doc_ids), len(self.elements)):
            raise AtlasError("marker matrix shape does not match ids/elements")
        self._eindex = {sym: i for i, sym in enumerate(self.elements)}
        self._dindex = {d: i for i, d in enumerate(self.doc_ids)}

    def has(self, doc_id: str, symbol: str) -> bool:
        if symbol not in self._eindex:
            raise AtlasError(f"unknown element {symbol!r}")
        return bool(self.matrix[self._dindex[doc_id], self._eindex[symbol]])

    def docs_with(self, symbol: str) -> set[str]:
        if symbol not in self._eindex:
            raise AtlasError(f"unknown element {symbol!r}")
        col = self.matrix[:, self._eindex[symbol]]
        return {self.doc_ids[i] for i in np.nonzero(col)[0]}


def element_markers(
    corpus: Corpus,
    species_per_doc: list[list[ChemicalSpecies]],
    elements: tuple[str, ...] = ELEMENT_SYMBOLS,
) -> DocumentElementMatrix:
    """Reduce per-document species to the binary element marker matrix."""
    if len(species_per_doc) != len(corpus):
        raise AtlasError("species list does not align with corpus")
    index = {sym: i for i, sym in enumerate(elements)}
    matrix = np.zeros((len(corpus), len(elements)), dtype=np.uint8)
    for d, species in enumerate(species_per_doc):
        for sp in species:
            for sym in sp.elements.symbols():
                col = index.get(sym)
                if col is not None:
                    matrix[d, col] = 1
    return DocumentElementMatrix(doc_ids=corpus.doc_ids(), elements=tuple(elements), matrix=matrix)


def extract_corpus_species(
    corpus: Corpus, lexicon: Lexicon, min_species_count: int = 1
) -> list[list[ChemicalSpecies]]:
    """Extract species from every abstract, optionally dropping rare species.

    ``min_species_count`` filters on corpus-wide frequency of the canonical
    formula, keeping only species seen at least that many times.
    """
    per_doc = [extract_species(doc.abstract, lexicon) for doc in corpus.documents]
    if min_species_count > 1:
        freq: dict[str, int] = {}
        for species in per_doc:
            for sp in species:
                key = render_formula(sp.elements)
                freq[key] = freq.get(key, 0) + 1
        per_doc = [
            [sp for sp in species if freq[render_formula(sp.elements)] >= min_species_count]
            for species in per_doc
        ]
    return per_doc


def save_markers(markers: DocumentElementMatrix, path: str | Path) -> None:
    """CSV export: one row per doc_id, one column per element."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", *markers.elements])
        for i, doc_id in enumerate(markers.doc_ids):
            writer.writerow([doc_id, *(int(x) for x in markers.matrix[i])])


def load_markers(path: str | Path) -> DocumentElementMatrix:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "doc_id":
            raise AtlasError(f"unexpected marker header in {path}")
        elements = tuple(header[1:])
        doc_ids = []
        rows = []
        for rec in reader:
            doc_ids.append(rec[0])
            rows.append([int(x) for x in rec[1:]])
    return DocumentElementMatrix(
        doc_ids=doc_ids, elements=elements, matrix=np.asarray(rows, dtype=np.uint8)
    )
