"""Literature knowledge-atlas toolkit.

Turns a corpus of article records (abstracts + figure captions) into
navigable 2-D maps (topic map, caption cluster plot, elemental overlays) and
answers compositional queries over topic x chemistry x phrase x caption-type.
"""

from .corpus import Caption, Corpus, Document, load_corpus, parse_article_record, save_corpus
from .errors import AtlasError

__version__ = "0.1.0"

__all__ = [
    "AtlasError",
    "Caption",
    "Corpus",
    "Document",
    "load_corpus",
    "parse_article_record",
    "save_corpus",
    "__version__",
]
