"""Exception hierarchy shared across the toolkit."""


class AtlasError(Exception):
    """Base class for all toolkit errors."""


class RecordParseError(AtlasError):
    """Malformed article record markup.

    Carries the byte offset of the first offending character when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class RecordSchemaError(AtlasError):
    """Structurally valid markup that violates the record schema."""


class CorpusError(AtlasError):
    """Invalid corpus file or corpus-level invariant violation."""


class DuplicateIdError(CorpusError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate doc_id: {doc_id!r}")
        self.doc_id = doc_id


class DimensionMismatchError(AtlasError):
    """Vector or matrix operands of incompatible dimension."""


class TrainingError(AtlasError):
    """Classifier training cannot proceed or diverged."""


class ConvergenceError(AtlasError):
    """An iterative solver failed to reach its tolerance."""


class FormulaError(AtlasError):
    """String is not a parseable chemical formula.

    ``position`` is the character index where parsing failed, if applicable.
    """

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class NotASpeciesError(AtlasError):
    """Name is neither in the lexicon nor parseable as a formula."""


class FilterSyntaxError(AtlasError):
    """Filter expression failed to parse; ``position`` is the character index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownNameError(AtlasError):
    """Filter expression references a topic/element/label absent from the artifacts."""


class ConfigError(AtlasError):
    """Invalid pipeline configuration."""


class StageError(AtlasError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
