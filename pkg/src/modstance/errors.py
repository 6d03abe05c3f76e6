"""Exception types shared across the toolkit."""


class ModstanceError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ModstanceError):
    """Invalid or contradictory run configuration."""


class NetworkUnavailable(ModstanceError):
    """No cache entry and no connectivity (or offline mode forbids fetching)."""


class RateLimited(ModstanceError):
    """The remote API kept rate-limiting after honoring retry-after."""


class MalformedResponse(ModstanceError):
    """API response did not match the expected MediaWiki shape."""


class MissingPage(ModstanceError):
    """A page required by the operation does not exist in the source wiki."""


class MissingLexicon(ModstanceError):
    """No stance lexicon available for the requested language."""


class DuplicateVariant(ModstanceError):
    """A lexicon surface string is mapped to more than one label."""


class CycleDetected(ModstanceError):
    """Policy merge edges form a cycle."""


class ConflictingLinks(ModstanceError):
    """Interwiki links tie one title to two counterparts in the same language."""


class UnknownPolicy(ModstanceError):
    """Title is not canonical in any aligned registry."""


class TooFewRecords(ModstanceError):
    """Corpus too small for the requested split plan."""


class SchemaViolation(ModstanceError):
    """A serialized record does not satisfy the corpus schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IoError(ModstanceError):
    """Filesystem read/write failure wrapped with context."""


class EmptyVocabulary(ModstanceError):
    """No term survived the document-frequency threshold."""


class DegenerateLabels(ModstanceError):
    """Training data contains fewer than two distinct labels."""


class DimensionMismatch(ModstanceError):
    """Feature vector does not match the model's input dimension."""


class UnknownLabel(ModstanceError):
    """Label not present in the registry in use."""


class LengthMismatch(ModstanceError):
    """Gold and predicted sequences differ in length."""


class EmptyMatrix(ModstanceError):
    """Metric requested on a confusion matrix with zero instances."""
