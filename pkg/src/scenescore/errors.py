"""Exception hierarchy shared by all engine modules.

Two branches matter for the CLI exit-code contract: ``DataError`` covers
format and validation failures (exit 3), ``RemoteServiceError`` covers
failures of pluggable providers/reasoners (exit 4). ``ConfigError`` is a
usage problem (exit 2).
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EngineError):
    """Malformed input data, broken invariants, or format violations."""


class ConfigError(EngineError):
    """Inconsistent configuration (e.g. reasoning enabled without a reasoner)."""


class RemoteServiceError(EngineError):
    """A pluggable external service (provider, reasoner) failed."""


# -- embeddings / file formats ------------------------------------------------

class ZeroVectorError(DataError):
    """Vector has (near-)zero L2 norm and cannot be normalized."""


class NonFiniteError(DataError):
    """Vector contains NaN or infinite values."""


class FormatError(DataError):
    """On-disk payload violates the expected file format."""


class VersionUnsupportedError(FormatError):
    """File declares a container version this build does not understand."""


class DuplicateLabelError(DataError):
    """Two entries canonicalize to the same label."""


# -- scoring ------------------------------------------------------------------

class DimensionMismatchError(DataError):
    """Embedding dimensions of the operands disagree."""


class EmptyLabelSetError(DataError):
    """Scoring requested against a label set with no entries."""


class InvalidTemperatureError(DataError):
    """Softmax temperature is non-positive or non-finite."""


class NotNormalizedError(DataError):
    """An operation requiring unit-norm input received a raw vector."""


class UnknownLabelError(DataError):
    """Requested label is absent from the result being queried."""


# -- ontology / compile -------------------------------------------------------

class UnknownTermError(DataError):
    """Traversal started from a term that is not a node of the graph."""


class EmptyInputError(DataError):
    """Compile requested with no classes or no seed labels."""


class ProviderError(RemoteServiceError):
    """Embedding provider failed; ``label`` names the failing input."""

    def __init__(self, message: str, label: str | None = None):
        super().__init__(message)
        self.label = label


class ReasonerError(RemoteServiceError):
    """Reasoner call failed (network, timeout, or schema violation)."""


# -- evaluation ---------------------------------------------------------------

class EmptyManifestError(DataError):
    """Evaluation requested over a manifest with no items."""


class DegenerateLabelsError(DataError):
    """Binary evaluation needs both positive and negative ground truth."""


class ManifestMismatchError(DataError):
    """Reports being compared were produced from different manifests."""


class UnknownLabelInAffinityError(DataError):
    """Affinity carries a label the app's symbolic store does not know."""
