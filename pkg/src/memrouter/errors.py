"""Exception hierarchy shared by every memrouter component."""


class MemrouterError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVector(MemrouterError):
    """A vector with (near-)zero norm cannot be normalized or cached."""


class DimensionMismatch(MemrouterError):
    """Vectors of different dimensionality were mixed."""

    def __init__(self, expected: int, got: int, where: str = ""):
        self.expected = expected
        self.got = got
        suffix = f" in {where}" if where else ""
        super().__init__(f"expected dimension {expected}, got {got}{suffix}")


class EmptyText(MemrouterError):
    """Text to embed was empty after trimming whitespace."""


class EmptyQuery(MemrouterError):
    """A user query was empty."""


class NetworkError(MemrouterError):
    """A remote call failed at the transport level. Retryable."""


class ProtocolError(MemrouterError):
    """A remote service answered with a malformed or out-of-contract response."""


class EmbeddingFailed(MemrouterError):
    """Query embedding failed; the turn cannot proceed."""


class PredictorUnavailable(MemrouterError):
    """The prediction backend could not be reached."""


class BusClosed(MemrouterError):
    """An event was published to a closed conversation stream."""


class ConfigInvalid(MemrouterError):
    """A router configuration failed validation."""


class UnpairedRecords(MemrouterError):
    """Baseline and dual-mode turn records do not cover identical turns."""
