"""Exception types shared across the harness."""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for every error raised by this package."""


class MissingField(HarnessError):
    """A sample payload lacks a field its task requires."""


class ValidationError(HarnessError):
    """One or more strategy invariants are violated.

    Collects every violation instead of stopping at the first one so a
    config author sees the full list in a single pass.
    """

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


class ProviderError(HarnessError):
    """Base class for completion-call failures."""


class TransportError(ProviderError):
    """Network-level failure; safe to retry."""


class RateLimited(ProviderError):
    """Provider throttled the call; retry with backoff."""


class ProviderRejected(ProviderError):
    """Provider refused the request (bad params, unsupported feature).

    Never retried: the same request would fail again.
    """


class CassetteMiss(ProviderError):
    """Replay provider has no recorded response for this request."""


class ExtractionFailed(HarnessError):
    """No well-formed tag pair found in a model response."""


class ExecError(HarnessError):
    """SQL execution failed or timed out."""


class DatasetError(HarnessError):
    """Dataset content violated an assumption (e.g. gold SQL does not run)."""


class MissingDatabase(DatasetError):
    """A referenced database file does not exist."""


class ParseError(HarnessError):
    """A dataset file could not be parsed; carries file and line context."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class MissingPrice(HarnessError):
    """Pricing table has no entry for the requested model."""


class EmptyInput(HarnessError):
    """An aggregate was requested over too few records."""


class ZeroBaseline(HarnessError):
    """Relative gain is undefined for a non-positive baseline accuracy."""


class RaggedInput(HarnessError):
    """Per-round records do not have a uniform number of rounds."""


class DegenerateInput(HarnessError):
    """Statistical input carries no usable signal (e.g. both variances zero)."""
