"""Exception hierarchy shared across the package."""


class MacroforgeError(Exception):
    """Base class for all package errors."""


class ConfigError(MacroforgeError):
    """Invalid run configuration, template, or backend setup. CLI exit code 2."""


class TransportError(MacroforgeError):
    """Network-level failure talking to a backend endpoint (retryable)."""


class BackendExhaustedError(MacroforgeError):
    """All retry attempts against a backend failed."""


class MalformedResponseError(MacroforgeError):
    """Endpoint answered, but the completion could not be interpreted."""


class LogprobsUnavailableError(MacroforgeError):
    """The configured backend cannot supply token log-probabilities."""


class UnsupportedLanguageError(MacroforgeError):
    """Translation scorer does not cover the requested language."""


class ParseFailure(MacroforgeError):
    """A generation could not be parsed into a candidate text."""


class MissingComponentError(MacroforgeError):
    """A positively-weighted score component is absent from the component map."""


class MissingLabelError(MacroforgeError):
    """A required per-class score is absent from a classification result."""


class MetricInputError(MacroforgeError):
    """Metric precondition violated (empty input, missing field, id mismatch)."""
