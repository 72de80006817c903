"""Exception types shared across the pipeline."""


class FormatError(ValueError):
    """A data file violates its documented format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyQueryError(ValueError):
    """No candidate tokens survive query generation."""


class CannotRelaxError(ValueError):
    """A single-token query cannot be relaxed further."""


class RetryableSearchError(RuntimeError):
    """Transient search-provider failure; the call may be retried."""


class PageUnavailable(RuntimeError):
    """A page could not be fetched or does not contain usable text."""


class NoMatchError(LookupError):
    """No candidate text exists to select a best match from."""
