"""Exception types shared across the package."""


class TriageError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TriageError):
    """Bad configuration or input data (maps to exit code 2 / HTTP 400)."""


class NotFoundError(TriageError):
    """A referenced alert, episode, model, or corpus does not exist."""


class AmbiguousIocError(TriageError):
    """An IoC query matched more than one alert."""

    def __init__(self, message: str, candidates: list[str]):
        super().__init__(message)
        self.candidates = candidates


class TrainingInProgressError(TriageError):
    """A training run is already holding the workspace training lock."""
