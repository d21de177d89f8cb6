"""Exception types shared across the package."""


class PhotonCtxError(Exception):
    """Base class for all package errors."""


class NormalizationError(PhotonCtxError, ValueError):
    pass


class FrameMismatchError(PhotonCtxError, ValueError):
    pass


class ConsistencyError(PhotonCtxError, RuntimeError):
    """An internal numerical check failed (e.g. a Hermitian expectation came out complex)."""


class NetworkError(PhotonCtxError, ValueError):
    pass


class InsufficientDataError(PhotonCtxError, ValueError):
    pass


class ConfigError(PhotonCtxError, ValueError):
    """Carries every problem found in a configuration, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
