"""Exception types shared across the package."""


class CsilabError(Exception):
    """Base class for package-specific failures."""


class DomainError(CsilabError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ShapeError(CsilabError, ValueError):
    """Tensor shapes are inconsistent with an operation's contract."""


class FormatError(CsilabError, ValueError):
    """An on-disk artifact is malformed (bad magic, truncated payload, ...)."""


class ConfigError(CsilabError, ValueError):
    """A configuration file or config object fails validation."""


class TrainingError(CsilabError, RuntimeError):
    """Optimization diverged (non-finite loss)."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch
