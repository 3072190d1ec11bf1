"""Exception types shared across the package."""


class TGAError(Exception):
    """Base class for package errors."""


class InvalidInputError(TGAError, ValueError):
    """Raised when an argument violates a shape or range contract."""


class DegenerateChainError(TGAError, ValueError):
    """A homography in a chain could not be inverted."""


class NonFiniteLossError(TGAError, FloatingPointError):
    def __init__(self, epoch, step, lr, loss):
        self.epoch, self.step, self.lr, self.loss = epoch, step, lr, loss
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch}, step {step} (lr={lr:g})"
        )


class ConfigError(TGAError, ValueError):
    """Configuration validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(TGAError, OSError):
    """Unreadable, missing or malformed image data."""
