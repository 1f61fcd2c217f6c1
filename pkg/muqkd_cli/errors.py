"""Exception hierarchy for the MUQKD simulator"""
from typing import Optional


class QKDError(Exception):
    """Base exception for simulator errors."""
    pass


class InvalidArgumentError(QKDError, ValueError):
    """Raised when an argument is out of range or has the wrong shape."""
    pass


class UnsupportedStrategyError(QKDError):
    """Raised when an attack strategy cannot run with the given parameters."""
    pass


class ProtocolAbortError(QKDError):
    """Raised when public announcements are inconsistent and the session must abort."""
    pass


class VerificationError(QKDError):
    """Raised when the oracle suite reports failures."""
    pass


class ConfigError(InvalidArgumentError):
    """Raised when an experiment configuration cannot be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        self.reason = message
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None and key not in message:
            prefix += f"{key}: "
        super().__init__(prefix + message)


def require(condition: bool, message: str) -> None:
    """Raise InvalidArgumentError with `message` unless `condition` holds."""
    if not condition:
        raise InvalidArgumentError(message)
