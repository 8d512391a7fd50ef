"""Exception hierarchy shared across the engine."""


class LawlensError(Exception):
    """Base class for all engine errors."""


class ParseError(LawlensError):
    """Malformed input document; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(LawlensError):
    """Structurally well-formed input that violates an invariant."""


class TagLookupError(LawlensError):
    """Reference to a tag path that is not a taxonomy node."""

    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"unknown taxonomy tag: {tag}")


class BackendError(LawlensError):
    """Remote backend failure (transport, protocol, or contract)."""


class BackendTimeout(BackendError):
    """Request exceeded the configured time budget."""


class BackendRefusal(BackendError):
    """Backend replied, but outside the expected answer contract."""

    def __init__(self, message: str, raw_reply: str = ""):
        self.raw_reply = raw_reply
        super().__init__(message)


class DerivationError(LawlensError):
    """Remote derivation produced an unusable reply; keeps it for audit."""

    def __init__(self, message: str, raw_reply: str = ""):
        self.raw_reply = raw_reply
        super().__init__(message)
