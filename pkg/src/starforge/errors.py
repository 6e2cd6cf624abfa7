"""Exception hierarchy.

Every domain failure carries a short machine-readable ``code`` and an
optional ``location`` (a dotted path into the offending input) so the CLI
can report it as JSON without string matching.
"""

from __future__ import annotations


class StarforgeError(Exception):
    code = "domain_error"

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "location": self.location}


class StructuralError(StarforgeError):
    """Operands that cannot be combined (variable counts, orders, arities)."""

    code = "structural"


class DegreeError(StarforgeError):
    code = "degree"


class PreconditionError(StarforgeError):
    code = "precondition"


class NotNormalizedError(PreconditionError):
    code = "not_normalized"


class NotClosedError(PreconditionError):
    code = "not_closed"


class WindowError(StarforgeError):
    """A search or splitting ran out of its finite window."""

    code = "window"


class ResourceError(StarforgeError):
    code = "resource"


class InconsistentSystemError(StarforgeError):
    code = "inconsistent"


class InternalConsistencyError(StarforgeError):
    """An identity that must hold by theory failed. Always a bug."""

    code = "internal"


class MalformedInputError(StarforgeError):
    code = "malformed"
