"""Exception hierarchy. Every error carries a short machine-parsable code."""


class VgError(Exception):
    """Base error; `code` is stable and safe to match on."""

    code = "Error"

    def __init__(self, message=""):
        super().__init__(message or self.code)


class MapError(VgError):
    code = "MapError"


class NoPath(VgError):
    code = "NoPath"


class OffRoad(VgError):
    code = "OffRoad"


class AllCollected(VgError):
    code = "AllCollected"


class NoGroundIntersection(VgError):
    code = "NoGroundIntersection"


class UnknownLabel(VgError):
    code = "UnknownLabel"


class UnresolvedLabel(VgError):
    code = "UnresolvedLabel"


class ProtocolError(VgError):
    code = "ProtocolError"

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(message)
