"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DDSLError(Exception):
    """Base class for all errors raised by ddsl."""


class UnknownVertexError(DDSLError, KeyError):
    def __init__(self, vertex):
        super().__init__(vertex)
        self.vertex = vertex

    def __str__(self) -> str:
        return f"unknown vertex {self.vertex!r}"


class GraphParseError(DDSLError, ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class UpdateConflictError(DDSLError, ValueError):
    """An update batch is inconsistent with the graph it is applied to."""

    def __init__(self, message: str, edge=None):
        self.edge = edge
        super().__init__(message)


class PatternError(DDSLError, ValueError):
    pass


class PatternSizeError(PatternError):
    pass


class CoverError(DDSLError, ValueError):
    pass


class NotCenterError(DDSLError, ValueError):
    pass


class ScaleLimitError(DDSLError, ValueError):
    pass


class EstimatorDomainError(DDSLError, ValueError):
    pass


class MissingSizeError(DDSLError, KeyError):
    pass


class NoJoinTreeError(DDSLError, ValueError):
    pass


class JoinKeyError(DDSLError, ValueError):
    """A join was requested without any shared cover vertex, or a key is unbound."""
