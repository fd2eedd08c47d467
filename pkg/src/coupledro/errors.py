"""Exception types shared across the package."""

from .lp_core import IterationLimit, MalformedProgram


class GeometryError(ValueError):
    pass


class DimensionMismatch(GeometryError):
    pass


class UnboundedDirection(GeometryError):
    pass


class EmptyCoupledSet(GeometryError):
    pass


class ProjectionBlowup(GeometryError):
    pass


class NotInNonnegativeOrthant(GeometryError):
    pass


class UnboundedPolyhedron(GeometryError):
    pass


class DimensionCapExceeded(GeometryError):
    pass


class OriginNotContained(GeometryError):
    pass


class EmptyInterior(GeometryError):
    pass


class UnsupportedSet(GeometryError):
    """The set mixes ball atoms in a way no exact routine here handles."""


class NotNested(ValueError):
    pass


class ParameterOutOfRange(ValueError):
    pass


class AssumptionViolated(ValueError):
    pass


class NonPolyhedralAtomInRC(ValueError):
    pass


class VertexBudgetExceeded(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    pass


class ParseError(ValueError):
    pass


__all__ = [
    "AssumptionViolated", "DimensionCapExceeded", "DimensionMismatch", "EmptyCoupledSet",
    "EmptyInterior", "GeometryError", "IterationLimit", "MalformedProgram",
    "NonPolyhedralAtomInRC", "NotInNonnegativeOrthant", "NotNested", "OriginNotContained",
    "ParameterOutOfRange", "ParseError", "ProjectionBlowup", "SolverFailure",
    "UnboundedDirection", "UnboundedPolyhedron", "UnsupportedSet", "VertexBudgetExceeded",
]
