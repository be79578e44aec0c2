"""Exception types shared across the package."""


class MsoTreeError(Exception):
    """Base class for all package errors."""


class StructureError(MsoTreeError):
    """Invalid structure descriptor or operation precondition."""


class FormulaError(MsoTreeError):
    """Malformed formula text or scoping violation."""


class TheoryError(MsoTreeError):
    """Depth/arity mismatch or malformed theory value."""


class EnumerationLimitError(MsoTreeError):
    """Requested computation exceeds the configured enumeration budget."""


class CompositionError(MsoTreeError):
    """Bad arguments to the theory-sum algebra or determination checks."""


class TermError(MsoTreeError):
    """Malformed order/tree term."""


class ThinningError(MsoTreeError):
    """Insufficient branching during homogenization.

    Carries the level and node at which no monochromatic successor
    subset of size >= 2 exists.
    """

    def __init__(self, level, node, message):
        super().__init__(message)
        self.level = level
        self.node = node


class PresentationError(MsoTreeError):
    """Nested-sum presentation does not match the declared degree or chain."""


class SynthesisError(MsoTreeError):
    """Well-order synthesis could not satisfy its construction constraints."""
