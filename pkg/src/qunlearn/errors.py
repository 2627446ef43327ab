"""Exception hierarchy used across the package."""


class QunlearnError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(QunlearnError, ValueError):
    """Operand dimensions are incompatible or non-square where required."""


class NotPsdError(QunlearnError, ValueError):
    """Matrix expected to be Hermitian positive semidefinite is not."""


class NotContractionError(QunlearnError, ValueError):
    """Operator has a singular value exceeding one beyond tolerance."""


class CompletenessError(QunlearnError, ValueError):
    """A set of Kraus operators does not sum to the identity."""


class ZeroProbabilityBranchError(QunlearnError, ValueError):
    """Conditioning on an outcome whose probability is below threshold."""


class UnrecoverableBranchError(QunlearnError, ValueError):
    """The branch operator is rank deficient; no correction can succeed."""


class DomainError(QunlearnError, ValueError):
    """Scalar arguments outside their admissible range."""


class TreeStructureError(QunlearnError, ValueError):
    """Invalid measurement-tree manipulation (e.g. attaching to a non-leaf)."""
