"""Exception hierarchy shared by every module."""


class TreeLDPError(Exception):
    """Base class for all errors raised by this package."""


class InvalidMatrix(TreeLDPError, ValueError):
    """A transition matrix failed validation."""


class NonSquare(InvalidMatrix):
    pass


class NonBinaryEntry(InvalidMatrix):
    pass


class ZeroRow(InvalidMatrix):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} is all zero (matrix is not essential)")


class ZeroColumn(InvalidMatrix):
    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is all zero (matrix is not essential)")


class InvalidModel(TreeLDPError, ValueError):
    """Bad model family, exponent, multiplier or Bernoulli parameter."""


class SizeLimitExceeded(TreeLDPError):
    """An exact computation or enumeration would exceed its configured cap."""


class IndexOutOfRange(TreeLDPError, IndexError):
    pass


class GrowthConditionViolated(TreeLDPError):
    """The level-growth ratio does not settle at a limit strictly above 1."""


class MaxIterExceeded(TreeLDPError):
    pass


class DepthInsufficient(TreeLDPError):
    pass


class KinkAtZero(TreeLDPError):
    """The free energy has distinct one-sided derivatives at the requested point."""

    def __init__(self, left: float, right: float):
        self.left = left
        self.right = right
        super().__init__(f"free energy is not differentiable here; subgradient [{left!r}, {right!r}]")
