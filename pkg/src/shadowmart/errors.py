"""Exception hierarchy shared by all modules."""


class ShadowError(Exception):
    """Base class for all library errors."""


class NotASubmeasure(ShadowError):
    """Subtraction would produce a weight below -tolerance."""


class QuantileOutOfRange(ShadowError):
    """Quantile level outside (0, mass]."""


class MassMismatch(ShadowError):
    """Two measures were expected to carry the same mass."""


class NotAPotential(ShadowError):
    """A piecewise-linear function is not the potential of a finite measure."""


class NoConvexMinorant(ShadowError):
    """Lower convex envelope requested with left slope above right slope."""


class AsymptoticMismatch(ShadowError):
    """Potentials with different asymptotes were combined."""


class OrderViolation(ShadowError):
    """An order precondition failed (optionally at a chain index)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ResidualNotPeacock(ShadowError):
    """A residual family lost convex monotonicity beyond tolerance."""


class NotAPeacock(ShadowError):
    """Marginals are not increasing in convex order."""


class NoSolution(ShadowError):
    """No boundary fractions solve the middle-curtain system."""


class OutOfHull(ShadowError):
    """A point lies outside the convex hull of a dilation target set."""


class NegativeSlice(ShadowError):
    """A shadow-table column difference has a negative atom."""


class NonBinomialMixture(ShadowError):
    """Sampling was requested on a mixture with non-binomial links."""


class BadSpec(ShadowError):
    """Unknown or malformed distribution descriptor."""


class Infeasible(ShadowError):
    """The linear program has no feasible point."""


class Unbounded(ShadowError):
    """The linear program is unbounded below."""


class IterationLimit(ShadowError):
    """The simplex method exceeded its pivot budget."""


class SizeLimit(ShadowError):
    """A linear program would exceed the configured size limit."""
