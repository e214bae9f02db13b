"""Exception hierarchy shared across the package."""


class EntrainmapError(Exception):
    """Base class for every numerical failure raised by this package."""


class StiffnessError(EntrainmapError):
    """Step size underflowed while integrating."""


class NoReturnError(EntrainmapError):
    """A trajectory failed to come back to the Poincare section in time."""


class NonConvergenceError(EntrainmapError):
    """An iterative procedure (cycle search, Newton) did not converge."""


class DegenerateAngleError(EntrainmapError):
    """Phase angle requested for a point sitting on the frame origin."""


class MissingDependencyError(EntrainmapError):
    """An operation needs an input (e.g. an O1 cycle) that was not supplied."""


class NoBifurcationError(EntrainmapError):
    """The fixed-point count is the same at both ends of a parameter scan."""
