"""Exception hierarchy shared by all diffopt modules."""


class DiffOptError(Exception):
    """Base class for every error raised by diffopt."""


class ConfigError(DiffOptError, ValueError):
    """Malformed or inconsistent user configuration."""


class ParamOutOfRange(DiffOptError, ValueError):
    """A parameter lies outside the admissible range of a construction."""


class MissingOracle(DiffOptError):
    """A derivative of the requested order has no oracle and no fallback."""


class MissingDivergence(DiffOptError):
    """Divergence oracle absent while the finite-difference fallback is disabled."""


class MissingCoefficient(DiffOptError, KeyError):
    """A coefficient needed by a constant table was not supplied."""


class NonFinite(DiffOptError, FloatingPointError):
    """An oracle returned NaN or infinity."""


class DegenerateAlphaTilde(DiffOptError, ValueError):
    """The clamped dissipativity margin vanished, so the bound is undefined."""


class StepTooLarge(DiffOptError, ValueError):
    """The step size exceeds the admissible threshold of the bound."""


class BadN(DiffOptError, ValueError):
    """Unsupported pseudo-Lipschitz order."""


class NotDissipative(DiffOptError):
    """The generator applied to the squared norm is not eventually negative."""


class NotUniform(DiffOptError):
    """The pairwise contraction quantity is not uniformly negative."""


class NoDecay(DiffOptError):
    """The distant contraction profile never becomes negative."""


class GrowthExceeded(DiffOptError):
    """Coefficient growth is faster than quadratic on the probed range."""


class NegativeLogArgument(DiffOptError, ValueError):
    """The suboptimality expression is negative, so its root is undefined."""


class UntrackedOrder(DiffOptError, KeyError):
    """A moment order was requested that the chain did not accumulate."""


class QuadratureNonConvergent(DiffOptError):
    """Adaptive quadrature failed to reach the requested tolerance."""
