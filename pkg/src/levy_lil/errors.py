"""Exception types raised across the package."""


class LevyLILError(Exception):
    """Base class for all package errors."""


class DomainError(LevyLILError, ValueError):
    """An argument lies outside the domain of the operation."""


class OverflowGuard(LevyLILError, ArithmeticError):
    """An exponent |u| * eps exceeded the double-precision guard."""


class DegenerateModel(LevyLILError, ValueError):
    """The model has neither a Gaussian part nor jumps."""


class NotSymmetric(LevyLILError, ValueError):
    """A symmetric-only operation was called on an asymmetric model."""


class NoConvergence(LevyLILError, RuntimeError):
    """The Esscher root search could not bracket a sign change."""


class DriftDominated(LevyLILError):
    """Bounded variation with nonzero effective drift: ||X||_t / t -> |c|.

    Carries the effective drift so callers can switch to the linear norming.
    """

    def __init__(self, drift, eps=None):
        self.drift = float(drift)
        self.eps = eps
        where = "" if eps is None else f" at eps={eps:g}"
        super().__init__(
            f"effective drift c={self.drift:g} dominates{where}; use b(t) = |c| t"
        )


class NotDriftDominated(LevyLILError, ValueError):
    """The model does not have bounded variation with nonzero effective drift."""


class NotMonotone(LevyLILError, ValueError):
    """A rate table failed the strict monotonicity check."""


class OutOfTableRange(LevyLILError, ValueError):
    """A value fell outside the range covered by a rate table."""

    def __init__(self, value, low, high):
        self.value, self.low, self.high = value, low, high
        bound = "below" if value < low else "above"
        super().__init__(
            f"value {value:g} is {bound} the table range [{low:g}, {high:g}]"
        )


class UnderflowRange(LevyLILError, ValueError):
    """Too few usable points for the log-space condition check."""


class InsufficientGrid(LevyLILError, ValueError):
    """A grid is too short or narrow for the requested estimate."""


class UnknownFamily(LevyLILError, KeyError):
    """No closed form is registered under the given family name."""


class ApproximationUnsound(LevyLILError, ValueError):
    """The Gaussian small-jump approximation fails sigma(delta)/delta >= 3."""


class ZeroHits(LevyLILError):
    """No simulated path stayed in the ball; only an upper bound on p exists."""

    def __init__(self, estimate=None):
        self.estimate = estimate
        bound = "" if estimate is None else f": p <= {estimate.ci_high:.3g}"
        super().__init__("no path stayed in the ball" + bound)


class NoEstimableCells(LevyLILError):
    """Every (t, eps) cell fell outside the Monte Carlo estimable band."""


class ConfigError(LevyLILError, ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
