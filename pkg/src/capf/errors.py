"""Exception types shared across the package."""


class NotPositiveDefinite(Exception):
    """A matrix required to be positive definite failed factorization,
    even after the one-shot diagonal jitter retry."""


class DegenerateWeights(Exception):
    """The weighted ensemble has collapsed onto (numerically) a single
    particle, so a weighted sample covariance is undefined."""


class AllWeightsZero(Exception):
    """Every particle received log-weight -inf: the observation is
    impossible under all particles."""

    def __init__(self, t=None, message=None):
        self.t = t
        if message is None:
            message = "all particle weights are zero"
            if t is not None:
                message += f" at step t={t}"
        super().__init__(message)


class NumericalBlowup(Exception):
    """State propagation diverged (a component left the plausible range),
    signalling an unstable discretization."""


class ParseError(Exception):
    """An experiment config file is not valid strict JSON (includes
    duplicate keys)."""


class ValidationError(Exception):
    """An experiment config parsed but violates one or more constraints.
    The message lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(f"  - {v}" for v in self.violations))
