"""Exception types.  ``token`` is the machine-readable reason printed by the CLI."""


class ErgmError(Exception):
    token = "error"


class ParseError(ErgmError, ValueError):
    token = "parse-error"


class MLENonexistent(ErgmError):
    """Estimator diverged: the observed statistic sits on the boundary of the convex hull."""

    token = "mle-nonexistent"


class PseudoSeparation(MLENonexistent):
    """Maximum pseudo-likelihood estimate does not exist (separated dyad data)."""


class SingularInformation(MLENonexistent):
    """Fisher information not invertible: some direction of the parameter is not identified."""


class ESSDegenerate(ErgmError):
    token = "ess-degenerate"


class CapExceeded(ErgmError):
    token = "cap-exceeded"


class NonIgnorableDesign(ErgmError):
    token = "non-ignorable-design"


class AllMissing(MLENonexistent, ValueError):
    """No observed dyad: the likelihood is constant in the parameter."""
