"""Exception hierarchy shared by all gausstat modules.

The CLI maps these onto exit codes: validation problems exit with 2,
infeasible or inconsistent data with 3, numerical failures with 4.
"""


class GausstatError(Exception):
    """Base class for all gausstat errors."""


class ValidationError(GausstatError):
    """Malformed or unphysical input (bad shapes, broken invariants, bad files)."""


class UnsupportedOrderError(ValidationError):
    """Moment order outside the implemented set {1, 2, 3, 4, 6}."""


class InsufficientDataError(ValidationError):
    """A measurement set is missing entries required by the requested analysis."""


class UndefinedCorrelationError(ValidationError):
    """Normalized correlation requested for a mode with vanishing mean photon number."""


class InfeasibleError(GausstatError):
    """No state in the hypothesised sector is compatible with the data."""


class SectorMismatchError(InfeasibleError):
    """Observables lie outside the range of the requested reconstruction sector."""


class InconsistentDataError(InfeasibleError):
    """Data violates an overconstrained consistency relation beyond tolerance."""


class NumericalError(GausstatError):
    """A numerical routine failed to reach its target accuracy."""


class TruncationError(NumericalError):
    """Fock-space cutoff too small for the requested state.

    Attributes:
        deficit: measured trace deficit of the truncated density operator.
        tail_mass: largest per-mode occupancy found in the top Fock levels,
            which bounds the error of truncated squeeze/displacement unitaries
            (these stay exactly unitary, so the trace alone cannot see them).
    """

    def __init__(self, message: str, deficit: float = 0.0, tail_mass: float = 0.0):
        super().__init__(message)
        self.deficit = deficit
        self.tail_mass = tail_mass
