"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class FormulaDomainError(DomainError):
    """A closed-form expression is singular for the given parameters (e.g. 1/(M-1) at M=1)."""


class InvalidInputError(ValueError):
    """Malformed input such as non-finite channel entries or mismatched shapes."""


class PreconditionError(ValueError):
    """A documented precondition of a bound (e.g. l >= M+N) is violated."""


class StageCapExceeded(RuntimeError):
    """Unbounded-deadline simulation ran past its stage cap without a good block."""

    def __init__(self, cap: int, rho: float):
        self.cap = cap
        self.rho = rho
        super().__init__(
            f"unbounded deferral exceeded stage cap {cap} at rho={rho:g}; "
            "the threshold event is almost surely true at this SNR"
        )


class EstimationError(RuntimeError):
    """Too few usable points to fit a diversity slope."""
