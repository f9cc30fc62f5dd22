"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a model is defined."""


class InfeasibleError(RuntimeError):
    """The allocation problem has no feasible point.

    Parameters
    ----------
    check : str
        Name of the check that failed, e.g. ``"pair-floor"`` or ``"bandwidth-budget"``.
    detail : str
        Human-readable explanation.
    pair : int, optional
        Index of the offending pair when the failure is local to one pair.
    """

    def __init__(self, check, detail, pair=None):
        self.check = check
        self.detail = detail
        self.pair = pair
        super().__init__(f"{check}: {detail}")


class NoFeasiblePatternError(InfeasibleError):
    """No peak-power pattern lets a pair meet the requested operating point."""


class ContractError(RuntimeError):
    """A problem object violated the interface the solver relies on."""
