"""Exception types raised across the package."""


class CemiError(ValueError):
    """Base class for all input/contract errors."""


class LayoutError(CemiError):
    """Unknown, duplicate or otherwise inconsistent subsystem labels."""


class InvariantError(CemiError):
    """A type invariant failed; carries the invariant name and the measured defect."""

    def __init__(self, invariant, defect, detail=""):
        self.invariant = invariant
        self.defect = float(defect)
        msg = f"{invariant} violated (defect {self.defect:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
