"""Exception types for contract violations across the lab."""


class LabError(Exception):
    """Base class for all laboratory contract violations."""


class RepresentationError(LabError):
    """Operation applied to a field in the wrong representation."""


class BlockRangeError(LabError):
    """Dyadic block not resolvable on the given grid (Nyquist or box limit)."""


class StabilityError(LabError):
    """Explicit time step violates the stability bound."""


class InsufficientShellsError(LabError):
    """Too few usable dyadic shells for a least-squares fit."""


class CostCapError(LabError):
    """Quadrature budget exceeds the configured cost cap."""

    def __init__(self, estimate: float, cap: float):
        self.estimate = estimate
        self.cap = cap
        super().__init__(
            f"estimated cost {estimate:.3g} exceeds cap {cap:.3g}; "
            "reduce grid/quadrature sizes or raise the cap"
        )


class ConfigValidationError(LabError):
    """Experiment configuration violates one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
