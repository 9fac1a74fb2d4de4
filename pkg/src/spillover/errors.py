"""Exception types shared across the toolkit."""

from __future__ import annotations


class SpilloverError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(SpilloverError):
    """Malformed or inconsistent input data."""


class UncoveredMonthError(SpilloverError):
    """A requested month precedes the first federal schedule step."""


class MissingPolicyError(SpilloverError):
    """Destination ZIPs lack a policy row for the requested month."""

    def __init__(self, missing_zips, month):
        self.missing_zips = sorted(missing_zips)
        self.month = month
        super().__init__(
            f"no policy for month {month} in destination zips: "
            + ", ".join(self.missing_zips)
        )


class CollinearDesignError(SpilloverError):
    """Regressors are collinear after fixed-effect absorption."""


class BracketingError(SpilloverError):
    """Equilibrium solver could not bracket a sign change in excess demand."""


class ConvergenceError(SpilloverError):
    """Iterative solver failed to reach its tolerance."""


class InfeasibleTargetsError(SpilloverError):
    """Balance targets lie outside the convex hull of the sample."""
