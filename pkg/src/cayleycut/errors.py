"""Exception types shared across the package.

The CLI maps these onto exit codes: validation errors exit 2,
verification failures exit 3, size-guard rejections exit 4.
"""


class CayleycutError(Exception):
    """Base class for package errors."""


class ValidationError(CayleycutError):
    """Malformed input: bad residues, asymmetric generators, bad graph spec."""


class SizeGuardError(CayleycutError):
    """Instance too large for an exhaustive or dense code path."""


class VerificationFailure(CayleycutError):
    """An invariant check that should hold numerically did not."""


class SolverError(CayleycutError):
    """The SDP solver failed to produce a usable iterate."""
