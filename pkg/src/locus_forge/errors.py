"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so that callers (and
the command-line front end) can branch on the failure kind without parsing
messages.
"""


class LocusForgeError(Exception):
    code = "error"


class ShapeError(LocusForgeError, ValueError):
    code = "shape"


class TooLargeError(LocusForgeError, ValueError):
    code = "too-large"


class NotUnitaryError(LocusForgeError, ValueError):
    code = "not-unitary"


class EmptyJoinError(LocusForgeError, ValueError):
    code = "empty-join"


class InvalidStateError(LocusForgeError, ValueError):
    code = "invalid-state"


class AlgebraError(LocusForgeError, ValueError):
    """A matrix subspace failed the unital / adjoint / product closure checks."""

    code = "not-an-algebra"


class ClosureError(LocusForgeError, RuntimeError):
    """Internal invariant broke (closure did not stabilise, tolerance drift)."""

    code = "internal"
