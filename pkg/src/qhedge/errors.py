"""Error types shared across the package."""

from __future__ import annotations

import numpy as np


class NumericalError(ArithmeticError):
    """A non-finite intermediate appeared where a finite number was required.

    Raised instead of letting NaN/inf propagate silently into reported
    capital or success numbers. The CLI maps this to exit code 3.
    """


def ensure_finite(arr: np.ndarray | float, what: str) -> None:
    """Raise NumericalError if any entry of ``arr`` is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite value in {what}")
