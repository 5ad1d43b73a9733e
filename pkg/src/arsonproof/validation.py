"""Input validation helpers shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError


def check_losses(X, domain_max):
    """Coerce ``X`` to a 1-d float array of losses inside ``[0, domain_max]``.

    Accepts a scalar, a 1-d array or a single-column 2-d array, the latter
    so that estimators can sit inside a ``Pipeline``.
    """
    arr = check_array(np.atleast_1d(X), ensure_2d=False, dtype=np.float64, input_name="X")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of losses, got shape {arr.shape}")
        arr = arr[:, 0]
    if np.any(arr < 0.0) or np.any(arr > domain_max):
        raise DomainError(f"losses must lie in [0, {domain_max}]")
    return arr


def check_nonneg(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a non-negative finite number, got {value}")
    return value
