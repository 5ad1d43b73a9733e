"""Bernoulli utility functions satisfying the Inada conditions."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class CRRA:
    """``u(w) = w**(1 - gamma) / (1 - gamma)``."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0 and self.gamma != 1.0):
            raise ValidationError(f"CRRA needs gamma > 0 and gamma != 1, got {self.gamma}")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return w ** (1.0 - self.gamma) / (1.0 - self.gamma)

    def to_dict(self):
        return {"type": "CRRA", "params": asdict(self)}


@dataclass(frozen=True)
class LogUtility:
    def __call__(self, w):
        return np.log(np.asarray(w, dtype=float))

    def to_dict(self):
        return {"type": "LogUtility", "params": {}}


def utility_from_dict(obj):
    kind = obj.get("type")
    if kind == "CRRA":
        return CRRA(float(obj["params"]["gamma"]))
    if kind in ("Log", "LogUtility"):
        return LogUtility()
    raise ValidationError(f"unknown utility {kind!r}")


def check_utility(u, points=(0.5, 1.0, 2.0, 5.0, 10.0, 50.0), h=1e-4):
    """Finite-difference check of ``u' > 0`` and ``u'' < 0`` at sample wealths."""
    for w in points:
        up = (u(w + h) - u(w - h)) / (2 * h)
        upp = (u(w + h) - 2 * u(w) + u(w - h)) / (h * h)
        if not up > 0:
            raise ValidationError(f"utility is not increasing at w={w}")
        if not upp < 0:
            raise ValidationError(f"utility is not strictly concave at w={w}")
    return True
