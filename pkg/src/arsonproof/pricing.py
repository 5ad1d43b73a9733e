"""Loss laws, administrative costs, quadrature and premiums.

The loss has an atom ``p0`` at zero and a density on ``(0, M]``. Integrals
are ``p0 * f(0)`` plus composite Gauss-Legendre over panels whose edges
include every breakpoint handed in, so piecewise-linear integrands are
smooth on each panel.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .exceptions import IntegrationError, ValidationError

__all__ = [
    "Uniform",
    "TruncExp",
    "TruncLognormal",
    "LossModel",
    "CostModel",
    "ZeroCost",
    "FixedPerClaim",
    "LinearCost",
    "QuadraticCost",
    "gauss_legendre",
    "quadrature_nodes",
    "integrate",
    "expected_indemnity_cost",
    "premium",
    "density_from_dict",
    "cost_from_dict",
]

DEFAULT_QUAD_N = 32


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Reference nodes and weights on ``[-1, 1]``; read-only."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


# --------------------------------------------------------------------------
# Densities on (0, M], unnormalised; LossModel rescales them.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    def raw_pdf(self, x, big_m):
        return np.ones_like(x)

    def raw_mass(self, big_m):
        return big_m

    def knots(self, big_m):
        return ()


@dataclass(frozen=True)
class TruncExp:
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValidationError(f"exponential rate must be positive, got {self.rate}")

    def raw_pdf(self, x, big_m):
        return self.rate * np.exp(-self.rate * x)

    def raw_mass(self, big_m):
        return -np.expm1(-self.rate * big_m)

    def knots(self, big_m):
        return tuple(np.linspace(0.0, big_m, 9)[1:-1])


@dataclass(frozen=True)
class TruncLognormal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"lognormal needs finite mu and sigma > 0, got {self.mu}, {self.sigma}")

    def raw_pdf(self, x, big_m):
        return stats.lognorm.pdf(x, s=self.sigma, scale=np.exp(self.mu))

    def raw_mass(self, big_m):
        return stats.lognorm.cdf(big_m, s=self.sigma, scale=np.exp(self.mu))

    def knots(self, big_m):
        mode = np.exp(self.mu - self.sigma**2)
        pts = list(np.linspace(0.0, big_m, 17)[1:-1])
        # geometric refinement towards the origin and around the mode
        pts += [big_m * 2.0**-k for k in range(5, 12)]
        if 0.0 < mode < big_m:
            pts += [mode * f for f in (0.25, 0.5, 1.0, 2.0) if mode * f < big_m]
        return tuple(sorted(set(pts)))


_DENSITIES = {"Uniform": Uniform, "TruncExp": TruncExp, "TruncLognormal": TruncLognormal}


def density_from_dict(obj):
    try:
        cls = _DENSITIES[obj["type"]]
    except KeyError as exc:
        raise ValidationError(f"unknown density {obj.get('type')!r}") from exc
    return cls(**obj.get("params", {}))


@dataclass(frozen=True)
class LossModel:
    """Loss law: mass ``p0`` at zero plus a rescaled density on ``(0, M]``."""

    M: float
    p0: float
    density: object = field(default_factory=Uniform)

    def __post_init__(self):
        if not (np.isfinite(self.M) and self.M > 0):
            raise ValidationError(f"M must be positive, got {self.M}")
        if not 0.0 <= self.p0 < 1.0:
            raise ValidationError(f"p0 must lie in [0, 1), got {self.p0}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        scale = (1.0 - self.p0) / self.density.raw_mass(self.M)
        return scale * self.density.raw_pdf(x, self.M)

    def knots(self):
        return self.density.knots(self.M)

    def to_dict(self):
        return {
            "M": self.M,
            "p0": self.p0,
            "density": {"type": type(self.density).__name__, "params": asdict(self.density)},
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(float(obj["M"]), float(obj["p0"]), density_from_dict(obj.get("density", {"type": "Uniform"})))


# --------------------------------------------------------------------------
# Administrative costs
# --------------------------------------------------------------------------


class CostModel:
    """Cost of settling a claim of size ``y``; ``c(0) = 0``."""

    def __call__(self, y):
        raise NotImplementedError

    @property
    def is_zero(self):
        return False

    def to_dict(self):
        return {"type": type(self).__name__, "params": asdict(self)}


@dataclass(frozen=True)
class ZeroCost(CostModel):
    def __call__(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    @property
    def is_zero(self):
        return True


@dataclass(frozen=True)
class FixedPerClaim(CostModel):
    """``c0`` for every strictly positive claim, nothing otherwise."""

    c0: float

    def __post_init__(self):
        if not (np.isfinite(self.c0) and self.c0 >= 0):
            raise ValidationError(f"fixed cost must be non-negative, got {self.c0}")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0.0, self.c0, 0.0)

    @property
    def is_zero(self):
        return self.c0 == 0.0


@dataclass(frozen=True)
class LinearCost(CostModel):
    kappa: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValidationError(f"kappa must be non-negative, got {self.kappa}")

    def __call__(self, y):
        return self.kappa * np.asarray(y, dtype=float)


@dataclass(frozen=True)
class QuadraticCost(CostModel):
    kappa: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValidationError(f"kappa must be non-negative, got {self.kappa}")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.kappa * y * y


_COSTS = {
    "Zero": ZeroCost,
    "ZeroCost": ZeroCost,
    "FixedPerClaim": FixedPerClaim,
    "Linear": LinearCost,
    "LinearCost": LinearCost,
    "Quadratic": QuadraticCost,
    "QuadraticCost": QuadraticCost,
}


def cost_from_dict(obj):
    try:
        cls = _COSTS[obj["type"]]
    except KeyError as exc:
        raise ValidationError(f"unknown cost model {obj.get('type')!r}") from exc
    return cls(**{k: float(v) for k, v in obj.get("params", {}).items()})


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


def quadrature_nodes(loss, quad_n=DEFAULT_QUAD_N, breakpoints=()):
    """Nodes and weights of the mixed law; the first node is the atom at 0.

    ``sum(w * f(x))`` approximates ``E[f(X)]``.
    """
    if quad_n < 16:
        raise ValueError("quad_n must be at least 16")
    big_m = loss.M
    inner = [b for b in np.ravel(np.asarray(breakpoints, dtype=float)) if 0.0 < b < big_m]
    edges = np.unique(np.concatenate([[0.0, big_m], loss.knots(), inner]))
    t, wt = gauss_legendre(quad_n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel() * loss.pdf(x)
    return np.concatenate([[0.0], x]), np.concatenate([[loss.p0], w])


def integrate(fn, loss, quad_n=DEFAULT_QUAD_N, breakpoints=()):
    """``E[fn(X)]`` under the loss law; ``fn`` must accept an array of losses."""
    x, w = quadrature_nodes(loss, quad_n, breakpoints)
    vals = np.asarray(fn(x), dtype=float)
    vals = np.broadcast_to(vals, x.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = float(x[np.flatnonzero(bad)[0]])
        raise IntegrationError(f"integrand is not finite at x={where}", x=where)
    return float(np.dot(w, vals))


def claims_paid(contract, x, manipulated_claims=None):
    """Indemnity actually paid at losses ``x``, after any claim inflation."""
    if manipulated_claims is None:
        return contract(x)
    z = np.asarray(manipulated_claims(x), dtype=float)
    return contract(np.minimum(x + z, contract.domain_max))


def expected_indemnity_cost(contract, loss, cost, manipulated_claims=None, quad_n=DEFAULT_QUAD_N):
    """``E[Y(X + z) + c(Y(X + z))]``; ``z`` is zero unless a manipulation map is given."""
    bps = np.asarray(contract.breakpoints)
    if manipulated_claims is not None:
        bps = np.concatenate([bps, getattr(manipulated_claims, "breakpoints", [])])

    def integrand(x):
        y = claims_paid(contract, x, manipulated_claims)
        return y + cost(y)

    return integrate(integrand, loss, quad_n, bps)


def premium(contract, loss, cost, rho=0.0, manipulated_claims=None, quad_n=DEFAULT_QUAD_N):
    """Premium at which the insurer exactly breaks even: ``(1 + rho) E[Y + c(Y)]``."""
    if rho < 0:
        raise ValidationError(f"loading must be non-negative, got {rho}")
    return (1.0 + rho) * expected_indemnity_cost(contract, loss, cost, manipulated_claims, quad_n)
