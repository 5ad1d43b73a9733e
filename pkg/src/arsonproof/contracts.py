"""Piecewise-linear indemnity schedules and the named contract families.

A schedule is stored as a list of half-open segments ``[x_start, x_end)``
tiling ``[0, M]``; the last segment is closed at ``M``. At a breakpoint the
schedule takes the value of the segment that starts there, which is the
upper semicontinuous choice for a non-decreasing function.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import ClassVar, NamedTuple

import numpy as np

from .exceptions import DomainError, ValidationError

__all__ = [
    "Segment",
    "PiecewiseLinear",
    "Contract",
    "FamilySpec",
    "FullInsurance",
    "StraightDeductible",
    "Coinsurance",
    "Mixed",
    "DisappearingDeductible",
    "ConstantRetention",
    "NoSabotageReport",
    "construct",
    "evaluate",
    "max_slope",
    "jumps",
    "retention",
    "check_no_sabotage",
    "family_from_dict",
    "contract_from_dict",
    "dumps",
]


def _tol(domain_max):
    return 1e-11 * max(1.0, float(domain_max))


class Segment(NamedTuple):
    x_start: float
    x_end: float
    intercept: float
    slope: float

    @property
    def left_limit(self):
        """Value approached from the left at ``x_end``."""
        return self.intercept + self.slope * (self.x_end - self.x_start)


class PiecewiseLinear:
    """Right-continuous piecewise-linear function on ``[0, M]``.

    Only the tiling of the domain is checked here; monotonicity and the
    indemnity bounds are the business of :class:`Contract`. A zero-width
    segment is allowed only as the last one, at ``x = M``, to carry a jump
    located exactly at the upper end of the support.
    """

    def __init__(self, domain_max, segments):
        domain_max = float(domain_max)
        if not np.isfinite(domain_max) or domain_max <= 0:
            raise ValidationError(f"domain_max must be positive and finite, got {domain_max}")
        segs = tuple(Segment(*(float(v) for v in s)) for s in segments)
        if not segs:
            raise ValidationError("at least one segment is required")
        arr = np.array(segs, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("segment fields must be finite")
        if segs[0].x_start != 0.0:
            raise ValidationError("first segment must start at 0")
        if segs[-1].x_end != domain_max:
            raise ValidationError("last segment must end at domain_max")
        for k, s in enumerate(segs):
            if s.x_end < s.x_start:
                raise ValidationError(f"segment {k} has x_end < x_start")
            if s.x_end == s.x_start and not (k == len(segs) - 1 and k > 0 and s.x_start == domain_max):
                raise ValidationError(f"segment {k} is empty")
            if k > 0 and s.x_start != segs[k - 1].x_end:
                raise ValidationError(f"segments {k - 1} and {k} are not contiguous")
        self._domain_max = domain_max
        self._segments = segs
        self._starts = arr[:, 0].copy()
        self._intercepts = arr[:, 2].copy()
        self._slopes = arr[:, 3].copy()
        for a in (self._starts, self._intercepts, self._slopes):
            a.setflags(write=False)

    @property
    def domain_max(self):
        return self._domain_max

    @property
    def segments(self):
        return self._segments

    @property
    def breakpoints(self):
        """Interior segment starts (plus ``M`` when a terminal jump sits there)."""
        return self._starts[1:].copy()

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        xa = np.asarray(x, dtype=float)
        # NaN fails both comparisons
        if xa.size and not (xa.min() >= 0.0 and xa.max() <= self._domain_max):
            raise DomainError(f"loss must lie in [0, {self._domain_max}]")
        idx = np.searchsorted(self._starts, xa, side="right") - 1
        out = self._intercepts[idx] + self._slopes[idx] * (xa - self._starts[idx])
        if np.ndim(x) == 0:
            return float(out)
        return out

    def left_limits(self):
        """Left limits at every interior breakpoint, aligned with :attr:`breakpoints`."""
        return np.array([s.left_limit for s in self._segments[:-1]])

    def to_dict(self):
        return {
            "domain_max": self._domain_max,
            "segments": [s._asdict() for s in self._segments],
        }

    def __eq__(self, other):
        if not isinstance(other, PiecewiseLinear):
            return NotImplemented
        return self._domain_max == other._domain_max and self._segments == other._segments

    def __hash__(self):
        return hash((self._domain_max, self._segments))

    def __repr__(self):
        return f"{type(self).__name__}(domain_max={self._domain_max!r}, segments={list(self._segments)!r})"


class Contract(PiecewiseLinear):
    """Feasible indemnity schedule: non-decreasing, usc, and ``0 <= Y(x) <= x``."""

    def __init__(self, domain_max, segments):
        super().__init__(domain_max, segments)
        tol = _tol(self.domain_max)
        for k, s in enumerate(self.segments):
            if s.slope < 0:
                raise ValidationError(f"segment {k} has negative slope {s.slope}")
            if s.intercept < -tol:
                raise ValidationError(f"segment {k} pays a negative indemnity")
            if s.intercept > s.x_start + tol or s.left_limit > s.x_end + tol:
                raise ValidationError(f"segment {k} pays more than the loss")
            if k > 0 and s.intercept < self.segments[k - 1].left_limit - tol:
                raise ValidationError(f"schedule decreases at x={s.x_start}")

    @classmethod
    def from_points(cls, domain_max, xs, ys):
        """Continuous contract through the points ``(xs[i], ys[i])``."""
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
        segs = []
        for k in range(len(xs) - 1):
            slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
            segs.append((xs[k], xs[k + 1], ys[k], slope))
        return cls(domain_max, segs)


def canonical_segments(segments, domain_max):
    """Merge collinear continuous neighbours and drop a redundant terminal point segment."""
    tol = _tol(domain_max)
    out = []
    for s in segments:
        s = Segment(*s)
        if out:
            prev = out[-1]
            continuous = abs(s.intercept - prev.left_limit) <= tol
            if s.x_start == s.x_end and continuous:
                continue
            if continuous and abs(s.slope - prev.slope) <= 1e-12 * max(1.0, abs(prev.slope)):
                out[-1] = Segment(prev.x_start, s.x_end, prev.intercept, prev.slope)
                continue
        out.append(s)
    return out


# --------------------------------------------------------------------------
# Families
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Base class for parametric contract families."""

    registry: ClassVar[dict] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        FamilySpec.registry[cls.__name__] = cls

    def validate(self, domain_max):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ValidationError(f"{type(self).__name__}.{f.name} must be finite")

    def segments(self, domain_max):
        raise NotImplementedError

    def to_dict(self):
        return {"type": type(self).__name__, "params": asdict(self)}


@dataclass(frozen=True)
class FullInsurance(FamilySpec):
    def segments(self, domain_max):
        return [(0.0, domain_max, 0.0, 1.0)]


@dataclass(frozen=True)
class StraightDeductible(FamilySpec):
    d: float

    def validate(self, domain_max):
        super().validate(domain_max)
        if not 0.0 <= self.d <= domain_max:
            raise ValidationError(f"deductible must lie in [0, M], got {self.d}")

    def segments(self, domain_max):
        if self.d == 0.0:
            return [(0.0, domain_max, 0.0, 1.0)]
        if self.d == domain_max:
            return [(0.0, domain_max, 0.0, 0.0)]
        return [(0.0, self.d, 0.0, 0.0), (self.d, domain_max, 0.0, 1.0)]


@dataclass(frozen=True)
class Coinsurance(FamilySpec):
    alpha: float

    def validate(self, domain_max):
        super().validate(domain_max)
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"coinsurance rate must lie in (0, 1), got {self.alpha}")

    def segments(self, domain_max):
        return [(0.0, domain_max, 0.0, self.alpha)]


@dataclass(frozen=True)
class Mixed(FamilySpec):
    """``Y(x) = min(delta, max(0, alpha*x - d))``."""

    delta: float
    alpha: float
    d: float

    def validate(self, domain_max):
        super().validate(domain_max)
        if not 0.0 < self.delta <= domain_max:
            raise ValidationError(f"upper limit must lie in (0, M], got {self.delta}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"coinsurance rate must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.d <= domain_max:
            raise ValidationError(f"deductible must lie in [0, M], got {self.d}")

    def segments(self, domain_max):
        rise = self.d / self.alpha
        cap = (self.d + self.delta) / self.alpha
        if rise >= domain_max:
            return [(0.0, domain_max, 0.0, 0.0)]
        segs = []
        if rise > 0.0:
            segs.append((0.0, rise, 0.0, 0.0))
        segs.append((rise, min(cap, domain_max), 0.0, self.alpha))
        if cap < domain_max:
            segs.append((cap, domain_max, self.delta, 0.0))
        return segs


@dataclass(frozen=True)
class DisappearingDeductible(FamilySpec):
    """Zero up to ``d``, then linear up to full cover ``Y(M) = M``."""

    d: float

    def validate(self, domain_max):
        super().validate(domain_max)
        if not 0.0 <= self.d < domain_max:
            raise ValidationError(f"disappearing deductible must lie in [0, M), got {self.d}")

    def segments(self, domain_max):
        if self.d == 0.0:
            return [(0.0, domain_max, 0.0, 1.0)]
        slope = domain_max / (domain_max - self.d)
        return [(0.0, self.d, 0.0, 0.0), (self.d, domain_max, 0.0, slope)]


@dataclass(frozen=True)
class ConstantRetention(FamilySpec):
    """Zero below the threshold ``t``, ``x - j`` from ``t`` on; jump ``t - j``."""

    t: float
    j: float

    def validate(self, domain_max):
        super().validate(domain_max)
        if not 0.0 <= self.j <= self.t <= domain_max:
            raise ValidationError(f"need 0 <= j <= t <= M, got t={self.t}, j={self.j}")

    def segments(self, domain_max):
        if self.t == 0.0:
            return [(0.0, domain_max, 0.0, 1.0)]
        return [(0.0, self.t, 0.0, 0.0), (self.t, domain_max, self.t - self.j, 1.0)]


def construct(spec, domain_max):
    """Build the :class:`Contract` of a family member on ``[0, domain_max]``."""
    domain_max = float(domain_max)
    spec.validate(domain_max)
    return Contract(domain_max, canonical_segments(spec.segments(domain_max), domain_max))


def family_from_dict(obj):
    try:
        cls = FamilySpec.registry[obj["type"]]
    except KeyError as exc:
        raise ValidationError(f"unknown contract family {obj.get('type')!r}") from exc
    try:
        return cls(**{k: float(v) for k, v in obj.get("params", {}).items()})
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {obj['type']}: {exc}") from exc


def contract_from_dict(obj):
    segs = [(s["x_start"], s["x_end"], s["intercept"], s["slope"]) for s in obj["segments"]]
    return Contract(obj["domain_max"], segs)


def dumps(obj):
    """Canonical JSON text for a contract or family; floats use shortest repr."""
    return json.dumps(obj.to_dict(), separators=(", ", ": "))


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def evaluate(contract, x):
    return contract.evaluate(x)


def jumps(contract):
    """``(location, size)`` for every upward jump of the schedule."""
    tol = _tol(contract.domain_max)
    out = []
    for prev, nxt in zip(contract.segments[:-1], contract.segments[1:]):
        size = nxt.intercept - prev.left_limit
        if size > tol:
            out.append((nxt.x_start, size))
    return out


def max_slope(contract):
    """Largest segment slope and whether the schedule has any jump."""
    slopes = [s.slope for s in contract.segments if s.x_end > s.x_start]
    return max(slopes), bool(jumps(contract))


def retention(contract):
    """Retained loss ``R(x) = x - Y(x)`` as a piecewise-linear function."""
    segs = [(s.x_start, s.x_end, s.x_start - s.intercept, 1.0 - s.slope) for s in contract.segments]
    return PiecewiseLinear(contract.domain_max, segs)


@dataclass(frozen=True)
class NoSabotageReport:
    slope_ok: bool
    retention_monotone: bool
    comonotone: bool
    slope_witness: float | None = None
    retention_witness: float | None = None
    comonotone_witness: float | None = None

    @property
    def ok(self):
        return self.slope_ok and self.retention_monotone and self.comonotone


def scan_grid(contract, grid_n):
    """Uniform grid on ``[0, M]`` merged with the contract breakpoints."""
    grid = np.linspace(0.0, contract.domain_max, int(grid_n))
    return np.unique(np.concatenate([grid, contract.breakpoints]))


def check_no_sabotage(contract, grid_n=2001):
    """Check the three no-sabotage conditions, reporting a failing loss for each."""
    tol = _tol(contract.domain_max)
    sup, has_jump = max_slope(contract)
    slope_witness = None
    if has_jump:
        slope_witness = jumps(contract)[0][0]
    elif sup > 1.0 + tol:
        steep = next(s for s in contract.segments if s.slope > 1.0 + tol and s.x_end > s.x_start)
        slope_witness = 0.5 * (steep.x_start + steep.x_end)

    x = scan_grid(contract, grid_n)
    y = contract(x)
    r = retention(contract)(x)
    r_bad = np.flatnonzero(np.diff(r) < -tol)
    y_bad = np.flatnonzero(np.diff(y) < -tol)
    retention_witness = float(x[r_bad[0] + 1]) if r_bad.size else None
    como_bad = np.union1d(r_bad, y_bad)
    comonotone_witness = float(x[como_bad[0] + 1]) if como_bad.size else None
    return NoSabotageReport(
        slope_ok=slope_witness is None,
        retention_monotone=retention_witness is None,
        comonotone=comonotone_witness is None,
        slope_witness=slope_witness,
        retention_witness=retention_witness,
        comonotone_witness=comonotone_witness,
    )
