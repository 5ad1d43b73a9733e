"""Expected utility of the contracting game and the contract design solvers.

The insured's final wealth in a state with loss ``x`` is

    W0 - H - x - (1 + beta) z + Y(x + z)

with ``z`` the insured's optimal extra damage (or zero when manipulation is ruled
out). Premiums always satisfy the insurer's break-even condition.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .contracts import (
    ConstantRetention,
    Contract,
    StraightDeductible,
    canonical_segments,
    construct,
    max_slope,
)
from .exceptions import DomainError, ValidationError
from .manipulation import DEFAULT_GRID_N, best_responses, envelope_exact
from .optimize import golden_section_max, line_search_max
from .pricing import DEFAULT_QUAD_N, FixedPerClaim, LossModel, ZeroCost, quadrature_nodes
from .utility import CRRA, check_utility

logger = logging.getLogger(__name__)

__all__ = [
    "Scenario",
    "SolveResult",
    "DominanceReport",
    "EpsilonReport",
    "evaluate_contract",
    "expected_utility",
    "manipulation_probability",
    "dominance_check",
    "solve_deductible",
    "solve_constant_retention",
    "epsilon_improvement",
    "solve_problem_s_pwl",
    "write_trace_csv",
]


@dataclass(frozen=True)
class Scenario:
    W0: float = 10.0
    rho: float = 0.0
    beta: float = 0.0
    utility: object = field(default_factory=lambda: CRRA(2.0))
    loss: LossModel = field(default_factory=lambda: LossModel(4.0, 0.5))
    cost: object = field(default_factory=ZeroCost)
    grid_n: int = DEFAULT_GRID_N
    quad_n: int = DEFAULT_QUAD_N

    def __post_init__(self):
        if self.rho < 0:
            raise ValidationError(f"rho must be non-negative, got {self.rho}")
        if self.beta < 0:
            raise ValidationError(f"beta must be non-negative, got {self.beta}")
        if self.grid_n < 2:
            raise ValidationError("grid_n must be at least 2")
        if self.quad_n < 16:
            raise ValidationError("quad_n must be at least 16")
        check_utility(self.utility)
        big_m = self.loss.M
        worst = big_m + (1.0 + self.rho) * (big_m + float(self.cost(big_m)))
        if not self.W0 > worst:
            raise ValidationError(
                f"W0={self.W0} does not keep final wealth positive; need W0 > {worst:.6g} "
                "(loss bound plus worst-case premium)"
            )

    @property
    def M(self):
        return self.loss.M

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self):
        return {
            "W0": self.W0,
            "rho": self.rho,
            "beta": self.beta,
            "utility": self.utility.to_dict(),
            "loss": self.loss.to_dict(),
            "cost": self.cost.to_dict(),
            "grid_n": self.grid_n,
            "quad_n": self.quad_n,
        }


@dataclass
class SolveResult:
    family_params: object
    contract: Contract
    premium: float
    expected_utility: float
    manipulation_probability: float
    max_slope_used: float
    optimizer_evals: int = 0
    trace: list = field(default_factory=list, repr=False)
    scan: tuple | None = field(default=None, repr=False)

    def to_dict(self):
        return {
            "family_params": None if self.family_params is None else self.family_params.to_dict(),
            "contract": self.contract.to_dict(),
            "premium": self.premium,
            "expected_utility": self.expected_utility,
            "manipulation_probability": self.manipulation_probability,
            "max_slope_used": self.max_slope_used,
            "optimizer_evals": self.optimizer_evals,
        }


@dataclass
class _Evaluation:
    premium: float
    expected_utility: float
    manipulation_probability: float


def _nodes(scn, contract, with_manipulation):
    bps = contract.breakpoints
    if with_manipulation:
        bps = np.concatenate([bps, envelope_exact(contract, scn.beta).breakpoints])
    return quadrature_nodes(scn.loss, scn.quad_n, bps)


def _state_payoffs(scn, contract, x, with_manipulation):
    """``(claim paid, insured's net indemnity, extra damage)`` at each node."""
    if not with_manipulation:
        y = contract(x)
        return y, y, np.zeros_like(x)
    z, pay = best_responses(contract, x, scn.beta, scn.grid_n)
    claim = contract(np.minimum(x + z, contract.domain_max))
    return claim, pay, z


def _eu_from_wealth(scn, x, w, wealth):
    bad = np.flatnonzero(wealth <= 0.0)
    if bad.size:
        raise DomainError(
            f"final wealth {wealth[bad[0]]:.6g} is not positive at loss node x={x[bad[0]]:.6g}; "
            "use a larger W0"
        )
    return float(np.dot(w, scn.utility(wealth)))


def evaluate_contract(scn, contract, with_manipulation=False, H=None):
    """Price ``contract`` at break-even (unless ``H`` is given) and compute its expected utility."""
    x, w = _nodes(scn, contract, with_manipulation)
    claim, pay, z = _state_payoffs(scn, contract, x, with_manipulation)
    if H is None:
        H = (1.0 + scn.rho) * float(np.dot(w, claim + scn.cost(claim)))
    eu = _eu_from_wealth(scn, x, w, scn.W0 - H - x + pay)
    prob = float(np.dot(w, z > 0.0))
    return _Evaluation(H, eu, min(max(prob, 0.0), 1.0))


def expected_utility(scn, contract, H, with_manipulation=False):
    """Expected utility of final wealth when ``contract`` is bought at price ``H``."""
    return evaluate_contract(scn, contract, with_manipulation, H).expected_utility


def manipulation_probability(scn, contract):
    """Probability that the insured inflates the loss under ``contract``."""
    x, w = _nodes(scn, contract, True)
    z, _ = best_responses(contract, x, scn.beta, scn.grid_n)
    return float(min(max(np.dot(w, z > 0.0), 0.0), 1.0))


def _result(scn, spec, contract, with_manipulation, evals=0, trace=None):
    ev = evaluate_contract(scn, contract, with_manipulation)
    prob = ev.manipulation_probability if with_manipulation else manipulation_probability(scn, contract)
    return SolveResult(
        family_params=spec,
        contract=contract,
        premium=ev.premium,
        expected_utility=ev.expected_utility,
        manipulation_probability=prob,
        max_slope_used=max_slope(contract)[0],
        optimizer_evals=evals,
        trace=trace or [],
    )


# --------------------------------------------------------------------------
# Dominance of the envelope
# --------------------------------------------------------------------------


@dataclass
class DominanceReport:
    original: SolveResult
    envelope: SolveResult
    strictly_dominated: bool


def dominance_check(scn, contract):
    """Compare a contract (priced with manipulation) against its envelope (priced without)."""
    original = _result(scn, None, contract, with_manipulation=True)
    env = envelope_exact(contract, scn.beta)
    envelope = _result(scn, None, env, with_manipulation=False)
    strictly = (
        original.manipulation_probability > 0.0
        and envelope.premium < original.premium
        and envelope.expected_utility > original.expected_utility
    )
    return DominanceReport(original, envelope, bool(strictly))


# --------------------------------------------------------------------------
# Solvers
# --------------------------------------------------------------------------


def _no_ic_eu(scn, contract):
    return evaluate_contract(scn, contract, with_manipulation=False)


def solve_deductible(scn, coarse_n=257, xtol=None):
    """Best straight deductible: coarse scan of ``d`` then golden-section refinement."""
    big_m = scn.M
    xtol = 1e-6 * big_m if xtol is None else xtol
    trace = []

    def objective(d):
        ev = _no_ic_eu(scn, construct(StraightDeductible(float(d)), big_m))
        trace.append({"params": {"d": float(d)}, "eu": ev.expected_utility, "premium": ev.premium})
        return ev.expected_utility

    grid = np.linspace(0.0, big_m, coarse_n)
    scan = np.array([objective(d) for d in grid])
    k = int(np.argmax(scan))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, coarse_n - 1)]
    d_star, eu_star, _ = golden_section_max(objective, lo, hi, xtol)
    if scan[k] > eu_star:
        d_star = float(grid[k])
    d_star = min(max(d_star, 0.0), big_m)
    spec = StraightDeductible(d_star)
    res = _result(scn, spec, construct(spec, big_m), False, evals=len(trace), trace=trace)
    res.scan = (grid, scan)
    logger.debug("deductible optimum d=%.9g eu=%.12g after %d evaluations", d_star, res.expected_utility, len(trace))
    return res


def solve_constant_retention(scn, coarse_n=129, xtol=None, max_rounds=50):
    """Best constant-retention contract with the incentive constraint switched off.

    Scans the triangle ``0 <= j <= t <= M`` on a ``coarse_n``-point grid, then
    alternates golden-section searches on ``t`` and ``j`` within one grid
    step of the incumbent.
    """
    big_m = scn.M
    xtol = 1e-7 * big_m if xtol is None else xtol
    trace = []

    def eu(t, j):
        t = min(max(float(t), 0.0), big_m)
        j = min(max(float(j), 0.0), t)
        ev = _no_ic_eu(scn, construct(ConstantRetention(t, j), big_m))
        trace.append({"params": {"t": t, "j": j}, "eu": ev.expected_utility, "premium": ev.premium})
        return ev.expected_utility

    grid = np.linspace(0.0, big_m, coarse_n)
    step = grid[1] - grid[0]
    best = (-np.inf, 0.0, 0.0)
    for it, t in enumerate(grid):
        for j in grid[: it + 1]:
            val = eu(t, j)
            if val > best[0]:
                best = (val, float(t), float(j))
    f_best, t, j = best

    for _ in range(max_rounds):
        prev = f_best
        t_new, f_t, _ = golden_section_max(lambda v: eu(v, j), max(j, t - step), min(big_m, t + step), xtol)
        if f_t > f_best:
            t, f_best = t_new, f_t
        j_new, f_j, _ = golden_section_max(lambda v: eu(t, v), max(0.0, j - step), min(t, j + step), xtol)
        if f_j > f_best:
            j, f_best = j_new, f_j
        if f_best - prev <= 1e-14 * max(1.0, abs(prev)):
            break

    spec = ConstantRetention(t, min(j, t))
    return _result(scn, spec, construct(spec, big_m), False, evals=len(trace), trace=trace)


@dataclass(frozen=True)
class EpsilonReport:
    eu_base: float
    eu_improved: float
    premium_base: float
    premium_improved: float
    improved: bool


def epsilon_improvement(scn, d_star, eps, tol=1e-12):
    """Compare the deductible at ``d_star`` with paying ``x - d_star + eps`` on every claim.

    Both contracts are priced at break-even and the incentive constraint is
    ignored, as in the no-arson benchmark.
    """
    if not isinstance(scn.cost, (FixedPerClaim, ZeroCost)):
        raise ValidationError("epsilon_improvement needs a fixed-per-claim (or zero) cost")
    if not 0.0 < eps < d_star:
        raise ValidationError(f"need 0 < eps < d_star, got eps={eps}, d_star={d_star}")
    big_m = scn.M
    base = _no_ic_eu(scn, construct(StraightDeductible(d_star), big_m))
    jumped = _no_ic_eu(scn, construct(ConstantRetention(d_star, d_star - eps), big_m))
    return EpsilonReport(
        eu_base=base.expected_utility,
        eu_improved=jumped.expected_utility,
        premium_base=base.premium,
        premium_improved=jumped.premium,
        improved=bool(jumped.expected_utility > base.expected_utility + tol),
    )


def _pwl_contract(big_m, knots, slopes):
    xs = np.concatenate([[0.0], knots, [big_m]])
    ys = np.concatenate([[0.0], np.cumsum(np.asarray(slopes) * np.diff(xs))])
    return xs, ys


def _starting_shapes(big_m, n_knots, lip):
    def spread(lo):
        return list(np.linspace(lo, big_m, n_knots + 2)[1:-1]) if lo == 0.0 else [lo] + list(
            np.linspace(lo, big_m, n_knots + 1)[1:-1]
        )

    def ded(d):
        return spread(d), [0.0] + [1.0] * n_knots

    shapes = [
        (spread(0.0), [1.0] * (n_knots + 1)),
        ded(big_m / 8),
        ded(big_m / 4),
        ded(big_m / 2),
        ded(3 * big_m / 4),
        (spread(0.0), [0.5] * (n_knots + 1)),
        (spread(big_m / 4), [0.0] + [0.8] * n_knots),
        (spread(0.0), [0.0] * (n_knots + 1)),
    ]
    return [(np.array(k, dtype=float), np.minimum(np.array(s, dtype=float), lip)) for k, s in shapes]


def solve_problem_s_pwl(scn, n_knots=3, xtol=None, max_rounds=20, min_gap=None, rtol=1e-12):
    """Best continuous piecewise-linear contract with slopes in ``[0, 1 + beta]``.

    Coordinate ascent over knot positions and segment slopes from eight
    fixed starting shapes; the best local optimum found is returned. Only
    contracts with ``0 <= Y(x) <= x`` are admissible.
    """
    if not 1 <= n_knots <= 5:
        raise ValidationError("n_knots must lie in 1..5")
    big_m = scn.M
    lip = 1.0 + scn.beta
    xtol = 1e-7 * big_m if xtol is None else xtol
    min_gap = 1e-6 * big_m if min_gap is None else min_gap
    trace = []

    def objective(knots, slopes):
        params = {**{f"knot{i}": float(k) for i, k in enumerate(knots)},
                  **{f"slope{i}": float(v) for i, v in enumerate(slopes)}}
        xs, ys = _pwl_contract(big_m, knots, slopes)
        if np.any(ys > xs + 1e-12 * big_m):
            trace.append({"params": params, "eu": -np.inf, "premium": np.nan})
            return -np.inf
        ev = _no_ic_eu(scn, Contract.from_points(big_m, xs, np.minimum(ys, xs)))
        trace.append({"params": params, "eu": ev.expected_utility, "premium": ev.premium})
        return ev.expected_utility

    best_overall = None
    for knots, slopes in _starting_shapes(big_m, n_knots, lip):
        f_cur = objective(knots, slopes)
        if not np.isfinite(f_cur):
            continue
        for _ in range(max_rounds):
            prev = f_cur
            for i in range(n_knots):
                lo = (knots[i - 1] if i > 0 else 0.0) + min_gap
                hi = (knots[i + 1] if i < n_knots - 1 else big_m) - min_gap
                if hi <= lo:
                    continue

                def along_knot(v, i=i):
                    trial = knots.copy()
                    trial[i] = v
                    return objective(trial, slopes)

                v, f_v, _ = line_search_max(along_knot, lo, hi, xtol)
                if f_v > f_cur + rtol * abs(f_cur):
                    knots[i], f_cur = v, f_v
            for i in range(n_knots + 1):

                def along_slope(v, i=i):
                    trial = slopes.copy()
                    trial[i] = v
                    return objective(knots, trial)

                v, f_v, _ = line_search_max(along_slope, 0.0, lip, 1e-9)
                if f_v > f_cur + rtol * abs(f_cur):
                    slopes[i], f_cur = v, f_v
            if f_cur - prev <= 10 * rtol * abs(prev):
                break
        if best_overall is None or f_cur > best_overall[0] + rtol * abs(best_overall[0]):
            best_overall = (f_cur, knots.copy(), slopes.copy())

    _, knots, slopes = best_overall
    xs, ys = _pwl_contract(big_m, knots, slopes)
    raw = Contract.from_points(big_m, xs, np.minimum(ys, xs))
    contract = Contract(big_m, canonical_segments(raw.segments, big_m))
    return _result(scn, None, contract, False, evals=len(trace), trace=trace)


def write_trace_csv(trace, fh=None, digits=12):
    """Solver trace as CSV: ``iteration, params, eu, premium``."""
    buf = io.StringIO() if fh is None else fh
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "params", "eu", "premium"])
    for i, row in enumerate(trace):
        params = ";".join(f"{k}={v:.{digits}g}" for k, v in row["params"].items())
        writer.writerow([i, params, f"{row['eu']:.{digits}g}", f"{row['premium']:.{digits}g}"])
    if fh is None:
        return buf.getvalue()
    return None
