"""Claim inflation after the loss: best responses, value functions and envelopes.

After observing a loss ``x`` the insured may destroy an extra ``z`` in
``[0, M - x]`` at private cost ``(1 + beta) * z`` and collect ``Y(x + z)``.
The value of that problem is the smallest ``(1 + beta)``-Lipschitz majorant
of ``Y`` looking rightwards,

    V(x) = max_{p >= x} Y(p) - (1 + beta) (p - x),

and replacing ``Y`` by ``V`` gives a schedule under which ``z = 0`` is optimal.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .contracts import Contract, _tol, canonical_segments
from .exceptions import DomainError

__all__ = [
    "ManipulationOutcome",
    "ProofnessReport",
    "Sampled",
    "ManipulationMap",
    "best_response",
    "best_responses",
    "value_function_oracle",
    "envelope_backward",
    "envelope_exact",
    "is_manipulation_proof",
    "envelope_table",
    "write_envelope_csv",
]

DEFAULT_GRID_N = 2001


class Sampled(NamedTuple):
    """A function sampled on a grid."""

    x: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ManipulationOutcome:
    z_star: float
    payoff: float
    argmax_set: tuple
    zero_is_optimal: bool


@dataclass(frozen=True)
class ProofnessReport:
    proof: bool
    witness_x: float | None = None
    witness_z: float | None = None
    gain: float = 0.0

    def __bool__(self):
        return self.proof


def _default_tie_tol(contract):
    return 1e-9 * contract.domain_max


def _candidates(contract, x, grid_n):
    """Candidate extra damages for each loss in ``x`` (rows) and a feasibility mask.

    Columns: a uniform grid on ``[0, M - x]`` followed by every breakpoint
    of the schedule shifted to the loss, so jump points are always tried.
    """
    big_m = contract.domain_max
    room = big_m - x
    u = np.linspace(0.0, 1.0, int(grid_n))
    z_grid = room[:, None] * u[None, :]
    kinks = np.append(contract.breakpoints, big_m)
    z_kink = kinks[None, :] - x[:, None]
    ok = np.concatenate([np.ones(z_grid.shape, dtype=bool), z_kink >= 0.0], axis=1)
    z = np.concatenate([z_grid, np.maximum(z_kink, 0.0)], axis=1)
    return z, ok


def _payoffs(contract, x, z, ok, beta):
    target = np.minimum(x[:, None] + z, contract.domain_max)
    pay = contract(target) - (1.0 + beta) * z
    pay[~ok] = -np.inf
    return pay


def _check_losses(contract, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > contract.domain_max):
        raise DomainError(f"loss must lie in [0, {contract.domain_max}]")
    return x


def best_response(contract, x, beta=0.0, grid_n=DEFAULT_GRID_N, tie_tol=None):
    """Optimal extra damage at loss ``x``; ties go to the smallest ``z``.

    Among maximisers the insurer prefers the smallest claim, and with a
    non-decreasing schedule that is the smallest ``z``.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    tie_tol = _default_tie_tol(contract) if tie_tol is None else tie_tol
    xs = _check_losses(contract, x)
    z, ok = _candidates(contract, xs, grid_n)
    pay = _payoffs(contract, xs, z, ok, beta)
    z, pay = z[0][ok[0]], pay[0][ok[0]]
    order = np.lexsort((pay, z))
    z, pay = z[order], pay[order]
    best = pay.max()
    hit = pay >= best - tie_tol
    runs = []
    start = end = None
    for zk, hk in zip(z, hit):
        if hk:
            start = zk if start is None else start
            end = zk
        elif start is not None:
            runs.append((float(start), float(end)))
            start = None
    if start is not None:
        runs.append((float(start), float(end)))
    z_star = runs[0][0]
    payoff = float(pay[np.flatnonzero(z == z_star)[0]])
    zero_pay = float(pay[np.flatnonzero(z == 0.0)[0]])
    return ManipulationOutcome(
        z_star=z_star,
        payoff=payoff,
        argmax_set=tuple(runs),
        zero_is_optimal=bool(zero_pay >= best - tie_tol),
    )


def best_responses(contract, x, beta=0.0, grid_n=DEFAULT_GRID_N, tie_tol=None, chunk=512):
    """Vectorised :func:`best_response`: returns ``(z_star, payoff)`` arrays."""
    tie_tol = _default_tie_tol(contract) if tie_tol is None else tie_tol
    xs = _check_losses(contract, x)
    z_out = np.empty_like(xs)
    p_out = np.empty_like(xs)
    for lo in range(0, len(xs), chunk):
        sl = slice(lo, lo + chunk)
        z, ok = _candidates(contract, xs[sl], grid_n)
        pay = _payoffs(contract, xs[sl], z, ok, beta)
        best = pay.max(axis=1)
        hit = pay >= (best - tie_tol)[:, None]
        z_min = np.where(hit, z, np.inf).min(axis=1)
        z_out[sl] = z_min
        p_out[sl] = pay[np.arange(len(z_min)), np.argmax(hit & (z == z_min[:, None]), axis=1)]
    return z_out, p_out


def uniform_grid(contract, grid_n):
    return np.linspace(0.0, contract.domain_max, int(grid_n))


def value_function_oracle(contract, beta=0.0, grid_n=DEFAULT_GRID_N, chunk=64):
    """Value function on the uniform grid by exhaustive search over all targets.

    Every grid point to the right of ``x`` and every breakpoint is tried as
    the post-manipulation loss. Shares no code with the segment sweep in
    :func:`envelope_exact`, so each can check the other.
    """
    lip = 1.0 + beta
    x = uniform_grid(contract, grid_n)
    targets = np.unique(np.concatenate([x, contract.breakpoints]))
    h = contract(targets) - lip * targets
    v = np.empty_like(x)
    for lo in range(0, len(x), chunk):
        xs = x[lo:lo + chunk]
        first = int(np.searchsorted(targets, xs[0]))
        last = int(np.searchsorted(targets, xs[-1], side="right"))
        # targets past the chunk are feasible for every row in it
        tail = h[last:].max() if last < len(h) else -np.inf
        block = h[None, first:last]
        head = np.where(targets[None, first:last] >= xs[:, None], block, -np.inf).max(axis=1)
        v[lo:lo + chunk] = np.maximum(head, tail) + lip * xs
    return Sampled(x, v)


def _grid_best(contract, beta, x):
    """Best target for each sorted loss in ``x`` among ``x`` itself and later grid/breakpoints.

    Uses a running maximum of ``Y(t) - (1+beta) t`` from the right, which
    scans exactly the same candidates as the exhaustive oracle.
    """
    lip = 1.0 + beta
    targets = np.unique(np.concatenate([x, contract.breakpoints]))
    h = contract(targets) - lip * targets
    rev = h[::-1]
    run = np.maximum.accumulate(rev)
    # index (in reversed order) of the running maximum's first occurrence
    idx = np.arange(len(rev))
    arg = np.maximum.accumulate(np.where(rev >= run, idx, 0))
    best_t = targets[::-1][arg][::-1]
    best_h = run[::-1]
    pos = np.searchsorted(targets, x)
    return best_t[pos], best_h[pos] + lip * x


def envelope_backward(contract, beta=0.0, grid_n=DEFAULT_GRID_N):
    """Value function by the backward recursion ``V_i = max(Y_i, V_{i+1} - (1+beta) step)``."""
    x = uniform_grid(contract, grid_n)
    y = contract(x)
    drop = (1.0 + beta) * (x[1] - x[0])
    v = y.copy()
    for i in range(len(x) - 2, -1, -1):
        v[i] = max(y[i], v[i + 1] - drop)
    return Sampled(x, v)


def envelope_exact(contract, beta=0.0):
    """Exact piecewise-linear value function, returned as a manipulation-proof contract.

    Sweeps segments right to left keeping ``m = max_{p >= b} Y(p) - L p``
    with ``L = 1 + beta``. A segment steeper than ``L`` (or one sitting below
    the running line) is replaced by the line ``m + L x``; a flatter segment
    keeps its own values up to where it crosses that line.
    """
    lip = 1.0 + beta
    eps = _tol(contract.domain_max)
    segs = contract.segments
    m = segs[-1].left_limit - lip * contract.domain_max
    out = []
    for s in reversed(segs):
        a, b = s.x_start, s.x_end
        if b == a:
            continue
        h_a = s.intercept - lip * a
        if s.slope > lip:
            out.append((a, b, m + lip * a, lip))
            continue
        if s.slope == lip:
            cross = b if h_a >= m - eps else a
        else:
            cross = a + (h_a - m) / (lip - s.slope)
            if cross <= a + eps:
                cross = a
            elif cross >= b - eps:
                cross = b
        if cross < b:
            out.append((cross, b, m + lip * cross, lip))
        if cross > a:
            out.append((a, cross, s.intercept, s.slope))
            m = max(m, h_a)
    out.reverse()
    return Contract(contract.domain_max, canonical_segments(out, contract.domain_max))


def is_manipulation_proof(contract, beta=0.0, grid_n=DEFAULT_GRID_N, tol=None):
    """True when no grid loss gains more than ``tol`` from inflating the claim."""
    x = uniform_grid(contract, grid_n)
    if tol is None:
        tol = (1.0 + beta) * (x[1] - x[0])
    target, pay = _grid_best(contract, beta, x)
    gain = pay - contract(x)
    k = int(np.argmax(gain))
    if gain[k] <= tol:
        return ProofnessReport(True, gain=float(max(gain[k], 0.0)))
    return ProofnessReport(False, float(x[k]), float(target[k] - x[k]), float(gain[k]))


class ManipulationMap:
    """Loss -> optimal extra damage, for pricing claims under manipulation.

    ``breakpoints`` lists the points where the map or the inflated claim can
    change regime; quadrature panels are split there.
    """

    def __init__(self, contract, beta=0.0, grid_n=DEFAULT_GRID_N):
        self.contract = contract
        self.beta = float(beta)
        self.grid_n = int(grid_n)
        self.envelope = envelope_exact(contract, beta)
        self.breakpoints = np.unique(np.concatenate([contract.breakpoints, self.envelope.breakpoints]))

    def __call__(self, x):
        z, _ = best_responses(self.contract, x, self.beta, self.grid_n)
        return z

    def payoff(self, x):
        _, pay = best_responses(self.contract, x, self.beta, self.grid_n)
        return pay


def envelope_table(contract, beta=0.0, grid_n=DEFAULT_GRID_N):
    """Columns ``x, Y, V, z_star, payoff`` on the uniform grid."""
    x = uniform_grid(contract, grid_n)
    env = envelope_exact(contract, beta)
    z, pay = best_responses(contract, x, beta, grid_n)
    return {"x": x, "Y": contract(x), "V": env(x), "z_star": z, "payoff": pay}


def write_envelope_csv(table, fh=None, digits=12):
    """Write an :func:`envelope_table` as CSV; returns the text when ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["x", "Y", "V", "z_star", "payoff"]
    writer.writerow(cols)
    for row in zip(*(table[c] for c in cols)):
        writer.writerow([f"{v:.{digits}g}" for v in row])
    if fh is None:
        return buf.getvalue()
    return None
