"""Deterministic derivative-free maximisers used by the contract solvers."""
from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, xtol, max_iter=200):
    """Maximise a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x), n_evals)``. The end points are evaluated too, so a
    monotone objective converges to the right bound exactly.
    """
    a, b = float(lo), float(hi)
    f_lo, f_hi = f(a), f(b)
    n = 2
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n += 2
    it = 0
    while b - a > xtol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
        it += 1
    # bounds first: on exact ties the end point wins
    best = max([(f_lo, float(lo)), (f_hi, float(hi)), (fc, c), (fd, d)], key=lambda p: p[0])
    return best[1], best[0], n


def line_search_max(f, lo, hi, xtol, n_scan=9):
    """Scan ``n_scan`` evenly spaced points, then golden-refine around the best one."""
    pts = np.linspace(lo, hi, n_scan)
    vals = [f(p) for p in pts]
    k = int(np.argmax(vals))
    a = pts[max(k - 1, 0)]
    b = pts[min(k + 1, n_scan - 1)]
    x, fx, n = golden_section_max(f, a, b, xtol)
    if vals[k] > fx:
        return float(pts[k]), vals[k], n + n_scan
    return x, fx, n + n_scan
