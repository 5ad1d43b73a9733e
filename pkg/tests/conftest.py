import numpy as np
import pytest

from arsonproof.contracts import Contract
from arsonproof.equilibrium import Scenario
from arsonproof.pricing import LossModel, Uniform

M = 4.0
BETAS = (0.0, 0.25, 1.0)

# slope bands that avoid the ambiguous zone (L, L + 0.2] for every L in 1 + BETAS
_FLAT = (0.0, 1.0)
_MID = (1.5, 1.9)
_STEEP = (2.3, 3.5)


def random_contract(rng, big_m=M, max_segments=6, min_len=0.2):
    """Random non-decreasing usc piecewise-linear contract with 0 <= Y <= x.

    Every feature is large compared with a 2001-point grid step: segments are
    at least ``min_len`` long, jumps are zero or at least 0.1, and slopes stay
    out of the band just above each Lipschitz cap under test.
    """
    k = int(rng.integers(1, max_segments + 1))
    free = big_m - k * min_len
    cuts = np.sort(rng.uniform(0.0, free, size=k - 1))
    edges = np.concatenate([[0.0], cuts + min_len * np.arange(1, k), [big_m]])
    segs = []
    end_val = 0.0
    for i in range(k):
        a, b = float(edges[i]), float(edges[i + 1])
        start = end_val
        if i > 0 and rng.random() < 0.35:
            room = a - end_val
            if room >= 0.1:
                start = end_val + float(rng.uniform(0.1, room))
        band = rng.choice(3, p=[0.5, 0.25, 0.25])
        slope = float(rng.uniform(*(_FLAT, _MID, _STEEP)[band]))
        if rng.random() < 0.15:
            slope = 0.0
        if start + slope * (b - a) > b:
            slope = float(rng.uniform(*_FLAT))
        segs.append((a, b, start, slope))
        end_val = start + slope * (b - a)
    return Contract(big_m, segs)


@pytest.fixture(scope="session")
def corpus():
    rng = np.random.default_rng(20240607)
    return [random_contract(rng) for _ in range(200)]


@pytest.fixture
def base_scenario():
    return Scenario(W0=10.0, loss=LossModel(M, 0.5, Uniform()))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
