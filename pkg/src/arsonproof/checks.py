"""Named claims that ``arsonproof verify`` can check, one function per claim.

Each check takes ``(scenario, contract, params, expect)`` and returns
``(passed, details)``. ``expect`` entries flip or pin the asserted outcome so
that negative controls can be written in the suite file.
"""
from __future__ import annotations

import numpy as np

from .contracts import DisappearingDeductible, FullInsurance, construct, max_slope
from .equilibrium import (
    dominance_check,
    epsilon_improvement,
    evaluate_contract,
    solve_constant_retention,
    solve_deductible,
    solve_problem_s_pwl,
)
from .exceptions import ValidationError
from .manipulation import envelope_exact, is_manipulation_proof, value_function_oracle
from .pricing import integrate


def _need(contract, claim):
    if contract is None:
        raise ValidationError(f"check {claim!r} needs a contract")
    return contract


def binding_participation(scn, contract, params, expect):
    """Premium equals loaded expected claims plus costs, by an independent integration."""
    contract = _need(contract, "binding_participation")
    ev = evaluate_contract(scn, contract)
    fine = integrate(
        lambda x: contract(x) + scn.cost(contract(x)), scn.loss, 2 * scn.quad_n, contract.breakpoints
    )
    ok = abs(ev.premium - (1 + scn.rho) * fine) <= 1e-9 * max(1.0, scn.M)
    if "premium" in expect:
        ok = ok and abs(ev.premium - expect["premium"]) <= params.get("tol", 1e-8)
    return ok, {"premium": ev.premium, "independent": (1 + scn.rho) * fine}


def lipschitz_value(scn, contract, params, expect):
    """Envelope is (1+beta)-Lipschitz, non-decreasing, between Y and x, and matches the oracle."""
    contract = _need(contract, "lipschitz_value")
    lip = 1.0 + scn.beta
    orc = value_function_oracle(contract, scn.beta, scn.grid_n)
    env = envelope_exact(contract, scn.beta)
    v = env(orc.x)
    step = orc.x[1] - orc.x[0]
    gap = float(np.max(np.abs(v - orc.values)))
    slope, has_jump = max_slope(env)
    ok = (
        gap <= lip * step
        and slope <= lip + 1e-9
        and not has_jump
        and bool(np.all(np.diff(v) >= -1e-12))
        and bool(np.all(v >= contract(orc.x) - 1e-12))
        and bool(np.all(v <= orc.x + 1e-12))
    )
    return ok, {"oracle_gap": gap, "max_slope": slope}


def slope_characterization(scn, contract, params, expect):
    """Manipulation-proof on the grid exactly when slope <= 1+beta and no jump."""
    contract = _need(contract, "slope_characterization")
    slope, has_jump = max_slope(contract)
    structural = slope <= 1.0 + scn.beta + 1e-9 and not has_jump
    rep = is_manipulation_proof(contract, scn.beta, scn.grid_n, params.get("tol"))
    ok = rep.proof == structural
    if "proof" in expect:
        ok = ok and rep.proof == bool(expect["proof"])
    return ok, {"proof": rep.proof, "max_slope": slope, "has_jump": has_jump}


def envelope_dominance(scn, contract, params, expect):
    """The envelope is cheaper and strictly preferred whenever the original induces inflation."""
    contract = _need(contract, "envelope_dominance")
    rep = dominance_check(scn, contract)
    manipulated = rep.original.manipulation_probability > 0.0
    if manipulated:
        ok = rep.strictly_dominated
    else:
        ok = abs(rep.original.premium - rep.envelope.premium) <= 1e-9 * max(1.0, rep.original.premium)
    if "strictly_dominated" in expect:
        ok = ok and rep.strictly_dominated == bool(expect["strictly_dominated"])
    return ok, {
        "manipulation_probability": rep.original.manipulation_probability,
        "premium_original": rep.original.premium,
        "premium_envelope": rep.envelope.premium,
        "eu_original": rep.original.expected_utility,
        "eu_envelope": rep.envelope.expected_utility,
        "strictly_dominated": rep.strictly_dominated,
    }


def arrow_deductible(scn, contract, params, expect):
    """With no administrative cost the best deductible is zero exactly when there is no loading."""
    res = solve_deductible(scn)
    d = res.family_params.d
    full = d <= 1e-4 * scn.M
    want = bool(expect.get("full_insurance", scn.rho == 0.0))
    ok = full if want else d >= scn.M / 256
    return ok, {"d_star": d, "expected_utility": res.expected_utility}


def fixed_cost_deductible(scn, contract, params, expect):
    """The best continuous contract with slope <= 1 is the best straight deductible."""
    n_knots = int(params.get("n_knots", 3))
    ded = solve_deductible(scn)
    pwl = solve_problem_s_pwl(scn, n_knots)
    x = np.linspace(0.0, scn.M, scn.grid_n)
    sup = float(np.max(np.abs(pwl.contract(x) - ded.contract(x))))
    terminal = pwl.contract.segments[-1].slope
    ok = (
        abs(pwl.expected_utility - ded.expected_utility) <= 1e-6
        and sup <= 5e-3 * scn.M
        and abs(terminal - 1.0) <= 1e-6
    )
    return ok, {
        "eu_pwl": pwl.expected_utility,
        "eu_deductible": ded.expected_utility,
        "sup_norm": sup,
        "terminal_slope": terminal,
        "d_star": ded.family_params.d,
    }


def retention_jump(scn, contract, params, expect):
    """Without the incentive constraint the optimal retention contract jumps iff claims are costly."""
    step = scn.M / 128
    res = solve_constant_retention(scn)
    t, j = res.family_params.t, res.family_params.j
    c0 = getattr(scn.cost, "c0", 0.0)
    want_jump = bool(expect.get("jump", c0 > 0.0))
    if want_jump:
        ded = solve_deductible(scn)
        ok = t - j >= step and res.expected_utility > ded.expected_utility + 1e-8
        extra = {"eu_deductible": ded.expected_utility}
    else:
        ok = abs(t - j) <= 2 * step
        extra = {}
    return ok, {"t_star": t, "j_star": j, "expected_utility": res.expected_utility, **extra}


def disappearing_reverts(scn, contract, params, expect):
    """The envelope of a completely disappearing deductible is full insurance when beta = 0."""
    d = float(params.get("d", scn.M / 2))
    dd = construct(DisappearingDeductible(d), scn.M)
    env = envelope_exact(dd, scn.beta)
    x = np.linspace(0.0, scn.M, scn.grid_n)
    step = x[1] - x[0]
    full = construct(FullInsurance(), scn.M)
    gap = float(np.max(np.abs(env(x) - full(x))))
    terminal = env.segments[-1].slope
    ok = gap <= step and abs(terminal - 1.0) <= 1e-6
    return ok, {"sup_gap": gap, "terminal_slope": terminal}


def jump_improvement(scn, contract, params, expect):
    """A small jump on top of the best deductible helps iff there is a fixed claim cost."""
    d_star = params.get("d_star")
    if d_star is None:
        d_star = solve_deductible(scn).family_params.d
    eps = float(params.get("eps_fraction", 0.01)) * scn.M
    rep = epsilon_improvement(scn, float(d_star), eps)
    c0 = getattr(scn.cost, "c0", 0.0)
    want = bool(expect.get("improved", c0 > 0.0))
    return rep.improved == want, {
        "d_star": d_star,
        "eps": eps,
        "eu_base": rep.eu_base,
        "eu_improved": rep.eu_improved,
        "improved": rep.improved,
    }


CHECKS = {
    f.__name__: f
    for f in (
        binding_participation,
        lipschitz_value,
        slope_characterization,
        envelope_dominance,
        arrow_deductible,
        fixed_cost_deductible,
        retention_jump,
        disappearing_reverts,
        jump_improvement,
    )
}

# battery run when verify is pointed at a single scenario file
SCENARIO_BATTERY = ("binding_participation", "lipschitz_value", "slope_characterization", "envelope_dominance")

__all__ = ["CHECKS", "SCENARIO_BATTERY"] + list(CHECKS)
