"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 malformed input
(JSON, schema, unknown family), 3 a value outside an operation's domain.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from . import checks as checks_mod
from .equilibrium import (
    dominance_check,
    evaluate_contract,
    solve_constant_retention,
    solve_deductible,
    solve_problem_s_pwl,
    write_trace_csv,
)
from .exceptions import ArsonProofError
from .io import (
    SUITE_SCHEMA,
    SchemaError,
    atomic_write,
    contract_from_json,
    load_scenario_file,
    read_json,
    round_sig,
    scenario_from_dict,
    validate,
)
from .manipulation import envelope_table, is_manipulation_proof, write_envelope_csv

DIGITS = 12
FAMILIES = ("deductible", "retention", "pwl")


def _dump(obj):
    return json.dumps(round_sig(obj, DIGITS), indent=2) + "\n"


def _fmt(v):
    return f"{v:.{DIGITS}g}"


def _emit(args, text):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _load(args, need_contract=True):
    scn, spec, contract = load_scenario_file(args.scenario, args.grid_n, args.quad_n)
    if need_contract and contract is None:
        raise SchemaError(f"{args.scenario}: this command needs a 'contract' entry")
    return scn, spec, contract


def cmd_envelope(args):
    scn, _, contract = _load(args)
    table = envelope_table(contract, scn.beta, scn.grid_n)
    _emit(args, write_envelope_csv(table, digits=DIGITS))
    return 0


def cmd_price(args):
    scn, spec, contract = _load(args)
    honest = evaluate_contract(scn, contract, with_manipulation=False)
    manip = evaluate_contract(scn, contract, with_manipulation=True)
    proof = is_manipulation_proof(contract, scn.beta, scn.grid_n, args.tol)
    report = {
        "contract": contract.to_dict(),
        "premium_without_manipulation": honest.premium,
        "premium_with_manipulation": manip.premium,
        "expected_utility_with_manipulation": manip.expected_utility,
        "manipulation_probability": manip.manipulation_probability,
        "manipulation_proof": proof.proof,
    }
    if args.out:
        atomic_write(args.out, _dump(report))
    print(f"premium (honest)      {_fmt(honest.premium)}")
    print(f"premium (manipulated) {_fmt(manip.premium)}")
    print(f"P[manipulation]       {_fmt(manip.manipulation_probability)}")
    return 0


def cmd_solve(args):
    if args.family not in FAMILIES:
        print(f"error: unknown family {args.family!r}; choose from {', '.join(FAMILIES)}", file=sys.stderr)
        return 2
    scn, _, _ = _load(args, need_contract=False)
    if args.family == "deductible":
        res = solve_deductible(scn)
    elif args.family == "retention":
        res = solve_constant_retention(scn)
    else:
        res = solve_problem_s_pwl(scn, args.knots)
    text = _dump(res.to_dict())
    if args.out:
        atomic_write(args.out, text)
    if args.trace:
        atomic_write(args.trace, write_trace_csv(res.trace, digits=DIGITS))
    params = res.family_params.to_dict()["params"] if res.family_params else {"segments": len(res.contract.segments)}
    shown = " ".join(f"{k}={_fmt(v)}" for k, v in params.items())
    print(f"{'family':<12}{'params':<40}{'premium':>20}{'EU':>22}")
    print(f"{args.family:<12}{shown:<40}{_fmt(res.premium):>20}{_fmt(res.expected_utility):>22}")
    if not args.out:
        sys.stdout.write(text)
    return 0


def _suite_from_scenario_file(path, args):
    doc = read_json(path)
    if "checks" in doc:
        validate(doc, SUITE_SCHEMA)
        return doc["checks"]
    _, _, contract = load_scenario_file(path, args.grid_n, args.quad_n)
    if contract is None:
        raise SchemaError(f"{path}: verifying a scenario file needs a 'contract' entry")
    return [
        {"claim": name, "scenario": doc["scenario"], "contract": doc["contract"]}
        for name in checks_mod.SCENARIO_BATTERY
    ]


def run_suite(entries, grid_n=None, quad_n=None, tol=None):
    """Run suite entries in order; returns the JSON-ready report."""
    results = []
    for i, entry in enumerate(entries):
        claim = entry["claim"]
        fn = checks_mod.CHECKS.get(claim)
        if fn is None:
            raise SchemaError(f"checks/{i}: unknown claim {claim!r}")
        scn = scenario_from_dict(entry["scenario"], grid_n, quad_n)
        contract = None
        if entry.get("contract"):
            _, contract = contract_from_json(entry["contract"], scn.M)
        params = dict(entry.get("params", {}))
        if tol is not None:
            params.setdefault("tol", tol)
        ok, details = fn(scn, contract, params, entry.get("expect", {}))
        results.append({"index": i, "claim": claim, "status": "PASS" if ok else "FAIL", "details": details})
    passed = sum(r["status"] == "PASS" for r in results)
    return {
        "schema_version": 1,
        "checks": results,
        "summary": {"total": len(results), "passed": passed, "failed": len(results) - passed},
    }


def shipped_suite_path():
    return resources.files("arsonproof") / "data" / "claims.json"


def cmd_verify(args):
    path = args.scenario or shipped_suite_path()
    entries = _suite_from_scenario_file(path, args)
    report = run_suite(entries, args.grid_n, args.quad_n, args.tol)
    for r in report["checks"]:
        print(f"{r['status']} [{r['index']}] {r['claim']}")
    s = report["summary"]
    print(f"{s['passed']}/{s['total']} checks passed")
    if args.out:
        atomic_write(args.out, _dump(report))
    return 0 if s["failed"] == 0 else 1


def cmd_compare(args):
    scn, _, contract = _load(args)
    rep = dominance_check(scn, contract)
    rows = [("original", rep.original), ("envelope", rep.envelope)]
    print(f"{'contract':<10}{'premium':>20}{'EU':>22}{'P[manip]':>20}{'max slope':>20}")
    for name, r in rows:
        print(
            f"{name:<10}{_fmt(r.premium):>20}{_fmt(r.expected_utility):>22}"
            f"{_fmt(r.manipulation_probability):>20}{_fmt(r.max_slope_used):>20}"
        )
    print(f"strictly dominated: {rep.strictly_dominated}")
    if args.out:
        atomic_write(
            args.out,
            _dump(
                {
                    "original": rep.original.to_dict(),
                    "envelope": rep.envelope.to_dict(),
                    "strictly_dominated": rep.strictly_dominated,
                }
            ),
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="arsonproof", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario (or suite) JSON file")
    common.add_argument("--out", metavar="PATH", help="output file (written atomically)")
    common.add_argument("--grid-n", type=int, default=None, help="manipulation grid size (default 2001)")
    common.add_argument("--quad-n", type=int, default=None, help="Gauss-Legendre nodes per panel (default 32)")
    common.add_argument("--tol", type=float, default=None, help="manipulation-proofness tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("envelope", parents=[common], help="write x, Y, V, z_star, payoff as CSV")
    p.set_defaults(func=cmd_envelope)
    p = sub.add_parser("price", parents=[common], help="premiums with and without manipulation")
    p.set_defaults(func=cmd_price)
    p = sub.add_parser("solve", parents=[common], help="optimise over a contract family")
    p.add_argument("--family", default="deductible", help="deductible, retention or pwl")
    p.add_argument("--knots", type=int, default=3, help="free knots for the pwl family")
    p.add_argument("--trace", metavar="PATH", help="solver trace CSV")
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("verify", parents=[common], help="run a claims suite (default: the shipped one)")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("compare", parents=[common], help="contract versus its manipulation-proof envelope")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command != "verify" and not args.scenario:
        print("error: --scenario is required", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArsonProofError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
