"""JSON scenario / suite files and their schemas."""
from __future__ import annotations

import json
import os
import tempfile

import jsonschema

from .contracts import construct, contract_from_dict, family_from_dict
from .equilibrium import Scenario
from .pricing import LossModel, cost_from_dict
from .utility import utility_from_dict

SCHEMA_VERSION = 1

_number = {"type": "number"}
_tagged = {
    "type": "object",
    "properties": {
        "type": {"type": "string"},
        "params": {"type": "object", "additionalProperties": _number},
    },
    "required": ["type"],
    "additionalProperties": False,
}
_segment = {
    "type": "object",
    "properties": {k: _number for k in ("x_start", "x_end", "intercept", "slope")},
    "required": ["x_start", "x_end", "intercept", "slope"],
    "additionalProperties": False,
}
_contract = {
    "oneOf": [
        _tagged,
        {
            "type": "object",
            "properties": {"domain_max": _number, "segments": {"type": "array", "items": _segment, "minItems": 1}},
            "required": ["domain_max", "segments"],
            "additionalProperties": False,
        },
    ]
}
_scenario = {
    "type": "object",
    "properties": {
        "W0": _number,
        "rho": _number,
        "beta": _number,
        "utility": _tagged,
        "loss": {
            "type": "object",
            "properties": {"M": _number, "p0": _number, "density": _tagged},
            "required": ["M", "p0"],
            "additionalProperties": False,
        },
        "cost": _tagged,
        "grid_n": {"type": "integer", "minimum": 2},
        "quad_n": {"type": "integer", "minimum": 16},
    },
    "required": ["W0", "rho", "beta", "utility", "loss", "cost"],
    "additionalProperties": False,
}

SCENARIO_FILE_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "scenario": _scenario,
        "contract": _contract,
    },
    "required": ["schema_version", "scenario"],
    "additionalProperties": False,
}

SUITE_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "claim": {"type": "string"},
                    "scenario": _scenario,
                    "contract": _contract,
                    "params": {"type": "object", "additionalProperties": _number},
                    "expect": {"type": "object", "additionalProperties": {"type": ["number", "boolean"]}},
                },
                "required": ["claim", "scenario"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["schema_version", "checks"],
    "additionalProperties": False,
}


class SchemaError(Exception):
    """Input file is not valid JSON or does not match its schema."""


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{loc}: {exc.message}") from exc


def scenario_from_dict(obj, grid_n=None, quad_n=None):
    kwargs = dict(
        W0=float(obj["W0"]),
        rho=float(obj["rho"]),
        beta=float(obj["beta"]),
        utility=utility_from_dict(obj["utility"]),
        loss=LossModel.from_dict(obj["loss"]),
        cost=cost_from_dict(obj["cost"]),
    )
    if grid_n or obj.get("grid_n"):
        kwargs["grid_n"] = int(grid_n or obj["grid_n"])
    if quad_n or obj.get("quad_n"):
        kwargs["quad_n"] = int(quad_n or obj["quad_n"])
    return Scenario(**kwargs)


def contract_from_json(obj, domain_max):
    """A tagged family spec or an explicit segment list."""
    if "segments" in obj:
        return None, contract_from_dict(obj)
    spec = family_from_dict(obj)
    return spec, construct(spec, domain_max)


def load_scenario_file(path, grid_n=None, quad_n=None):
    """Return ``(scenario, family_spec_or_None, contract_or_None)``."""
    doc = read_json(path)
    validate(doc, SCENARIO_FILE_SCHEMA)
    scn = scenario_from_dict(doc["scenario"], grid_n, quad_n)
    spec = contract = None
    if "contract" in doc:
        spec, contract = contract_from_json(doc["contract"], scn.M)
    return scn, spec, contract


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def round_sig(obj, digits=12):
    """Recursively round floats to ``digits`` significant digits for stable output."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    return obj
