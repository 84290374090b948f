"""JSON run configurations: strict schema first, then construction.

A configuration names a problem, either a bundled preset or an inline
system description, plus a seed, a starting point, and optimizer
settings. Validation is two-staged: the JSON schema rejects unknown
keys and malformed documents outright, then the ordinary constructors
enforce the semantic rules (row normalization, scope membership,
family requirements), so a configuration can only ever build the same
objects the Python API would.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType

import jsonschema
import numpy as np

from .errors import ConfigError
from .objectives import FAMILY_TAGS, Objective, from_preset, make_objective
from .presets import names as preset_names
from .presets import preset
from .randsys import rng_for
from .systems import (
    ActualSystem,
    ConditionalFactor,
    FactorMirror,
    FactorSpec,
    Horizon,
    MarginalMirror,
    ParamFactor,
    RewardFactor,
    TableFactor,
    TargetSpec,
)
from .tables import Role, Variable

__all__ = [
    "RunConfig",
    "SCHEMA",
    "SCHEMA_VERSION",
    "bundled_config_names",
    "bundled_config_path",
    "load_config",
    "parse_config",
]

SCHEMA_VERSION = 1


def _target_factor_schema(kind: str, fields: dict) -> dict:
    properties = {"type": {"const": kind}}
    properties.update(fields)
    return {
        "type": "object",
        "properties": properties,
        "required": ["type"] + [k for k in fields if k != "given"],
        "additionalProperties": False,
    }


_NAMES = {"type": "array", "items": {"type": "string", "minLength": 1}}
_NUMBERS = {"$ref": "#/$defs/numbers"}
_INTEGERS = {"$ref": "#/$defs/integers"}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "preset": {"type": "string", "minLength": 1},
        "problem": {"$ref": "#/$defs/problem"},
        "init": {
            "anyOf": [
                {"enum": ["system", "random"]},
                {"type": "array", "minItems": 1, "items": {"type": "number"}},
            ]
        },
        "optimizer": {
            "type": "object",
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "initial_step": {"type": "number", "exclusiveMinimum": 0},
                "max_halvings": {"type": "integer", "minimum": 0},
                "armijo": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "exclusiveMaximum": 1,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["seed"],
    "additionalProperties": False,
    "oneOf": [{"required": ["preset"]}, {"required": ["problem"]}],
    "$defs": {
        "numbers": {
            "anyOf": [
                {"type": "number"},
                {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/numbers"}},
            ]
        },
        "integers": {
            "anyOf": [
                {"type": "integer"},
                {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/integers"}},
            ]
        },
        "problem": {
            "type": "object",
            "properties": {
                "family": {"enum": sorted(FAMILY_TAGS)},
                "system": {"$ref": "#/$defs/system"},
                "target": {"$ref": "#/$defs/target"},
                "horizon": {"$ref": "#/$defs/horizon"},
                "options": {"type": "object"},
                "realized": {
                    "type": "object",
                    "additionalProperties": {"type": "integer", "minimum": 0},
                },
                "realization": {"enum": ["intervene", "condition"]},
            },
            "required": ["family", "system"],
            "additionalProperties": False,
        },
        "system": {
            "type": "object",
            "properties": {
                "variables": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"$ref": "#/$defs/variable"},
                },
                "factors": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"$ref": "#/$defs/factor"},
                },
            },
            "required": ["variables", "factors"],
            "additionalProperties": False,
        },
        "variable": {
            "type": "object",
            "properties": {
                "name": {"type": "string", "minLength": 1},
                "cardinality": {"type": "integer", "minimum": 1},
                "role": {"enum": [role.value for role in Role]},
            },
            "required": ["name", "cardinality", "role"],
            "additionalProperties": False,
        },
        "factor": {
            "type": "object",
            "properties": {
                "child": {"type": "string", "minLength": 1},
                "parents": _NAMES,
                "table": _NUMBERS,
                "logits": _NUMBERS,
                "selector": _INTEGERS,
            },
            "required": ["child"],
            "additionalProperties": False,
            "oneOf": [
                {"required": ["table"]},
                {"required": ["logits"]},
                {"required": ["selector"]},
            ],
        },
        "target": {
            "type": "object",
            "properties": {
                "scope": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                "factors": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"$ref": "#/$defs/target_factor"},
                },
            },
            "required": ["scope", "factors"],
            "additionalProperties": False,
        },
        "target_factor": {
            "oneOf": [
                _target_factor_schema("table", {"vars": _NAMES, "table": _NUMBERS}),
                _target_factor_schema(
                    "conditional",
                    {"child": {"type": "string"}, "parents": _NAMES, "table": _NUMBERS},
                ),
                _target_factor_schema("reward", {"vars": _NAMES, "values": _NUMBERS}),
                _target_factor_schema(
                    "param",
                    {"child": {"type": "string"}, "parents": _NAMES, "logits": _NUMBERS},
                ),
                _target_factor_schema("mirror", {"child": {"type": "string"}}),
                _target_factor_schema(
                    "marginal_mirror", {"vars": _NAMES, "given": _NAMES}
                ),
            ]
        },
        "horizon": {
            "type": "object",
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "split": {"type": "integer", "minimum": 0},
                "skill_every": {"type": "integer", "minimum": 1},
            },
            "required": ["steps"],
            "additionalProperties": False,
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration, ready to hand to the optimizer."""

    name: str
    seed: int
    objective: Objective
    phi0: np.ndarray
    optimizer: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        phi0 = np.asarray(self.phi0, dtype=np.float64).copy()
        phi0.flags.writeable = False
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "optimizer", MappingProxyType(dict(self.optimizer)))


def _build_system(data: Mapping) -> ActualSystem:
    variables = [
        Variable(v["name"], int(v["cardinality"]), Role(v["role"]))
        for v in data["variables"]
    ]
    factors = []
    for f in data["factors"]:
        child = f["child"]
        parents = tuple(f.get("parents", ()))
        if "table" in f:
            factors.append(FactorSpec.fixed(child, parents, np.asarray(f["table"], dtype=np.float64)))
        elif "logits" in f:
            factors.append(FactorSpec.parameterized(child, parents, np.asarray(f["logits"], dtype=np.float64)))
        else:
            factors.append(FactorSpec.point_mass(child, parents, np.asarray(f["selector"], dtype=np.int64)))
    return ActualSystem(variables, factors)


def _build_target(data: Mapping) -> TargetSpec:
    factors = []
    for f in data["factors"]:
        kind = f["type"]
        if kind == "table":
            factors.append(TableFactor(tuple(f["vars"]), np.asarray(f["table"], dtype=np.float64)))
        elif kind == "conditional":
            factors.append(ConditionalFactor(f["child"], tuple(f["parents"]), np.asarray(f["table"], dtype=np.float64)))
        elif kind == "reward":
            factors.append(RewardFactor(tuple(f["vars"]), np.asarray(f["values"], dtype=np.float64)))
        elif kind == "param":
            factors.append(ParamFactor(f["child"], tuple(f["parents"]), np.asarray(f["logits"], dtype=np.float64)))
        elif kind == "mirror":
            factors.append(FactorMirror(f["child"]))
        else:
            factors.append(MarginalMirror(tuple(f["vars"]), tuple(f.get("given", ()))))
    return TargetSpec(tuple(data["scope"]), factors)


def _build_horizon(data: Mapping) -> Horizon:
    return Horizon(
        steps=int(data["steps"]),
        split=int(data.get("split", 0)),
        skill_every=data.get("skill_every"),
    )


def _initial_point(init, seed: int, objective: Objective) -> np.ndarray:
    declared = objective.parameters()
    if init == "system" or init is None:
        return declared
    if init == "random":
        return rng_for(seed, 100).normal(size=declared.shape)
    values = np.asarray(init, dtype=np.float64)
    if values.shape != declared.shape:
        raise ConfigError(
            f"init has {values.size} values, but the objective has "
            f"{declared.size} parameters"
        )
    return values


def parse_config(data: Mapping, fallback_name: str = "run") -> RunConfig:
    """Validate a configuration document and build its objective."""
    try:
        jsonschema.validate(data, SCHEMA, cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "top level"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None

    seed = int(data["seed"])
    if "preset" in data:
        ref = data["preset"]
        if ref not in preset_names():
            raise ConfigError(
                f"unknown preset {ref!r}; available: {', '.join(preset_names())}"
            )
        objective = from_preset(preset(ref))
        default_name = ref
    else:
        problem = data["problem"]
        system = _build_system(problem["system"])
        target = _build_target(problem["target"]) if "target" in problem else None
        horizon = _build_horizon(problem["horizon"]) if "horizon" in problem else None
        realized = dict(problem["realized"]) if "realized" in problem else None
        objective = make_objective(
            problem["family"],
            system,
            target=target,
            horizon=horizon,
            options=problem.get("options"),
            realized=realized,
            realization=problem.get("realization", "intervene"),
        )
        default_name = problem["family"]

    return RunConfig(
        name=data.get("name", default_name or fallback_name),
        seed=seed,
        objective=objective,
        phi0=_initial_point(data.get("init"), seed, objective),
        optimizer=data.get("optimizer", {}),
    )


def load_config(path: str | Path) -> RunConfig:
    """Read, validate, and build a configuration from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object at the top level")
    return parse_config(data, fallback_name=path.stem)


def bundled_config_names() -> tuple[str, ...]:
    """Names of the configuration files shipped inside the package."""
    root = resources.files("divmin") / "configs"
    return tuple(
        sorted(entry.name[:-5] for entry in root.iterdir() if entry.name.endswith(".json"))
    )


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a bundled configuration by bare name."""
    entry = resources.files("divmin") / "configs" / f"{name}.json"
    if not entry.is_file():
        raise ConfigError(
            f"no bundled configuration named {name!r}; available: "
            f"{', '.join(bundled_config_names())}"
        )
    return Path(str(entry))
