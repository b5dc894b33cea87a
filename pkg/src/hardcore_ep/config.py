"""Run-config schema, validation and resolution."""

from __future__ import annotations

import copy
import json
import math
import re
from importlib import resources
from pathlib import Path
from typing import Any, Union

import jsonschema

from .errors import ConfigError, DomainError
from .lattice import LatticeSpec

EXPERIMENTS = ("spectrum", "verify", "overlap", "odlro", "scatter", "generate", "sweep")

_Q = {"oneOf": [{"type": "number"}, {"type": "string"}]}
_TRIPLE_INT = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 3}
_N_LIST = {"oneOf": [
    {"type": "integer", "minimum": 0},
    {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
]}

_LATTICE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dims"],
    "properties": {
        "dims": _TRIPLE_INT,
        "bc": {"type": "array", "items": {"enum": ["open", "periodic"]}, "minItems": 1, "maxItems": 3},
        "J": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3},
        "q": {"type": "array", "items": _Q, "minItems": 1, "maxItems": 3},
        "hop_scale": {"type": "number", "exclusiveMinimum": 0},
    },
}

_TOLERANCES = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        k: {"type": "number", "exclusiveMinimum": 0}
        for k in ("imag", "cluster", "rank", "gap_ratio", "jordan_slack")
    },
}

_TIME = {
    "type": "object",
    "additionalProperties": False,
    "required": ["t_max"],
    "properties": {
        "t_max": {"type": "number"},
        "dt": {"type": "number"},
        "sample_interval": {"type": "number"},
        "method": {"enum": ["auto", "dense", "sparse"]},
    },
}

_CASE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lattice", "n"],
    "properties": {"lattice": _LATTICE, "n": _N_LIST, "label": {"type": "string"}},
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hardcore-ep run config",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "lattice": _LATTICE,
        "n": _N_LIST,
        "q_grid": {"type": "array", "items": {"type": "array", "items": _Q, "minItems": 1, "maxItems": 3},
                   "minItems": 1},
        "cases": {"type": "array", "items": _CASE, "minItems": 1},
        "tolerances": _TOLERANCES,
        "golden": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "scan_critical": {"type": "boolean"},
        "wavepacket": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha", "N0", "q"],
            "properties": {
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "N0": {"type": "number"},
                "q": {"oneOf": [_Q, {"type": "array", "items": _Q, "minItems": 1}]},
            },
        },
        "time": _TIME,
        "fringe_window": {"type": "integer", "minimum": 2},
        "free_boson_check": {"type": "boolean"},
        "runs": {"type": "array", "minItems": 1},
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
        },
        "target_sign": {"enum": [-1, 1]},
        "criteria": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "allOf": [
        {"if": {"properties": {"experiment": {"const": "sweep"}}},
         "then": {"required": ["runs"]}},
        {"if": {"properties": {"experiment": {"enum": ["spectrum", "scatter"]}}},
         "then": {"required": ["lattice", "n"]}},
        {"if": {"properties": {"experiment": {"const": "scatter"}}},
         "then": {"required": ["wavepacket", "time"]}},
        {"if": {"properties": {"experiment": {"const": "generate"}}},
         "then": {"required": ["lattice", "runs", "time"]}},
        {"if": {"properties": {"experiment": {"enum": ["verify", "overlap", "odlro"]}}},
         "then": {"anyOf": [{"required": ["cases"]}, {"required": ["lattice", "n"]}]}},
    ],
}

_PI_EXPR = re.compile(
    r"""^\s*(?P<sign>[+-]?)\s*
        (?P<num>\d+(?:\.\d*)?)?\s*\*?\s*
        pi\s*
        (?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$""",
    re.VERBOSE | re.IGNORECASE,
)


def parse_angle(value: Union[int, float, str]) -> float:
    """Accept a number or an expression like ``"pi/10"``, ``"-2*pi/3"``, ``"3pi/5"``."""
    if isinstance(value, bool):
        raise ConfigError(f"momentum must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    else:
        m = _PI_EXPR.match(value)
        if m:
            num = float(m["num"]) if m["num"] else 1.0
            den = float(m["den"]) if m["den"] else 1.0
            if den == 0:
                raise ConfigError(f"division by zero in momentum {value!r}")
            out = (-1 if m["sign"] == "-" else 1) * num * math.pi / den
        else:
            try:
                out = float(value)
            except ValueError as exc:
                raise ConfigError(f"cannot parse momentum {value!r}") from exc
    if not math.isfinite(out):
        raise ConfigError(f"momentum {value!r} is not finite")
    return out


def angle_label(value: Union[int, float, str]) -> str:
    return value.replace(" ", "") if isinstance(value, str) else repr(float(value))


def n_list(value) -> list[int]:
    return [value] if isinstance(value, int) else list(value)


#: Hopping amplitude multiplier when a lattice block gives none: spectral runs
#: use the ``J/2`` hopping convention, dynamics runs use unit hopping.
SPECTRAL_HOP_SCALE = 0.5
DYNAMICS_HOP_SCALE = 1.0


def lattice_from_block(block: dict, q_override=None, default_hop_scale: float = SPECTRAL_HOP_SCALE) -> LatticeSpec:
    """Build a :class:`LatticeSpec`; domain errors surface as config errors."""
    q = q_override if q_override is not None else block.get("q", [0.0])
    try:
        return LatticeSpec(
            dims=tuple(block["dims"]),
            bc=tuple(block.get("bc", ["open"] * len(block["dims"]))),
            J=tuple(float(x) for x in block.get("J", [1.0])),
            q=tuple(parse_angle(x) for x in q),
            hop_scale=float(block.get("hop_scale", default_hop_scale)),
        )
    except DomainError as exc:
        raise ConfigError(f"invalid lattice: {exc}") from exc


def validate(config: dict) -> dict:
    """Schema-check ``config`` (and every sweep sub-config); returns a deep copy."""
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    config = copy.deepcopy(config)
    if config["experiment"] == "sweep":
        config["runs"] = [validate(sub) for sub in config["runs"]]
        if any(sub["experiment"] == "sweep" for sub in config["runs"]):
            raise ConfigError("sweeps cannot be nested")
    time = config.get("time")
    if time is not None:
        if not time["t_max"] > 0:
            raise ConfigError("time.t_max must be positive")
        for key in ("dt", "sample_interval"):
            if key in time and not time[key] > 0:
                raise ConfigError(f"time.{key} must be positive")
    _check_angles(config)
    return config


def _check_angles(config: dict):
    blocks = []
    if "lattice" in config:
        blocks.extend(config["lattice"].get("q", []))
    for q in config.get("q_grid", []):
        blocks.extend(q)
    for case in config.get("cases", []):
        blocks.extend(case["lattice"].get("q", []))
    wp = config.get("wavepacket")
    if wp:
        blocks.extend(wp["q"] if isinstance(wp["q"], list) else [wp["q"]])
    for q in blocks:
        parse_angle(q)


def bundled_config_names() -> list[str]:
    root = resources.files("hardcore_ep") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(path: Union[str, Path]) -> Path:
    """Filesystem path, falling back to a bundled config of the same name."""
    p = Path(path)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in bundled_config_names():
        return Path(str(resources.files("hardcore_ep") / "configs" / f"{stem}.json"))
    raise ConfigError(f"config file {str(path)!r} not found")


def load(path: Union[str, Path]) -> dict:
    p = resolve_path(path)
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be an object")
    config = validate(raw)
    config.setdefault("name", p.stem)
    return config


def bundled_golden_dir() -> Path:
    return Path(str(resources.files("hardcore_ep") / "golden"))
