"""Experiment configuration: JSON schema, parsing, serialization and digest.

A config names a source (an inline pmf or the ``bsc-pair`` generator) and,
optionally, auxiliary cardinalities, a fixed auxiliary pair, optimizer and
codec settings, link rates and a sweep range.  Probabilities may be given as
numbers or decimal strings.

Example::

    {
      "source": {"generator": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
      "rates": {"r1": 0.3, "r2": 0.25},
      "codec": {"n": 12, "margin": 0.15, "trials": 2000}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from decimal import Decimal, InvalidOperation

import jsonschema
import numpy as np

from seclink.infotheory import SUM_TOL
from seclink.rate_region import AuxiliaryPair, JointSource, OptimizerConfig, RateConstraints
from seclink.codec.rates import CodecParams

_PROB = {"oneOf": [{"type": "number"}, {"type": "string"}]}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _PROB}}
_OPEN_UNIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["source"],
    "properties": {
        "source": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["sizes", "pmf"],
                    "properties": {
                        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                  "minItems": 3, "maxItems": 3},
                        "pmf": {"type": "array", "minItems": 1, "items": _PROB},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["generator", "p_y", "p_z"],
                    "properties": {
                        "generator": {"const": "bsc-pair"},
                        "p_y": _OPEN_UNIT,
                        "p_z": _OPEN_UNIT,
                        "p_x": _OPEN_UNIT,
                    },
                },
            ]
        },
        "cardinalities": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t": {"type": "integer", "minimum": 1}, "u": {"type": "integer", "minimum": 1}},
        },
        "aux": {
            "type": "object",
            "additionalProperties": False,
            "required": ["u_given_x", "t_given_u"],
            "properties": {"u_given_x": _MATRIX, "t_given_u": _MATRIX},
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "restarts": {"type": "integer", "minimum": 1},
                "max_iterations": {"type": "integer", "minimum": 1},
                "convergence_tol": {"type": "number", "exclusiveMinimum": 0},
                "grid_resolution": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "codec": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "delta": _OPEN_UNIT,
                "margin": {"type": "number", "exclusiveMinimum": 0},
                "bin_margin": {"type": "number", "minimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "rates": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"r1": {"type": "number", "minimum": 0}, "r2": {"type": "number", "minimum": 0}},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["vary", "from", "to", "steps"],
            "properties": {
                "vary": {"enum": ["r1", "r2"]},
                "from": {"type": "number", "minimum": 0},
                "to": {"type": "number", "minimum": 0},
                "steps": {"type": "integer", "minimum": 2},
                "fixed": {"type": "number", "minimum": 0},
            },
        },
    },
}


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``violations`` lists ``path: message`` lines."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SourceSpec:
    generator: str | None = None
    sizes: tuple[int, ...] | None = None
    pmf: tuple[float, ...] | None = None
    p_y: float | None = None
    p_z: float | None = None
    p_x: float = 0.5

    def build(self) -> JointSource:
        if self.generator == "bsc-pair":
            return JointSource.bsc_pair(self.p_y, self.p_z, self.p_x)
        return JointSource.from_array(np.array(self.pmf, dtype=float).reshape(self.sizes))

    def to_json(self) -> dict:
        if self.generator is not None:
            return {"generator": self.generator, "p_y": self.p_y, "p_z": self.p_z, "p_x": self.p_x}
        return {"sizes": list(self.sizes), "pmf": list(self.pmf)}


@dataclass(frozen=True)
class SweepSpec:
    vary: str
    start: float
    stop: float
    steps: int
    fixed: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceSpec
    card_t: int | None = None
    card_u: int | None = None
    u_given_x: tuple[tuple[float, ...], ...] | None = None
    t_given_u: tuple[tuple[float, ...], ...] | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    codec: CodecParams = field(default_factory=lambda: CodecParams(n=8))
    r1: float | None = None
    r2: float | None = None
    sweep: SweepSpec | None = None

    def joint_source(self) -> JointSource:
        return self.source.build()

    def aux(self) -> AuxiliaryPair | None:
        if self.u_given_x is None:
            return None
        return AuxiliaryPair.from_matrices(np.array(self.u_given_x), np.array(self.t_given_u))

    def rates(self, r1: float | None = None, r2: float | None = None) -> RateConstraints:
        r1 = self.r1 if r1 is None else r1
        r2 = self.r2 if r2 is None else r2
        if r1 is None or r2 is None:
            raise ConfigError(["rates: r1 and r2 are required (config or --r1/--r2)"])
        return RateConstraints(r1, r2)

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return replace(self, optimizer=replace(self.optimizer, seed=seed), codec=replace(self.codec, seed=seed))


def _number(value, path: str, errors: list[str]) -> float:
    if isinstance(value, str):
        try:
            return float(Decimal(value))
        except InvalidOperation:
            errors.append(f"{path}: {value!r} is not a decimal number")
            return float("nan")
    return float(value)


def _matrix(rows, path: str, errors: list[str]) -> tuple[tuple[float, ...], ...]:
    out = tuple(tuple(_number(v, f"{path}/{i}/{j}", errors) for j, v in enumerate(r)) for i, r in enumerate(rows))
    if len({len(r) for r in out}) > 1:
        errors.append(f"{path}: rows have different lengths")
    return out


def _path(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text.

    Raises
    ------
    ConfigError
        On malformed JSON, schema violations (with JSON-pointer paths) or a
        pmf that does not sum to 1 within 1e-9.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"/: malformed JSON ({exc.msg} at line {exc.lineno} column {exc.colno})"]) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if problems:
        raise ConfigError([f"{_path(e)}: {e.message}" for e in problems])
    return _from_json(raw)


def _from_json(raw: dict) -> ExperimentConfig:
    errors: list[str] = []
    src = raw["source"]
    if "generator" in src:
        source = SourceSpec(generator=src["generator"], p_y=float(src["p_y"]), p_z=float(src["p_z"]),
                            p_x=float(src.get("p_x", 0.5)))
    else:
        sizes = tuple(int(s) for s in src["sizes"])
        pmf = tuple(_number(v, f"/source/pmf/{i}", errors) for i, v in enumerate(src["pmf"]))
        if len(pmf) != int(np.prod(sizes)):
            errors.append(f"/source/pmf: has {len(pmf)} entries, sizes need {int(np.prod(sizes))}")
        elif not errors:
            if any(v < 0 for v in pmf):
                errors.append("/source/pmf: probabilities must be nonnegative")
            elif abs(sum(pmf) - 1.0) > SUM_TOL:
                errors.append(f"/source/pmf: sums to {sum(pmf):.12g}, not 1 within {SUM_TOL:g}")
        source = SourceSpec(sizes=sizes, pmf=pmf)

    card = raw.get("cardinalities", {})
    u_x = t_u = None
    if "aux" in raw:
        u_x = _matrix(raw["aux"]["u_given_x"], "/aux/u_given_x", errors)
        t_u = _matrix(raw["aux"]["t_given_u"], "/aux/t_given_u", errors)

    rates = raw.get("rates", {})
    sweep = None
    if "sweep" in raw:
        s = raw["sweep"]
        if s["from"] > s["to"]:
            errors.append("/sweep: from must not exceed to")
        sweep = SweepSpec(s["vary"], float(s["from"]), float(s["to"]), int(s["steps"]),
                          None if "fixed" not in s else float(s["fixed"]))
    if errors:
        raise ConfigError(errors)

    try:
        optimizer = OptimizerConfig(**raw.get("optimizer", {}))
        codec_raw = dict(raw.get("codec", {}))
        codec = CodecParams(n=codec_raw.pop("n", 8), **codec_raw)
        cfg = ExperimentConfig(
            source=source, card_t=card.get("t"), card_u=card.get("u"), u_given_x=u_x, t_given_u=t_u,
            optimizer=optimizer, codec=codec,
            r1=None if "r1" not in rates else float(rates["r1"]),
            r2=None if "r2" not in rates else float(rates["r2"]),
            sweep=sweep,
        )
        src_obj = cfg.joint_source()
        aux = cfg.aux()
        if aux is not None and aux.card_x != src_obj.card_x:
            raise ValueError(f"aux has |X| = {aux.card_x}, source has {src_obj.card_x}")
    except ValueError as exc:
        raise ConfigError([f"/: {exc}"]) from None
    return cfg


def to_json(cfg: ExperimentConfig) -> dict:
    """Plain-JSON form; :func:`parse_config` of its dump gives back ``cfg``."""
    out: dict = {"source": cfg.source.to_json()}
    card = {k: v for k, v in (("t", cfg.card_t), ("u", cfg.card_u)) if v is not None}
    if card:
        out["cardinalities"] = card
    if cfg.u_given_x is not None:
        out["aux"] = {"u_given_x": [list(r) for r in cfg.u_given_x], "t_given_u": [list(r) for r in cfg.t_given_u]}
    opt = asdict(cfg.optimizer)
    opt.pop("initial_step")
    out["optimizer"] = opt
    codec = {f.name: getattr(cfg.codec, f.name) for f in fields(cfg.codec) if f.name != "max_cells"}
    if codec["bin_margin"] is None:
        codec.pop("bin_margin")
    out["codec"] = codec
    rates = {k: v for k, v in (("r1", cfg.r1), ("r2", cfg.r2)) if v is not None}
    if rates:
        out["rates"] = rates
    if cfg.sweep is not None:
        s = cfg.sweep
        out["sweep"] = {"vary": s.vary, "from": s.start, "to": s.stop, "steps": s.steps}
        if s.fixed is not None:
            out["sweep"]["fixed"] = s.fixed
    return out


def serialize(cfg: ExperimentConfig) -> str:
    return json.dumps(to_json(cfg), sort_keys=True, indent=2) + "\n"


def digest(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form; independent of key order in the source text."""
    canon = json.dumps(to_json(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
