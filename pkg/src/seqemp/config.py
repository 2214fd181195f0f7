"""Experiment configuration: YAML text validated against a JSON schema, then
turned into model, class and net objects.

Field-level problems raise :class:`ConfigError` with the offending path.
Semantic checks (even ``nu`` for mixing experiments, admissible ``(alpha, Q)``,
``kappa`` range, convergent ``(lam, nu)``) run before anything is simulated.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .arrays import (IID, TVAR1, ConstantCoef, GaussSpec, LinearCoef, MDependent, SineCoef, StepCoef)
from .fclasses import FunctionClass, Member, grid_net, halfline, lipschitz, ZERO
from .growth import DomainError, kappa_range, q_threshold
from .marginals import PointMass, TwoPoint, Uniform01


class ConfigError(ValueError):
    pass


SUBCOMMANDS = ("simulate", "verify-maximal", "moment-fit", "covariance", "chaining-scaling", "aec",
               "lipschitz", "bracketing", "pipeline", "cusum")
MIXING = ("moment-fit", "chaining-scaling", "pipeline")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_posintlist = {"type": "array", "items": _posint, "minItems": 1}

_coef = {
    "oneOf": [
        _num,
        {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
            "kind": {"enum": ["constant", "linear", "sine", "step"]},
            "value": _num, "start": _num, "end": _num, "center": _num, "amplitude": _num,
            "cycles": _num, "before": _num, "after": _num, "at": _num}},
    ]
}

_marginal = {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
    "kind": {"enum": ["uniform01", "two_point", "gauss", "point"]},
    "a": _num, "b": _num, "mean": _coef, "sd": _coef, "value": _num}}

_model = {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
    "kind": {"enum": ["iid", "m_dependent", "tv_ar1"]},
    "marginal": _marginal,
    "m": {"type": "integer", "minimum": 0},
    "output": {"enum": ["uniform01", "gauss"]},
    "coef": _coef,
    "innovation_sd": _pos,
    "abar": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}}

_member = {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
    "kind": {"enum": ["halfline", "lipschitz", "zero"]}, "param": _num}}

_class = {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
    "kind": {"enum": ["halfline_indicators", "lipschitz_ball", "finite_explicit"]},
    "lo": _num, "hi": _num, "include_zero": {"type": "boolean"},
    "members": {"type": "array", "items": _member, "minItems": 1}}}

_interval = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "replicates": _posint,
        "model": _model,
        "class": _class,
        "net_size": _posint,
        "n": _posint,
        "nu": _pos,
        "alpha": _pos,
        "Q": _pos,
        "lam": _pos,
        "kappa": _num,
        "K": _pos,
        "eta": _pos,
        "exact": {"type": "boolean"},
        "process": {"type": "object", "required": ["kind"], "additionalProperties": False, "properties": {
            "kind": {"enum": ["sign_flip", "net"]}, "P": _posint, "n": _posint, "a": _num, "b": _num}},
        "m_grid": _posintlist,
        "delta_grid": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "n_grid": _posintlist,
        "eps": _pos,
        "eps_grid": {"type": "array", "items": _pos, "minItems": 1},
        "lam_grid": {"type": "array", "items": _pos, "minItems": 1},
        "nu_grid": {"type": "array", "items": _pos, "minItems": 1},
        "aec_process": {"enum": ["Z", "Zs"]},
        "refine": _posint,
        "members": {"type": "array", "items": _member, "minItems": 2},
        "indices": {"type": "array", "items": _posint, "minItems": 2},
        "split": _posint,
        "p": {"type": "number", "minimum": 1},
        "member": _member,
        "intervals": {"type": "array", "items": {"type": "array", "items": _interval, "minItems": 2,
                                                 "maxItems": 2}},
        "h_grid": {"type": "object", "additionalProperties": False, "required": ["base", "count"],
                   "properties": {"base": _num, "count": {"type": "integer", "minimum": 2},
                                  "h_max": _pos}},
        "member_pairs": {"type": "array", "items": {"type": "array", "items": _member, "minItems": 2,
                                                    "maxItems": 2}},
        "band": _pos,
    },
}

REQUIRED = {
    "simulate": ["model", "n", "replicates"],
    "verify-maximal": ["process", "nu", "alpha", "replicates"],
    "moment-fit": ["model", "class", "nu", "lam", "m_grid", "replicates"],
    "covariance": ["model", "n", "members", "indices", "split", "lam", "replicates"],
    "chaining-scaling": ["model", "class", "nu", "lam", "kappa", "m_grid", "delta_grid", "replicates"],
    "aec": ["model", "class", "delta_grid", "n_grid", "replicates"],
    "lipschitz": ["model", "n", "member", "p", "replicates"],
    "bracketing": ["class", "eps_grid", "lam", "nu"],
    "pipeline": ["model", "class", "nu", "lam", "kappa"],
    "cusum": ["model", "class", "n", "replicates"],
}


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return {} if cfg is None else cfg


def validate(cfg: dict, subcommand: str) -> dict:
    """Schema and semantic validation; returns the config unchanged."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if not isinstance(cfg, dict):
        raise ConfigError("<root>: config must be a mapping")
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    missing = [k for k in REQUIRED[subcommand] if k not in cfg]
    if missing:
        raise ConfigError("; ".join(f"{k}: required for {subcommand}" for k in missing))
    _semantic(cfg, subcommand)
    return cfg


def _semantic(cfg: dict, sub: str):
    nu = cfg.get("nu")
    lam = cfg.get("lam")
    if sub in MIXING and (nu != int(nu) or int(nu) % 2 or nu < 2):
        raise ConfigError(f"nu: {nu!r} rejected; the moment bound for mixing arrays needs an even integer nu >= 2")
    if sub == "pipeline" and nu <= 2:
        raise ConfigError(f"nu: {nu!r} rejected; the weak-convergence checklist needs nu > 2")
    if sub == "verify-maximal":
        if nu < 1:
            raise ConfigError("nu: must be >= 1")
        if cfg["alpha"] <= 1:
            raise ConfigError(f"alpha: {cfg['alpha']!r} rejected; the maximal inequality needs alpha > 1")
    if "Q" in cfg:
        alpha = cfg.get("alpha", nu / 2 if nu else None)
        if alpha is None or alpha <= 1:
            raise ConfigError("Q: needs alpha > 1 to define the admissible range")
        thr = q_threshold(alpha)
        if not 1 <= cfg["Q"] < thr:
            raise ConfigError(f"Q: {cfg['Q']!r} outside the admissible range [1, {thr!r}) for alpha = {alpha!r}")
    if "kappa" in cfg and sub in ("chaining-scaling", "pipeline"):
        try:
            lo, hi = kappa_range(nu, lam)
        except DomainError as e:
            raise ConfigError(f"kappa: {e}") from None
        if not lo < cfg["kappa"] < hi:
            raise ConfigError(f"kappa: {cfg['kappa']!r} outside (0, min(1/2 - 1/nu, lam/4)) = (0, {hi!r})")
    if sub == "chaining-scaling":
        a = _class_exponent(cfg["class"])
        if a is not None and lam / (2 + lam) + a / nu >= 1 - 1e-12:
            raise ConfigError(f"lam, nu: bracketing integral certified divergent "
                              f"(lam/(2+lam) + {a:g}/nu = {lam / (2 + lam) + a / nu:.6g} >= 1)")
    if sub == "covariance":
        if len(cfg["indices"]) != len(cfg["members"]):
            raise ConfigError("indices: need one index per member")
        if not 1 <= cfg["split"] < len(cfg["members"]):
            raise ConfigError("split: must leave both blocks nonempty")
        if max(cfg["indices"]) > cfg["n"]:
            raise ConfigError("indices: must not exceed n")
    if sub == "verify-maximal" and cfg["process"]["kind"] == "net":
        for k in ("model", "class", "n"):
            if k not in cfg:
                raise ConfigError(f"{k}: required for a net process")
    if sub == "verify-maximal" and cfg["process"]["kind"] == "sign_flip":
        for k in ("P", "n"):
            if k not in cfg["process"]:
                raise ConfigError(f"process/{k}: required for sign_flip")
    cls = cfg.get("class")
    if cls and cls["kind"] == "finite_explicit" and "members" not in cls:
        raise ConfigError("class/members: required for finite_explicit")
    model = cfg.get("model")
    if model and model["kind"] == "m_dependent" and "m" not in model:
        raise ConfigError("model/m: required for m_dependent")
    if model and model["kind"] == "tv_ar1" and "coef" not in model:
        raise ConfigError("model/coef: required for tv_ar1")


def _class_exponent(cls: dict) -> float | None:
    if cls["kind"] == "halfline_indicators":
        return 2.0
    if cls["kind"] == "lipschitz_ball":
        return 1.0
    return 0.0


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# --------------------------------------------------------------------------
# builders


def build_coef(spec):
    if isinstance(spec, (int, float)):
        return ConstantCoef(float(spec))
    kind = spec["kind"]
    try:
        if kind == "constant":
            return ConstantCoef(float(spec["value"]))
        if kind == "linear":
            return LinearCoef(float(spec["start"]), float(spec["end"]))
        if kind == "sine":
            return SineCoef(float(spec["center"]), float(spec["amplitude"]), float(spec.get("cycles", 1.0)))
        return StepCoef(float(spec["before"]), float(spec["after"]), float(spec.get("at", 0.5)))
    except KeyError as exc:
        raise ConfigError(f"coefficient {kind}: missing field {exc.args[0]}") from exc


def build_model(spec: dict):
    kind = spec["kind"]
    if kind == "iid":
        m = spec.get("marginal", {"kind": "uniform01"})
        mk = m["kind"]
        if mk == "uniform01":
            return IID(Uniform01())
        if mk == "two_point":
            return IID(TwoPoint(float(m.get("a", -1.0)), float(m.get("b", 1.0))))
        if mk == "point":
            return IID(PointMass(float(m.get("value", 0.0))))
        return IID(GaussSpec(build_coef(m.get("mean", 0.0)), build_coef(m.get("sd", 1.0))))
    if kind == "m_dependent":
        return MDependent(int(spec["m"]), spec.get("output", "uniform01"))
    abar = spec.get("abar")
    return TVAR1(build_coef(spec["coef"]), float(spec.get("innovation_sd", 1.0)),
                 None if abar is None else float(abar))


def build_member(spec: dict) -> Member:
    if spec["kind"] == "zero":
        return ZERO
    if "param" not in spec:
        raise ConfigError(f"member {spec['kind']}: missing field param")
    return halfline(spec["param"]) if spec["kind"] == "halfline" else lipschitz(spec["param"])


def build_class(spec: dict) -> FunctionClass:
    kind = spec["kind"]
    inc = bool(spec.get("include_zero", False))
    if kind == "finite_explicit":
        return FunctionClass(kind, finite_members=tuple(build_member(m) for m in spec["members"]),
                             include_zero=inc)
    try:
        return FunctionClass(kind, float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)), include_zero=inc)
    except ValueError as exc:
        raise ConfigError(f"class: {exc}") from exc


def build_net(cfg: dict):
    return grid_net(build_class(cfg["class"]), int(cfg.get("net_size", 16)))


def h_pairs(spec: dict, n: int) -> list:
    """Pairs ``((0, base], (0, base + h)]`` with ``h`` geometric from ``1/n`` to ``h_max``."""
    base = float(spec["base"])
    h_max = float(spec.get("h_max", min(0.5, 1.0 - base)))
    if not 0 <= base < 1 or base + h_max > 1 + 1e-12 or h_max < 1.0 / n:
        raise ConfigError("h_grid: need 0 <= base, base + h_max <= 1 and h_max >= 1/n")
    hs = np.geomspace(1.0 / n, h_max, int(spec["count"]))
    return [((0.0, base), (0.0, min(1.0, base + float(h)))) for h in hs]
