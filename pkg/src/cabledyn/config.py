"""YAML run configuration: strict schema, casting and object building.

A config file is a plain mapping.  Unknown keys anywhere are rejected
with the offending path, and every number passes through an explicit
cast, so scientific notation written either way round-trips.  The
normalized dict (RunConfig.echo) is what the manifest records; parsing
it again reproduces the same objects.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from .boundary import BoundaryPrescription, prescribe
from .cable import CableProperties, CurrentField
from .engine import IntegratorConfig, Scenario
from .errors import ConfigInvalid
from .identify import ForwardModel, GaConfig


def _fail(path, msg):
    raise ConfigInvalid(f"{'.'.join(path) or '<root>'}: {msg}")


def _float(value, path):
    try:
        return float(value)
    except (TypeError, ValueError):
        _fail(path, f"expected a number, got {value!r}")


def _int(value, path):
    if isinstance(value, bool):
        _fail(path, f"expected an integer, got {value!r}")
    try:
        iv = int(value)
    except (TypeError, ValueError):
        _fail(path, f"expected an integer, got {value!r}")
    if float(iv) != float(value):
        _fail(path, f"expected an integer, got {value!r}")
    return iv


def _bool(value, path):
    if not isinstance(value, bool):
        _fail(path, f"expected true/false, got {value!r}")
    return value


def _str(value, path):
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {value!r}")
    return value


def _vec3(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(path, f"expected a 3-vector, got {value!r}")
    return [_float(v, path) for v in value]


def _pair(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        _fail(path, f"expected a pair, got {value!r}")
    return [_float(v, path) for v in value]


def _float_list(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        _fail(path, f"expected a non-empty list, got {value!r}")
    return [_float(v, path) for v in value]


def _int_list(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        _fail(path, f"expected a non-empty list, got {value!r}")
    return [_int(v, path) for v in value]


def _int_or_pair(value, path):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            _fail(path, f"expected an integer or a pair, got {value!r}")
        return [_int(v, path) for v in value]
    return _int(value, path)


_CABLE_SCHEMA = {
    "length": _float, "n_nodes": _int, "density": _float,
    "water_density": _float, "section_area": _float,
    "drag_diameter": _float, "youngs_modulus": _float,
    "normal_drag_coeff": _float, "tangential_drag_coeff": _float,
    "added_mass_coeff": _float, "bending_stiffness": _float,
    "gravity": _vec3, "added_mass_density": _str,
}

_INTEGRATOR_SCHEMA = {
    "dt": _float, "t_end": _float, "scheme": _str, "record_stride": _int,
    "record_positions": _bool, "backend": _str, "chunk_steps": _int,
    "stop_on_steady": _bool, "steady_window": _float, "steady_tol": _float,
}

_MOVE_SCHEMA = {"axis": _int, "t_start": _float, "t_end": _float,
                "delta": _float}

_PROFILE_PARAM_SCHEMAS = {
    "constant_velocity": {"start": _vec3, "velocity": _vec3},
    "ramp_hold": {"start": _vec3, "direction": _vec3, "speed": _float,
                  "t_start": _float, "t_end": _float},
    "sinusoidal": {"start": _vec3, "direction": _vec3, "v_mean": _float,
                   "amplitude": _float, "omega": _float, "phase": _float},
    "ramp_hold_transition": {"start": _vec3, "direction": _vec3,
                             "speed": _float, "t_start": _float,
                             "t_end": _float, "moves": None},
    "spline": {"times": _float_list, "points": None},
}

_GA_SCHEMA = {
    "population": _int, "generations": _int, "tournament": _int,
    "crossover_rate": _float, "blend_alpha": _float, "mutation_rate": _float,
    "mutation_scale": _float, "mutation_decay": _float, "elitism": _int,
    "include_ka": _bool, "e_bounds": _pair, "cn_bounds": _pair,
    "ct_bounds": _pair, "ka_bounds": _pair,
}

_FORWARD_SCHEMA = {
    "dt": _float, "t_end": _float, "steady_window": _float,
    "steady_tol": _float, "record_stride": _int, "chunk_steps": _int,
    "use_z": _bool, "backend": _str,
}

_IDENTIFY_SCHEMA = {
    "dataset": _str, "threads": _int, "forward": _FORWARD_SCHEMA,
    "ga": _GA_SCHEMA,
}

_ANALYZE_SCHEMA = {
    "kind": _str, "n_list": _int_list, "dt_list": _float_list,
    "stations": _int, "steady_window": _float, "d_range": _pair,
    "e_range": _pair, "samples": _int_or_pair, "threads": _int,
    "fractions": _pair, "lengths": _float_list, "speed": _float,
    "linearize_dt": _float, "settle_fraction": _float, "n_modes": _int,
}

_ROOT_SCHEMA = {
    "label": _str, "seed": _int, "theta_taut": _float,
    "cable": _CABLE_SCHEMA, "current": {"type": _str, "velocity": _vec3},
    "integrator": _INTEGRATOR_SCHEMA, "boundary": None,
    "identify": _IDENTIFY_SCHEMA, "analyze": _ANALYZE_SCHEMA,
}

ANALYZE_KINDS = ("converge-space", "converge-time", "sweep-material",
                 "sweep-length", "spectral")


def _walk(user, schema, path):
    if not isinstance(user, dict):
        _fail(path, f"expected a mapping, got {user!r}")
    out = {}
    for key, value in user.items():
        if key not in schema:
            _fail(path + [str(key)], "unknown key")
        rule = schema[key]
        if isinstance(rule, dict):
            out[key] = _walk(value, rule, path + [str(key)])
        elif rule is None:
            out[key] = _special(key, value, path + [str(key)])
        else:
            out[key] = rule(value, path + [str(key)])
    return out


def _special(key, value, path):
    if key == "boundary":
        return _cast_boundary(value, path)
    if key == "moves":
        if not isinstance(value, (list, tuple)) or not value:
            _fail(path, "expected a non-empty list of moves")
        return [_walk(m, _MOVE_SCHEMA, path + [str(i)])
                for i, m in enumerate(value)]
    if key == "points":
        if not isinstance(value, (list, tuple)) or len(value) < 2:
            _fail(path, "expected at least two points")
        return [_vec3(p, path + [str(i)]) for i, p in enumerate(value)]
    raise AssertionError(key)


def _cast_boundary(value, path):
    if not isinstance(value, dict):
        _fail(path, f"expected a mapping, got {value!r}")
    out = {}
    for end in ("first", "last"):
        if end not in value:
            _fail(path, f"missing endpoint {end!r}")
    for key, spec in value.items():
        if key not in ("first", "last"):
            _fail(path + [key], "unknown key")
        p = path + [key]
        if not isinstance(spec, dict) or set(spec) - {"profile", "params"}:
            _fail(p, "endpoint needs exactly profile and params")
        profile = _str(spec.get("profile"), p + ["profile"])
        if profile not in _PROFILE_PARAM_SCHEMAS:
            known = ", ".join(sorted(_PROFILE_PARAM_SCHEMAS))
            _fail(p + ["profile"], f"unknown profile (known: {known})")
        schema = _PROFILE_PARAM_SCHEMAS[profile]
        params = spec.get("params", {})
        cast = {}
        if not isinstance(params, dict):
            _fail(p + ["params"], "expected a mapping")
        for pk, pv in params.items():
            if pk not in schema:
                _fail(p + ["params", pk], "unknown key")
            rule = schema[pk]
            if rule is None:
                cast[pk] = _special(pk, pv, p + ["params", pk])
            else:
                cast[pk] = rule(pv, p + ["params", pk])
        out[key] = {"profile": profile, "params": cast}
    return out


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration plus its normalized echo."""

    echo: dict
    base_dir: str = "."

    @property
    def label(self):
        return self.echo.get("label", "run")

    @property
    def seed(self):
        return self.echo.get("seed")

    def _require(self, section):
        if section not in self.echo:
            raise ConfigInvalid(f"config needs a {section!r} section")
        return self.echo[section]

    def cable(self):
        return CableProperties(**self._require("cable"))

    def current(self):
        spec = self.echo.get("current", {"type": "zero"})
        kind = spec.get("type", "zero")
        if kind == "zero":
            return CurrentField.zero()
        if kind == "uniform":
            if "velocity" not in spec:
                raise ConfigInvalid("current.velocity required for uniform")
            return CurrentField.uniform(spec["velocity"])
        raise ConfigInvalid(f"current.type must be zero or uniform, "
                            f"got {kind!r}")

    def integrator(self):
        return IntegratorConfig(**self._require("integrator"))

    def boundary(self):
        spec = self._require("boundary")
        ends = [prescribe(spec[e]["profile"], spec[e]["params"])
                for e in ("first", "last")]
        return BoundaryPrescription(*ends)

    def scenario(self):
        kw = {}
        if "theta_taut" in self.echo:
            kw["theta_taut"] = self.echo["theta_taut"]
        return Scenario(props=self.cable(), boundary=self.boundary(),
                        current=self.current(),
                        integrator=self.integrator(),
                        label=self.label, **kw)

    def identify_parts(self):
        """(dataset_path, GaConfig, ForwardModel, threads) for a GA run."""
        section = self._require("identify")
        if "dataset" not in section:
            raise ConfigInvalid("identify.dataset is required")
        if self.seed is None:
            raise ConfigInvalid("a top-level seed is required to identify")
        path = section["dataset"]
        if not os.path.isabs(path):
            path = os.path.join(self.base_dir, path)
        ga = GaConfig(seed=self.seed, **section.get("ga", {}))
        forward = dict(section.get("forward", {}))
        model = ForwardModel(props=self.cable(), **forward)
        return path, ga, model, section.get("threads")

    def analyze_params(self):
        section = dict(self._require("analyze"))
        kind = section.pop("kind", None)
        if kind not in ANALYZE_KINDS:
            raise ConfigInvalid(f"analyze.kind must be one of "
                                f"{', '.join(ANALYZE_KINDS)}, got {kind!r}")
        return kind, section


def parse_config(data, base_dir="."):
    if not isinstance(data, dict):
        raise ConfigInvalid("config root must be a mapping")
    echo = _walk(data, _ROOT_SCHEMA, [])
    return RunConfig(echo=echo, base_dir=base_dir)


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as err:
        raise ConfigInvalid(f"config is not valid YAML: {err}") from err
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))
