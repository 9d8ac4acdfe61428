"""Scenario files: one TOML document wiring a complete closed-loop run.

A scenario fixes the strategy profile, epidemic rates, design
parameters, protocol, initial state and run controls. Deserialization
re-runs every model/design validation, so a scenario that loads is a
scenario that simulates.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .design import DesignTarget, optimal_target
from .dynamics import MechanismConfig, NaiveBaseline
from .errors import ValidationError
from .model import (
    EpidemicParams,
    StrategyProfile,
    SystemState,
    validate_profile,
)
from .protocols import RevisionProtocol, SmithProtocol


@dataclass(frozen=True)
class RunControls:
    t_end: float = 4000.0
    tol: float = 1e-8
    sample_every: float = 1.0
    saturation: object = None          # None | "auto" | (q_min, q_max)
    rho_for_saturation: float | None = None
    baseline_mu: float | None = None   # set => comparison reward rule
    baseline_x_check: tuple | None = None


@dataclass(frozen=True)
class Scenario:
    profile: StrategyProfile
    params: EpidemicParams
    c_star: float
    upsilon: float
    rho_star: float
    protocol: RevisionProtocol
    initial: SystemState
    run: RunControls
    design: DesignTarget
    raw: dict = field(repr=False)

    def mechanism_config(self) -> MechanismConfig:
        baseline = None
        if self.run.baseline_mu is not None:
            x_check = self.run.baseline_x_check
            x_check = (self.design.x_star if x_check is None
                       else np.asarray(x_check, dtype=float))
            baseline = NaiveBaseline(mu=self.run.baseline_mu, x_check=x_check)
        return MechanismConfig(
            design=self.design, upsilon=self.upsilon,
            saturation=self.run.saturation,
            rho_for_saturation=self.run.rho_for_saturation,
            baseline=baseline)


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ValidationError(f"scenario is missing '{key}' in [{context}]")
    return table[key]


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a parsed scenario document into live objects."""
    doc = copy.deepcopy(doc)
    prof_tbl = _require(doc, "profile", "profile")
    epi_tbl = _require(doc, "epidemic", "epidemic")
    des_tbl = _require(doc, "design", "design")
    proto_tbl = _require(doc, "protocol", "protocol")
    init_tbl = _require(doc, "initial", "initial")
    run_tbl = doc.get("run", {})

    params = EpidemicParams(
        g=float(epi_tbl.get("g", 0.0)),
        sigma_bar=float(_require(epi_tbl, "sigma_bar", "epidemic")),
        omega_bar=float(_require(epi_tbl, "omega_bar", "epidemic")),
        gamma=float(_require(epi_tbl, "gamma", "epidemic")))
    profile = validate_profile(
        _require(prof_tbl, "beta", "profile"),
        _require(prof_tbl, "cost", "profile"), params)

    c_star = float(_require(des_tbl, "c_star", "design"))
    upsilon = float(_require(des_tbl, "upsilon", "design"))
    if upsilon <= 0:
        raise ValidationError(f"upsilon={upsilon} must be positive")
    rho_star = float(des_tbl.get("rho_star", 1.0))
    if rho_star <= 0:
        raise ValidationError(f"rho_star={rho_star} must be positive")
    design = optimal_target(profile, params, c_star, rho_star)

    kind = str(proto_tbl.get("kind", "smith")).lower()
    if kind != "smith":
        raise ValidationError(f"unknown protocol kind '{kind}'")
    protocol = SmithProtocol(
        lam=float(_require(proto_tbl, "lambda", "protocol")),
        t_bar=float(_require(proto_tbl, "t_bar", "protocol")))

    x0 = np.asarray(_require(init_tbl, "x", "initial"), dtype=float)
    if x0.shape != (profile.n,):
        raise ValidationError(
            f"initial.x has length {x0.size}, profile has {profile.n}")
    if "endemic_at_beta" in init_tbl:
        b = float(init_tbl["endemic_at_beta"])
        if abs(profile.transmission_rate(x0) - b) > 1e-9:
            raise ValidationError(
                f"initial.x yields rate {profile.transmission_rate(x0)!r}, "
                f"not the requested endemic rate {b}")
        depletion = 1.0 - params.sigma / b
        initial = SystemState(I=params.eta * depletion,
                              R=(1.0 - params.eta) * depletion,
                              x=x0, q=0.0)
    else:
        initial = SystemState(I=float(_require(init_tbl, "I", "initial")),
                              R=float(_require(init_tbl, "R", "initial")),
                              x=x0, q=float(init_tbl.get("q", 0.0)))

    sat = run_tbl.get("saturation", "off")
    if sat == "off":
        saturation = None
    elif sat == "auto":
        saturation = "auto"
    elif isinstance(sat, (list, tuple)) and len(sat) == 2:
        saturation = (float(sat[0]), float(sat[1]))
    else:
        raise ValidationError(f"saturation must be 'off', 'auto' or a pair, "
                              f"got {sat!r}")
    baseline_tbl = run_tbl.get("baseline")
    baseline_mu = baseline_x = None
    if baseline_tbl is not None:
        baseline_mu = float(_require(baseline_tbl, "mu", "run.baseline"))
        if baseline_mu <= 0:
            raise ValidationError("baseline mu must be positive")
        if "x_check" in baseline_tbl:
            baseline_x = tuple(float(v) for v in baseline_tbl["x_check"])

    run = RunControls(
        t_end=float(run_tbl.get("t_end", 4000.0)),
        tol=float(run_tbl.get("tol", 1e-8)),
        sample_every=float(run_tbl.get("sample_every", 1.0)),
        saturation=saturation,
        rho_for_saturation=(None if "rho_for_saturation" not in run_tbl
                            else float(run_tbl["rho_for_saturation"])),
        baseline_mu=baseline_mu, baseline_x_check=baseline_x)

    return Scenario(profile=profile, params=params, c_star=c_star,
                    upsilon=upsilon, rho_star=rho_star, protocol=protocol,
                    initial=initial, run=run, design=design, raw=doc)


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return scenario_from_dict(doc)


def deep_merge(base: dict, overrides: dict) -> dict:
    """Recursively merge ``overrides`` into a copy of ``base``."""
    out = copy.deepcopy(base)
    for key, val in overrides.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(u) for u in v) + "]"
    raise TypeError(f"cannot serialize {type(v)} to TOML")


def dump_toml(doc: dict) -> str:
    """Serialize a nested dict of scalars/arrays/tables to TOML text.

    Covers the scenario schema (tables of scalars and arrays, one level
    of sub-tables); not a general-purpose writer.
    """
    lines = []
    scalars = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in doc.items() if isinstance(v, dict)}
    for k, v in scalars.items():
        lines.append(f"{k} = {_toml_value(v)}")
    if scalars:
        lines.append("")
    for name, tbl in tables.items():
        lines.append(f"[{name}]")
        for k, v in tbl.items():
            if isinstance(v, dict):
                continue
            lines.append(f"{k} = {_toml_value(v)}")
        for k, v in tbl.items():
            if isinstance(v, dict):
                lines.append(f"")
                lines.append(f"[{name}.{k}]")
                for kk, vv in v.items():
                    lines.append(f"{kk} = {_toml_value(vv)}")
        lines.append("")
    return "\n".join(lines)
