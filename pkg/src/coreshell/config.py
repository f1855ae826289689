"""Experiment configuration: JSON parsing with exhaustive validation.

``parse_config`` reports every violation it can find in one pass, each
message prefixed with the offending field path (``geometry.interface``,
``solve.dt``, ...), so a bad file never needs more than one round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CoreShellGeometry, Mesh, build_mesh
from .operators import DiffusionField
from .reactions import ReactionTerm
from .solvers import InitialCondition, SolveConfig

_SCHEMES = ("imex_euler", "exponential_euler")
_REACTION_KINDS = ("zero", "constant_source", "michaelis_menten",
                   "substrate_inhibition", "tabulated")


class ConfigError(ValueError):
    """Carries the full list of validation messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SolveSettings:
    t_final: float
    dt: float
    modes: int
    elements: int
    scheme: str


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    snapshot_stride: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: CoreShellGeometry
    diffusion: DiffusionField
    reaction: ReactionTerm
    initial: InitialCondition
    solve: SolveSettings
    output: OutputSettings
    seed: int = 0

    def build_mesh(self) -> Mesh:
        spacing = self.geometry.outer_extent / self.solve.elements
        return build_mesh(self.geometry, spacing)

    def solve_config(self) -> SolveConfig:
        return SolveConfig(t_final=self.solve.t_final, dt=self.solve.dt,
                           modes=self.solve.modes, scheme=self.solve.scheme,
                           initial=self.initial)


class _Block:
    """One config section; records missing/ill-typed fields by path."""

    def __init__(self, name, data, errors):
        self.name = name
        self.data = data if isinstance(data, dict) else {}
        self.errors = errors
        if data is None:
            errors.append(f"{name}: missing section")
        elif not isinstance(data, dict):
            errors.append(f"{name}: must be an object")

    def number(self, key, default=None, required=True):
        return self._get(key, (int, float), "a number", default, required)

    def integer(self, key, default=None, required=True):
        value = self._get(key, (int,), "an integer", default, required)
        return value

    def string(self, key, default=None, required=True):
        return self._get(key, (str,), "a string", default, required)

    def array(self, key, default=None, required=True):
        value = self._get(key, (list,), "an array of numbers", default, required)
        if isinstance(value, list):
            if all(isinstance(x, (int, float)) and not isinstance(x, bool)
                   for x in value):
                return value
            self.errors.append(f"{self.name}.{key}: must be an array of numbers")
            return None
        return value

    def _get(self, key, types, describe, default, required):
        if key not in self.data:
            if required:
                self.errors.append(f"{self.name}.{key}: missing")
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, types):
            self.errors.append(f"{self.name}.{key}: must be {describe}")
            return default
        return value

    def check(self, condition, key, message):
        if condition is False:
            self.errors.append(f"{self.name}.{key}: {message}")
            return False
        return bool(condition)


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment file.

    Raises :class:`ConfigError` carrying every detected problem; returns a
    fully validated configuration otherwise.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: no such file"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"])
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return validate_config(raw)


def validate_config(raw: dict) -> ExperimentConfig:
    errors: list[str] = []

    geo = _Block("geometry", raw.get("geometry"), errors)
    kind = geo.string("kind")
    dimension = geo.integer("dimension")
    interface = geo.number("interface")
    outer = geo.number("outer_extent")
    geo.check(kind is None or kind in ("interval", "radial"), "kind",
              "must be 'interval' or 'radial'")
    if kind == "interval" and dimension is not None:
        geo.check(dimension == 1, "dimension", "must be 1 for interval")
    if kind == "radial" and dimension is not None:
        geo.check(dimension in (2, 3), "dimension", "must be 2 or 3 for radial")
    if outer is not None:
        geo.check(outer > 0, "outer_extent", "must be positive")
    if interface is not None and outer is not None and outer > 0:
        geo.check(0 < interface < outer, "interface",
                  f"must lie strictly inside (0, {outer})")

    dif = _Block("diffusion", raw.get("diffusion"), errors)
    b1 = dif.number("b1")
    b2 = dif.number("b2")
    epsilon = dif.number("epsilon", default=0.0, required=False)
    if b1 is not None:
        dif.check(b1 > 0, "b1", "must be positive")
    if b2 is not None:
        dif.check(b2 > 0, "b2", "must be positive")
    if epsilon is not None:
        dif.check(epsilon >= 0, "epsilon", "must be non-negative")
        if (epsilon and interface is not None and outer is not None
                and 0 < interface < outer):
            dif.check(interface - 0.5 * epsilon > 0
                      and interface + 0.5 * epsilon < outer, "epsilon",
                      "ramp must fit strictly inside the domain")

    rxn = _Block("reaction", raw.get("reaction"), errors)
    rkind = rxn.string("kind")
    rxn.check(rkind is None or rkind in _REACTION_KINDS, "kind",
              f"must be one of {', '.join(_REACTION_KINDS)}")
    c0 = rxn.number("c0", default=1.0, required=rkind in
                    ("michaelis_menten", "substrate_inhibition"))
    if c0 is not None:
        rxn.check(c0 > 0, "c0", "must be positive")
    v_max = k_m = source = None
    table_v = table_g = lipschitz = None
    if rkind in ("michaelis_menten", "substrate_inhibition"):
        v_max = rxn.number("v_max")
        k_m = rxn.number("k_m")
        if v_max is not None:
            rxn.check(v_max >= 0, "v_max", "must be non-negative")
        if k_m is not None:
            rxn.check(k_m > 0, "k_m", "must be positive")
    elif rkind == "constant_source":
        source = rxn.number("s")
    elif rkind == "tabulated":
        table_v = rxn.array("v")
        table_g = rxn.array("g")
        lipschitz = rxn.number("lipschitz", required=False)
        if table_v is not None and table_g is not None:
            ok = (len(table_v) == len(table_g) and len(table_v) >= 2
                  and table_v[0] == 0 and table_g[0] == 0
                  and all(a < b for a, b in zip(table_v, table_v[1:]))
                  and all(g >= 0 for g in table_g))
            rxn.check(ok, "v", "table must ascend from (0, 0) with "
                              "non-negative rates")
        if lipschitz is not None:
            rxn.check(lipschitz >= 0, "lipschitz", "must be non-negative")

    ini = _Block("initial", raw.get("initial"), errors)
    ikind = ini.string("kind")
    ini.check(ikind is None or ikind in ("zero", "mode", "table"), "kind",
              "must be 'zero', 'mode', or 'table'")
    mode = 1
    values = None
    if ikind == "mode":
        mode = ini.integer("j")
        if mode is not None:
            ini.check(mode >= 1, "j", "must be >= 1")
    elif ikind == "table":
        values = ini.array("values")

    sol = _Block("solve", raw.get("solve"), errors)
    t_final = sol.number("t_final")
    dt = sol.number("dt")
    modes = sol.integer("modes")
    elements = sol.integer("elements")
    scheme = sol.string("scheme", default="imex_euler", required=False)
    if t_final is not None:
        sol.check(t_final > 0, "t_final", "must be positive")
    if dt is not None:
        sol.check(dt > 0, "dt", "must be positive")
        if t_final is not None and t_final > 0 and dt > 0:
            steps = round(t_final / dt)
            sol.check(dt <= t_final, "dt", "must not exceed t_final")
            if dt <= t_final:
                sol.check(steps >= 1 and abs(steps * dt - t_final) <= 1e-9 * t_final,
                          "dt", "must divide t_final")
    if modes is not None:
        sol.check(modes >= 1, "modes", "must be >= 1")
    if elements is not None:
        sol.check(elements >= 2, "elements", "must be >= 2")
        if modes is not None and modes >= 1 and elements >= 2:
            sol.check(modes <= elements - 1, "modes",
                      "must not exceed elements - 1 free nodes")
    sol.check(scheme is None or scheme in _SCHEMES, "scheme",
              f"must be one of {', '.join(_SCHEMES)}")

    out = _Block("output", raw.get("output", {}), errors)
    directory = out.string("directory", default="out", required=False)
    stride = out.integer("snapshot_stride", default=0, required=False)
    if stride is not None:
        out.check(stride >= 0, "snapshot_stride", "must be non-negative")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        errors.append("seed: must be a non-negative integer")

    known = {"geometry", "diffusion", "reaction", "initial", "solve",
             "output", "seed"}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown section")

    if errors:
        raise ConfigError(errors)

    geometry = CoreShellGeometry(kind=kind, dimension=dimension,
                                 interface=float(interface),
                                 outer_extent=float(outer))
    diffusion = DiffusionField(b1=float(b1), b2=float(b2),
                               regularization_width=float(epsilon))
    reaction = ReactionTerm(
        kind=rkind,
        v_max=float(v_max) if v_max is not None else 0.0,
        k_m=float(k_m) if k_m is not None else 1.0,
        c0=float(c0),
        source=float(source) if source is not None else 0.0,
        table_v=np.asarray(table_v, dtype=float) if table_v is not None else None,
        table_g=np.asarray(table_g, dtype=float) if table_g is not None else None,
        declared_lipschitz=float(lipschitz) if lipschitz is not None else None)
    initial = InitialCondition(
        kind=ikind, mode=int(mode or 1),
        values=np.asarray(values, dtype=float) if values is not None else None)
    solve = SolveSettings(t_final=float(t_final), dt=float(dt),
                          modes=int(modes), elements=int(elements),
                          scheme=scheme)
    output = OutputSettings(directory=directory, snapshot_stride=int(stride))
    return ExperimentConfig(geometry=geometry, diffusion=diffusion,
                            reaction=reaction, initial=initial, solve=solve,
                            output=output, seed=int(seed))
