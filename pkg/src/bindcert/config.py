"""Strict TOML job configuration: unknown keys are rejected, defaults are echoed.

Grammar (TOML, one job per file):

    [grid]                  single lattice (or a [[grids]] array, not both)
      dim, length, points
    [kinetic]               profile = nonrelativistic | semirelativistic | bernstein, mass
    [bernstein]             preset = linear | one_minus_exp | sqrt_shifted, or
                            drift_a / drift_b / atoms = [[t, w], ...]
    [potential]             family = none | harmonic | gaussian_well | square_well |
                            coulomb | yukawa | tabulated, plus family parameters
    [solver]                tol, max_iter, seed, krylov_dim, keep
    [certificate]           tol
    [nelson]                modes = [[k, g_re, g_im, omega], ...], n_max, poly,
                            dim_cap, tol_h2, tol_h3
    [lemma1]                triples, exp_samples, max_atoms, momentum_bound, t_max
    [sweep]                 parameter = "section.key", values = [...]
    [output]                dir, eigenvector

Every key has a default (echoed into the resolved output) except the ones
marked required below.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bernstein import BernsteinFunction, preset
from .fock import FockTruncation, Mode, NelsonInstance
from .operators import (
    BernsteinKinetic,
    Coulomb,
    GaussianWell,
    GridSpec,
    Harmonic,
    NonRelativistic,
    SemiRelativistic,
    SquareWell,
    Yukawa,
    ZeroPotential,
    load_tabulated,
)

__all__ = [
    "ConfigError",
    "JobConfig",
    "build_bernstein",
    "build_grids",
    "build_instance",
    "build_kinetic",
    "build_potential",
    "load_job_config",
]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


_REQUIRED = object()

_GRID_KEYS = {"dim": (int, _REQUIRED), "length": (float, _REQUIRED), "points": (int, _REQUIRED)}

_SCHEMA: dict[str, dict[str, tuple]] = {
    "grid": _GRID_KEYS,
    "kinetic": {"profile": (str, "nonrelativistic"), "mass": (float, 1.0)},
    "bernstein": {
        "preset": (str, ""),
        "drift_a": (float, 0.0),
        "drift_b": (float, 0.0),
        "atoms": (list, []),
        "slope": (float, 1.0),
        "rate": (float, 1.0),
        "weight": (float, 1.0),
        "mass": (float, 1.0),
        "n_atoms": (int, 512),
        "u_max": (float, 2.0e4),
    },
    "potential": {
        "family": (str, "none"),
        "stiffness": (float, 1.0),
        "depth": (float, 1.0),
        "width": (float, 1.0),
        "radius": (float, 1.0),
        "charge": (float, 1.0),
        "softening": (object, "auto"),
        "cell_average": (bool, False),
        "strength": (float, 1.0),
        "screening": (float, 1.0),
        "path": (str, ""),
    },
    "solver": {
        "tol": (float, 1.0e-10),
        "max_iter": (int, 6000),
        "seed": (int, 7),
        "krylov_dim": (int, 96),
        "keep": (int, 8),
        "dealias": (bool, False),
    },
    "certificate": {"tol": (float, 1.0e-6)},
    "nelson": {
        "modes": (list, []),
        "n_max": (int, 2),
        "poly": (list, [0.0, 1.0]),
        "dim_cap": (int, 200_000),
        "tol_h2": (float, 1.0e-12),
        "tol_h3": (float, 1.0e-12),
    },
    "lemma1": {
        "triples": (int, 10_000),
        "exp_samples": (int, 100_000),
        "max_atoms": (int, 8),
        "momentum_bound": (float, 10.0),
        "t_max": (float, 10.0),
    },
    "sweep": {"parameter": (str, ""), "values": (list, [])},
    "output": {"dir": (str, "."), "eigenvector": (str, "")},
}


@dataclass
class JobConfig:
    """Parsed and fully resolved (defaults filled in) job description."""

    path: str
    raw_text: str
    resolved: dict[str, Any]

    def locate(self, token: str) -> int | None:
        for i, line in enumerate(self.raw_text.splitlines(), start=1):
            stripped = line.split("#", 1)[0]
            if token in stripped:
                return i
        return None


def _coerce(value, kind, section, key, locate):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number", locate(key))
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer", locate(key))
        return int(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"[{section}] {key} must be a boolean", locate(key))
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string", locate(key))
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"[{section}] {key} must be an array", locate(key))
        return value
    return value


def load_job_config(path) -> JobConfig:
    """Parse, validate against the schema, and fill every default."""
    with open(path, "rb") as fh:
        raw_bytes = fh.read()
    raw_text = raw_bytes.decode("utf-8")
    probe = JobConfig(path=str(path), raw_text=raw_text, resolved={})
    try:
        data = tomllib.loads(raw_text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            # tomllib reports positions in the message, e.g. "(at line 3, column 5)"
            msg = str(exc)
            if "line " in msg:
                try:
                    line = int(msg.split("line ", 1)[1].split(",")[0].split(")")[0])
                except ValueError:
                    line = None
        raise ConfigError(f"invalid TOML: {exc}", line) from exc

    resolved: dict[str, Any] = {}
    for section, content in data.items():
        if section == "grids":
            if not isinstance(content, list):
                raise ConfigError("[grids] must be an array of tables", probe.locate("grids"))
            rows = []
            for entry in content:
                rows.append(_resolve_section("grids", entry, _GRID_KEYS, probe))
            resolved["grids"] = rows
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", probe.locate(f"[{section}"))
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table", probe.locate(section))
        resolved[section] = _resolve_section(section, content, _SCHEMA[section], probe)

    if "grid" in resolved and "grids" in resolved:
        raise ConfigError("use either [grid] or [[grids]], not both", probe.locate("grids"))

    for section, keys in _SCHEMA.items():
        if section not in resolved and not any(d is _REQUIRED for _, d in keys.values()):
            resolved[section] = {k: d for k, (_, d) in keys.items()}
    probe.resolved = resolved
    return probe


def _resolve_section(section, content, keys, probe):
    out = {}
    for key, value in content.items():
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{section}]", probe.locate(key))
        kind, _ = keys[key]
        out[key] = _coerce(value, kind, section, key, probe.locate)
    for key, (_, default) in keys.items():
        if key not in out:
            if default is _REQUIRED:
                raise ConfigError(f"[{section}] is missing required key {key!r}",
                                  probe.locate(f"[{section}"))
            out[key] = default
    return out


# ---------------------------------------------------------------------------
# builders


def build_grids(cfg: JobConfig) -> list[GridSpec]:
    resolved = cfg.resolved
    if "grids" in resolved:
        rows = resolved["grids"]
    elif "grid" in resolved:
        rows = [resolved["grid"]]
    else:
        raise ConfigError("a [grid] section (or [[grids]] array) is required", None)
    try:
        return [GridSpec(r["dim"], r["length"], r["points"]) for r in rows]
    except ValueError as exc:
        raise ConfigError(str(exc), cfg.locate("points")) from exc


def build_bernstein(cfg: JobConfig) -> BernsteinFunction:
    b = cfg.resolved["bernstein"]
    try:
        if b["preset"]:
            name = b["preset"]
            if name == "linear":
                return preset("linear", slope=b["slope"])
            if name == "one_minus_exp":
                return preset("one_minus_exp", rate=b["rate"], weight=b["weight"])
            if name == "sqrt_shifted":
                return preset("sqrt_shifted", mass=b["mass"], n_atoms=b["n_atoms"],
                              u_max=b["u_max"])
            raise ValueError(f"unknown Bernstein preset {name!r}")
        atoms = tuple((float(t), float(w)) for t, w in b["atoms"])
        return BernsteinFunction(b["drift_a"], b["drift_b"], atoms)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[bernstein] {exc}", cfg.locate("preset") or cfg.locate("atoms")) from exc


def build_kinetic(cfg: JobConfig):
    k = cfg.resolved["kinetic"]
    profile = k["profile"]
    try:
        if profile == "nonrelativistic":
            return NonRelativistic(mass=k["mass"])
        if profile == "semirelativistic":
            return SemiRelativistic(mass=k["mass"])
        if profile == "bernstein":
            return BernsteinKinetic(build_bernstein(cfg))
    except ValueError as exc:
        raise ConfigError(f"[kinetic] {exc}", cfg.locate("profile")) from exc
    raise ConfigError(f"unknown kinetic profile {profile!r}", cfg.locate("profile"))


def build_potential(cfg: JobConfig):
    p = cfg.resolved["potential"]
    family = p["family"]
    softening = p["softening"]
    if softening == "auto":
        softening = None
    elif isinstance(softening, (int, float)) and not isinstance(softening, bool):
        softening = float(softening)
    else:
        raise ConfigError("[potential] softening must be a number or 'auto'",
                          cfg.locate("softening"))
    try:
        if family == "none":
            return ZeroPotential()
        if family == "harmonic":
            return Harmonic(stiffness=p["stiffness"])
        if family == "gaussian_well":
            return GaussianWell(depth=p["depth"], width=p["width"])
        if family == "square_well":
            return SquareWell(depth=p["depth"], radius=p["radius"])
        if family == "coulomb":
            return Coulomb(charge=p["charge"], softening=softening,
                           cell_average=p["cell_average"])
        if family == "yukawa":
            return Yukawa(strength=p["strength"], screening=p["screening"],
                          softening=softening)
        if family == "tabulated":
            if not p["path"]:
                raise ValueError("tabulated potential requires a path")
            return load_tabulated(p["path"])
    except (ValueError, OSError) as exc:
        raise ConfigError(f"[potential] {exc}", cfg.locate("family")) from exc
    raise ConfigError(f"unknown potential family {family!r}", cfg.locate("family"))


def build_instance(cfg: JobConfig) -> NelsonInstance:
    grids = build_grids(cfg)
    if len(grids) != 1:
        raise ConfigError("the coupled model needs exactly one [grid]", cfg.locate("grids"))
    grid = grids[0]
    n = cfg.resolved["nelson"]
    modes = []
    for row in n["modes"]:
        if not isinstance(row, list) or len(row) != 4:
            raise ConfigError("[nelson] each mode is [k, g_re, g_im, omega]",
                              cfg.locate("modes"))
        k, g_re, g_im, omega = row
        momentum = tuple(float(c) for c in k) if isinstance(k, list) else (float(k),)
        try:
            modes.append(Mode(momentum=momentum, coupling=complex(float(g_re), float(g_im)),
                              frequency=float(omega)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[nelson] {exc}", cfg.locate("modes")) from exc
    try:
        trunc = FockTruncation(modes=tuple(modes), n_max=n["n_max"])
        return NelsonInstance(
            grid=grid,
            kinetic_shape=build_bernstein(cfg),
            truncation=trunc,
            poly_coeffs=tuple(float(c) for c in n["poly"]),
            potential=build_potential(cfg),
            dim_cap=n["dim_cap"],
        )
    except ValueError as exc:
        raise ConfigError(f"[nelson] {exc}", cfg.locate("[nelson")) from exc
