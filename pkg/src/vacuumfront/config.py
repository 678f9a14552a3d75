"""Scenario configuration: a flat ``[section]`` / ``key = value`` text format.

Every problem in a file is collected and reported together, each tagged
with its line number. Example::

    [scenario]
    name = hyperbola-check
    mode = verify-exact

    [law]
    gamma = 3
    A = 1/3

    [initial]
    preset = hyperbola

    [numerics]
    n_cells = 400
    t_end = 1.0
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from dataclasses import field as dc_field
from fractions import Fraction
from pathlib import Path

MODES = ("simulate", "characteristics", "classify", "verify-exact")
PRESETS = ("hyperbola", "impulsive", "uniform-block", "affine", "custom-table")
DOMAINS = ("ball", "box")
FIELDS = ("zero", "rotation", "identity", "linear")
DENSITIES = ("bump", "uniform")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _number(text):
    return float(Fraction(text)) if "/" in text else float(text)


def _int(text):
    return int(text)


def _str(text):
    return text


def _matrix(text):
    return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)


# section -> key -> (parser, default); REQUIRED marks mandatory keys
REQUIRED = object()
SCHEMA = {
    "scenario": {"name": (_str, "scenario"), "mode": (_str, None)},
    "law": {"gamma": (_str, REQUIRED), "A": (_number, REQUIRED)},
    "initial": {"preset": (_str, None), "table_file": (_str, None)},
    "numerics": {
        "n_cells": (_int, 400),
        "cfl": (_number, 0.5),
        "t_end": (_number, 1.0),
        "snapshot_stride": (_number, 0.1),
        "seed": (_int, 0),
        "horizon": (_number, 5.0),
        "slope_horizon": (_number, 100.0),
        "step": (_number, 1e-3),
        "n_paths": (_int, 8),
        "n_samples": (_int, 100_000),
        "l1_tol": (_number, 0.02),
        "front_tol": (_number, None),
        "drift_tol": (_number, 1e-6),
        "size_tol": (_number, 1e-3),
    },
    "classify": {
        "dimension": (_int, None),
        "domain": (_str, "ball"),
        "radius": (_number, 1.0),
        "field": (_str, "zero"),
        "matrix": (_matrix, None),
        "density": (_str, "bump"),
        "amplitude": (_number, 1.0),
        "expect": (_str, None),
    },
    "output": {"dir": (_str, None)},
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mode: str | None
    gamma: str
    A: float
    preset: str | None = None
    table_file: str | None = None
    n_cells: int = 400
    cfl: float = 0.5
    t_end: float = 1.0
    snapshot_stride: float = 0.1
    seed: int = 0
    horizon: float = 5.0
    slope_horizon: float = 100.0
    step: float = 1e-3
    n_paths: int = 8
    n_samples: int = 100_000
    l1_tol: float = 0.02
    front_tol: float | None = None
    drift_tol: float = 1e-6
    size_tol: float = 1e-3
    dimension: int | None = None
    domain: str = "ball"
    radius: float = 1.0
    field: str = "zero"
    matrix: tuple | None = None
    density: str = "bump"
    amplitude: float = 1.0
    expect: str | None = None
    out_dir: str | None = None
    base_dir: str = dc_field(default=".", compare=False)

    @property
    def gamma_value(self) -> float:
        return float(Fraction(self.gamma))


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_-]*)\s*\]$")


def parse_config(text: str, mode: str | None = None, base_dir: str = ".") -> ScenarioConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem.

    ``mode`` (usually the CLI subcommand) fills or must agree with
    ``scenario.mode``.
    """
    errors = []
    values, where = {}, {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                errors.append(f"line {lineno}: unknown section [{section}]")
            continue
        m = _LINE.match(line)
        if not m:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = m.groups()
        if section is None:
            errors.append(f"line {lineno}: key '{key}' outside any section")
            continue
        if section not in SCHEMA:
            continue
        if key not in SCHEMA[section]:
            errors.append(f"line {lineno}: unknown key '{key}' in [{section}]")
            continue
        if (section, key) in where:
            errors.append(f"line {lineno}: duplicate key '{key}' in [{section}] "
                          f"(first defined on line {where[section, key]})")
            continue
        parser = SCHEMA[section][key][0]
        try:
            values[section, key] = parser(val)
            where[section, key] = lineno
        except (ValueError, ZeroDivisionError):
            errors.append(f"line {lineno}: cannot parse {key} = {val!r}")
            where[section, key] = lineno

    def get(section, key):
        if (section, key) in values:
            return values[section, key]
        default = SCHEMA[section][key][1]
        return None if default is REQUIRED else default

    def at(section, key):
        return f"line {where[section, key]}: " if (section, key) in where else ""

    for section, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            if default is REQUIRED and (section, key) not in where:
                errors.append(f"missing required key '{key}' in [{section}]")

    gamma = get("law", "gamma")
    if gamma is not None:
        try:
            if not Fraction(gamma) > 1:
                errors.append(f"{at('law', 'gamma')}gamma must exceed 1")
        except (ValueError, ZeroDivisionError):
            errors.append(f"{at('law', 'gamma')}cannot parse gamma = {gamma!r}")
    A = get("law", "A")
    if A is not None and not A > 0:
        errors.append(f"{at('law', 'A')}A must be positive")

    file_mode = get("scenario", "mode")
    if file_mode is not None and file_mode not in MODES:
        errors.append(f"{at('scenario', 'mode')}mode must be one of {', '.join(MODES)}")
    if mode is not None and file_mode is not None and mode != file_mode:
        errors.append(f"{at('scenario', 'mode')}mode '{file_mode}' conflicts with subcommand '{mode}'")
    mode = mode or file_mode
    if mode is None:
        errors.append("missing required key 'mode' in [scenario]")

    checks = [
        ("numerics", "n_cells", lambda v: v >= 8, "n_cells must be at least 8"),
        ("numerics", "cfl", lambda v: 0 < v < 1, "cfl must lie in (0, 1)"),
        ("numerics", "snapshot_stride", lambda v: v > 0, "snapshot_stride must be positive"),
        ("numerics", "seed", lambda v: 0 <= v < 2 ** 64, "seed must be an unsigned 64-bit integer"),
        ("numerics", "horizon", lambda v: v >= 0, "horizon must be non-negative"),
        ("numerics", "slope_horizon", lambda v: v > 0, "slope_horizon must be positive"),
        ("numerics", "step", lambda v: v > 0, "step must be positive"),
        ("numerics", "n_paths", lambda v: v >= 1, "n_paths must be at least 1"),
        ("numerics", "n_samples", lambda v: v >= 1000, "n_samples must be at least 1000"),
        ("numerics", "l1_tol", lambda v: v > 0, "l1_tol must be positive"),
        ("classify", "radius", lambda v: v > 0, "radius must be positive"),
        ("classify", "amplitude", lambda v: v > 0, "amplitude must be positive"),
        ("classify", "domain", lambda v: v in DOMAINS, f"domain must be one of {', '.join(DOMAINS)}"),
        ("classify", "field", lambda v: v in FIELDS, f"field must be one of {', '.join(FIELDS)}"),
        ("classify", "density", lambda v: v in DENSITIES, f"density must be one of {', '.join(DENSITIES)}"),
    ]
    for section, key, ok, msg in checks:
        v = get(section, key)
        if (section, key) in values and not ok(v):
            errors.append(f"{at(section, key)}{msg}")

    preset = get("initial", "preset")
    if preset is not None and preset not in PRESETS:
        errors.append(f"{at('initial', 'preset')}preset must be one of {', '.join(PRESETS)}")
    if mode in ("simulate", "verify-exact", "characteristics") and preset is None:
        errors.append(f"missing required key 'preset' in [initial] for mode {mode}")
    if preset == "custom-table" and get("initial", "table_file") is None:
        errors.append(f"{at('initial', 'preset')}custom-table needs table_file")
    if mode == "verify-exact" and preset == "custom-table":
        errors.append(f"{at('initial', 'preset')}verify-exact needs a preset with an exact solution")
    if mode == "characteristics" and preset == "custom-table":
        errors.append(f"{at('initial', 'preset')}characteristics needs a preset with an exact solution")
    if mode == "classify":
        d = get("classify", "dimension")
        if d is None:
            errors.append("missing required key 'dimension' in [classify]")
        elif d < 1:
            errors.append(f"{at('classify', 'dimension')}dimension must be at least 1")
        elif get("classify", "field") == "linear":
            mat = get("classify", "matrix")
            if mat is None or len(mat) != d * d:
                errors.append(f"{at('classify', 'field')}linear field needs matrix with {d * d} entries")
        elif get("classify", "field") == "rotation" and d != 2:
            errors.append(f"{at('classify', 'field')}rotation field is two-dimensional")

    if errors:
        raise ConfigError(errors)

    kw = {key: get(section, key) for section in ("numerics", "classify") for key in SCHEMA[section]}
    return ScenarioConfig(
        name=get("scenario", "name"), mode=mode, gamma=gamma, A=A,
        preset=preset, table_file=get("initial", "table_file"),
        out_dir=get("output", "dir"), base_dir=base_dir, **kw,
    )


def load_config(path, mode: str | None = None) -> ScenarioConfig:
    p = Path(path)
    return parse_config(p.read_text(), mode, str(p.parent))
