"""Experiment configuration: YAML (or JSON) with one section per pipeline part.

Errors name the offending field as a dotted path and, for YAML input, the
source line.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError


@dataclass
class GeometryConfig:
    length: float = 50.0
    curvature_ratio: float = 2.0 / 3.0
    standing_wave: str = "node"
    n_min: int = 100
    n_max: int = 199
    l_values: list = field(default_factory=lambda: [0, 1, 2])
    m_values: list = field(default_factory=lambda: [0])


@dataclass
class LatticeConfig:
    n_sites: int = 8
    n_up: int = 4
    depth: float = 10.0
    spacing_factor: float = 1.2
    offset: list = field(default_factory=lambda: [-5.0, -2.0, 0.0])  # (z, r_l, r_m) / d
    angle: float = 47.0
    periodic: bool = False


@dataclass
class SearchConfig:
    modes: int | None = None
    angles: list = field(default_factory=lambda: [47.0])
    offsets: list = field(default_factory=lambda: [[-5.0, -2.0, 0.0]])
    max_ratio: float = 100.0
    passes: int = 1


@dataclass
class ProblemConfig:
    memories: list = field(default_factory=lambda: [[1, 1, -1, -1, 1, -1, 1, -1],
                                                    [1, 1, -1, 1, 1, -1, -1, -1]])
    probes: dict = field(default_factory=lambda: {"chi1": [1, 1, 1, -1, -1, -1, 1, -1],
                                                  "chi2": [1, 1, -1, 1, -1, -1, -1, 1]})
    nu: float = 0.7
    nu_max: float = 6.0


@dataclass
class ProgramConfig:
    strength: float = 1.0
    step: float = 0.1
    kappa: float = 1000.0


@dataclass
class SpectrumConfig:
    zeta_max: float = 2.0
    points: int = 201
    levels: int = 6


@dataclass
class ScheduleConfig:
    zeta_final: float = 2.0
    taus: list = field(default_factory=lambda: [5.0, 10.0, 50.0, 200.0])
    samples: int = 500
    tunneling: float = 1.0
    method: str = "DOP853"


@dataclass
class ReadoutConfig:
    probe_strength: float = 1.0
    noise: float = 0.0


@dataclass
class RuntimeConfig:
    threads: int = 1
    rtol: float = 1e-10
    atol: float = 1e-12
    out: str = "out"
    seed: int = 0
    figures: bool = True


@dataclass
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    program: ProgramConfig = field(default_factory=ProgramConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    @property
    def n_modes(self) -> int:
        n = self.lattice.n_sites
        return self.search.modes if self.search.modes is not None else n * (n + 1) // 2

    def to_dict(self) -> dict:
        return asdict(self)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-10``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _line_map(text: str) -> dict:
    """Dotted key path -> 1-based source line, from the YAML node tree."""
    lines = {}
    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    if root is not None:
        walk(root, "")
    return lines


def _err(path: str, msg: str, lines: dict):
    where = f" (line {lines[path]})" if path in lines else ""
    return ConfigurationError(f"{path}{where}: {msg}")


def _coerce(value, default, path, lines):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise _err(path, f"expected true/false, got {value!r}", lines)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise _err(path, f"expected an integer, got {value!r}", lines)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _err(path, f"expected a number, got {value!r}", lines)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise _err(path, f"expected a string, got {value!r}", lines)
        return value
    if isinstance(default, list) and not isinstance(value, list):
        raise _err(path, f"expected a list, got {value!r}", lines)
    if isinstance(default, dict) and not isinstance(value, dict):
        raise _err(path, f"expected a mapping, got {value!r}", lines)
    return value


def from_dict(data: dict, lines: dict | None = None) -> ExperimentConfig:
    lines = lines or {}
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping of sections")
    cfg = ExperimentConfig()
    sections = {f.name: f for f in dataclasses.fields(cfg)}
    for name, body in data.items():
        if name not in sections:
            raise _err(name, "unknown section", lines)
        if body is None:
            continue
        if not isinstance(body, dict):
            raise _err(name, "section must be a mapping", lines)
        sec = getattr(cfg, name)
        known = {f.name for f in dataclasses.fields(sec)}
        for key, value in body.items():
            path = f"{name}.{key}"
            if key not in known:
                raise _err(path, "unknown field", lines)
            setattr(sec, key, _coerce(value, getattr(sec, key), path, lines))
    validate(cfg, lines)
    return cfg


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    lines = lines or {}
    lat, geo = cfg.lattice, cfg.geometry
    if lat.n_sites < 2:
        raise _err("lattice.n_sites", "need at least two sites", lines)
    if not 0 <= lat.n_up <= lat.n_sites:
        raise _err("lattice.n_up", f"must lie in [0, {lat.n_sites}]", lines)
    if lat.depth <= 0:
        raise _err("lattice.depth", "must be positive", lines)
    if len(lat.offset) != 3:
        raise _err("lattice.offset", "needs three entries (z, r_l, r_m)", lines)
    if geo.n_min < 1 or geo.n_max < geo.n_min:
        raise _err("geometry.n_max", "need 1 <= n_min <= n_max", lines)
    if geo.standing_wave not in ("node", "cosine"):
        raise _err("geometry.standing_wave", "must be 'node' or 'cosine'", lines)
    pool = (geo.n_max - geo.n_min + 1) * len(geo.l_values) * len(geo.m_values)
    if cfg.n_modes > pool:
        raise _err("search.modes", f"{cfg.n_modes} modes requested from a pool of {pool}", lines)
    if cfg.n_modes < 2:
        raise _err("search.modes", "need at least two modes", lines)
    for i, off in enumerate(cfg.search.offsets):
        if not isinstance(off, list) or len(off) != 3:
            raise _err("search.offsets", f"entry {i} needs three numbers", lines)
    mem = cfg.problem.memories
    if not mem:
        raise _err("problem.memories", "at least one memory pattern required", lines)
    for i, m in enumerate(mem):
        _check_pattern(m, lat, f"problem.memories[{i}]", "problem.memories", lines)
        if sum(1 for x in m if x > 0) != lat.n_up:
            raise _err("problem.memories", f"memory {i} does not have {lat.n_up} up spins", lines)
    if not cfg.problem.probes:
        raise _err("problem.probes", "at least one probe pattern required", lines)
    for name, p in cfg.problem.probes.items():
        _check_pattern(p, lat, f"problem.probes.{name}", "problem.probes", lines)
    if cfg.problem.nu < 0:
        raise _err("problem.nu", "must be non-negative", lines)
    if cfg.program.step < 0:
        raise _err("program.step", "must be non-negative", lines)
    if cfg.program.kappa <= 0:
        raise _err("program.kappa", "must be positive", lines)
    if cfg.schedule.samples < 2:
        raise _err("schedule.samples", "need at least two samples", lines)
    if any(t < 0 for t in cfg.schedule.taus):
        raise _err("schedule.taus", "anneal times must be non-negative", lines)
    if cfg.spectrum.levels < 2:
        raise _err("spectrum.levels", "need at least two levels for the gap", lines)
    if cfg.runtime.threads < 1:
        raise _err("runtime.threads", "must be >= 1", lines)


def _check_pattern(p, lat, name, anchor, lines):
    if not isinstance(p, list) or len(p) != lat.n_sites or any(x not in (-1, 1) for x in p):
        raise _err(anchor, f"{name} must be {lat.n_sites} entries of +-1", lines)


def loads(text: str, fmt: str = "yaml") -> ExperimentConfig:
    if fmt == "json":
        return from_dict(json.loads(text))
    return from_dict(yaml.load(text, Loader=_Loader) or {}, _line_map(text))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    return loads(text, "json" if path.suffix == ".json" else "yaml")


def dumps(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
