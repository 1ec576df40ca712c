"""Scenario files (TOML): parsing, validation, serialization.

Angles are stored in degrees and positions in meters; everything is
converted to radians when the in-memory :class:`Scenario` is built.

Example::

    [array]
    nx = 4
    ny = 4
    spacing_wavelengths = 0.5
    frequency_hz = 30e9

    [model]
    regime = "far"
    L = 4

    [solver]
    seed = 0

    [[samples]]
    type = "focal"
    theta_deg = 20.0
    phi_deg = 0.0
    desired = 16.0
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from math import radians
from pathlib import Path
from typing import Any, Optional

import tomli
import tomli_w

from .em_response import FarTarget, NearTarget
from .geometry import ArrayGeometry
from .harmonics import TruncationSpec
from .synthesis import DEFAULT_POWER, Sample, Scenario, SolverConfig

BUNDLED = {"far": "far_default.toml", "near": "near_default.toml"}


class ScenarioError(ValueError):
    """Invalid scenario file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class ArraySection:
    nx: int = 4
    ny: int = 4
    spacing_wavelengths: float = 0.5
    frequency_hz: float = 30e9


@dataclass
class ModelSection:
    regime: str = "far"
    L: int = 4
    power: float = DEFAULT_POWER
    positivity_mode: str = "off"
    rho: float = 0.8


@dataclass
class SampleEntry:
    type: str = "focal"
    weight: float = 1.0
    desired: Optional[float] = None
    theta_deg: Optional[float] = None
    phi_deg: Optional[float] = None
    x: Optional[float] = None
    y: Optional[float] = None
    z: Optional[float] = None


@dataclass
class ScenarioFile:
    array: ArraySection = field(default_factory=ArraySection)
    model: ModelSection = field(default_factory=ModelSection)
    samples: list[SampleEntry] = field(default_factory=list)
    solver: dict[str, Any] = field(default_factory=dict)
    title: str = ""

    def to_scenario(self) -> Scenario:
        geom = ArrayGeometry.from_frequency(self.array.nx, self.array.ny, self.array.frequency_hz,
                                            self.array.spacing_wavelengths)
        samples = []
        for e in self.samples:
            if self.model.regime == "far":
                target = FarTarget(radians(e.theta_deg), radians(e.phi_deg))
            else:
                target = NearTarget(e.x, e.y, e.z)
            desired = 0.0 if e.desired is None else e.desired
            samples.append(Sample(target, desired, e.weight, e.type))
        return Scenario(geom, TruncationSpec(self.model.L), tuple(samples), self.model.power,
                        self.model.regime)

    def to_config(self, **overrides) -> SolverConfig:
        opts = dict(self.solver)
        opts["positivity_mode"] = self.model.positivity_mode
        opts["rho"] = self.model.rho
        opts.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**opts)

    def to_toml(self) -> str:
        doc: dict[str, Any] = {}
        if self.title:
            doc["title"] = self.title
        doc["array"] = asdict(self.array)
        doc["model"] = asdict(self.model)
        if self.solver:
            doc["solver"] = dict(self.solver)
        doc["samples"] = [{k: v for k, v in asdict(s).items() if v is not None} for s in self.samples]
        return tomli_w.dumps(doc)

    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()[:16]


_SOLVER_KEYS = {f.name for f in fields(SolverConfig)} - {"positivity_mode", "rho"}


def _key_line(text: str, key: str, after: int = 0) -> Optional[int]:
    """Line of the first ``key = ...`` assignment below line ``after``."""
    pat = re.compile(rf"^[ \t]*\"?{re.escape(key)}\"?[ \t]*=", re.M)
    for hit in pat.finditer(text):
        line = text.count("\n", 0, hit.start()) + 1
        if line > after:
            return line
    return None


def _section_line(text: str, header: str, occurrence: int = 0) -> Optional[int]:
    pat = re.compile(rf"^[ \t]*{re.escape(header)}[ \t]*$", re.M)
    hits = list(pat.finditer(text))
    if len(hits) > occurrence:
        return text.count("\n", 0, hits[occurrence].start()) + 1
    return None


def _coerce(kind: str, val):
    if isinstance(val, bool):
        return None
    if kind == "int":
        return val if isinstance(val, int) else None
    if kind in ("float", "Optional[float]"):
        return float(val) if isinstance(val, (int, float)) else None
    if kind == "str":
        return val if isinstance(val, str) else None
    raise TypeError(kind)


def _fill(cls, table: dict, text: str, where: str, after: int = 0):
    known = {f.name: f.type for f in fields(cls)}
    out = cls()
    for key, val in table.items():
        if key not in known:
            raise ScenarioError(f"unknown key {key!r} in {where}", _key_line(text, key, after))
        coerced = _coerce(known[key], val)
        if coerced is None:
            raise ScenarioError(f"bad value {val!r} for {key!r} in {where}",
                                _key_line(text, key, after))
        setattr(out, key, coerced)
    return out


def loads(text: str) -> ScenarioFile:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None

    allowed = {"title", "array", "model", "samples", "solver"}
    for key in doc:
        if key not in allowed:
            raise ScenarioError(f"unknown top-level key {key!r}",
                                _section_line(text, f"[{key}]") or _key_line(text, key))
    sf = ScenarioFile(title=doc.get("title", ""))
    sf.array = _fill(ArraySection, doc.get("array", {}), text, "[array]",
                     _section_line(text, "[array]") or 0)
    sf.model = _fill(ModelSection, doc.get("model", {}), text, "[model]",
                     _section_line(text, "[model]") or 0)
    solver = doc.get("solver", {})
    for key in solver:
        if key not in _SOLVER_KEYS:
            raise ScenarioError(f"unknown key {key!r} in [solver]",
                                _key_line(text, key, _section_line(text, "[solver]") or 0))
    sf.solver = dict(solver)

    if sf.model.regime not in ("far", "near"):
        raise ScenarioError(f"regime must be 'far' or 'near', got {sf.model.regime!r}",
                            _key_line(text, "regime"))
    raw = doc.get("samples", [])
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("scenario needs at least one [[samples]] entry")
    for i, entry in enumerate(raw):
        line = _section_line(text, "[[samples]]", i)
        s = _fill(SampleEntry, entry, text, f"sample {i + 1}", line or 0)
        _check_sample(s, sf.model.regime, i, line)
        sf.samples.append(s)
    try:
        sf.to_config()
        sf.to_scenario()
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from None
    return sf


def _check_sample(s: SampleEntry, regime: str, i: int, line: Optional[int]):
    where = f"sample {i + 1}"
    if s.type not in ("focal", "null"):
        raise ScenarioError(f"{where}: type must be 'focal' or 'null'", line)
    if s.type == "focal" and s.desired is None:
        raise ScenarioError(f"{where}: focal samples need 'desired'", line)
    angles = (s.theta_deg, s.phi_deg)
    coords = (s.x, s.y, s.z)
    if regime == "far":
        if None in angles or any(c is not None for c in coords):
            raise ScenarioError(f"{where}: far-field samples take theta_deg and phi_deg only", line)
        if not 0.0 <= s.theta_deg <= 180.0:
            raise ScenarioError(f"{where}: theta_deg must lie in [0, 180]", line)
    elif regime == "near":
        if None in coords or any(a is not None for a in angles):
            raise ScenarioError(f"{where}: near-field samples take x, y, z only", line)


def load(path) -> ScenarioFile:
    return loads(Path(path).read_text())


def dumps(sf: ScenarioFile) -> str:
    return sf.to_toml()


def bundled_path(name: str) -> Path:
    """Path of a bundled default scenario (``"far"`` or ``"near"``)."""
    return Path(str(resources.files("era_beam") / "data" / BUNDLED[name]))


def load_bundled(name: str) -> ScenarioFile:
    return load(bundled_path(name))
