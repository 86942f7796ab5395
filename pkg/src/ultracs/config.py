"""Run configuration: TOML schema, strict validation, verbatim echo.

Every command reads one config file.  Unknown keys anywhere are rejected
rather than ignored, so a typo cannot silently fall back to a default.
The raw file text is kept so runs can echo their exact input alongside
the outputs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, get_args, get_origin, get_type_hints

try:
    import tomllib
except ImportError:  # 3.10 fallback
    import tomli as tomllib


class ConfigError(Exception):
    """Invalid or malformed run configuration."""


def _coerce(value: Any, hint: Any, where: str) -> Any:
    origin = get_origin(hint)
    if origin is list:
        (inner,) = get_args(hint)
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return [_coerce(v, inner, where) for v in value]
    if origin is tuple:
        inner = get_args(hint)
        if not isinstance(value, list) or len(value) != len(inner):
            raise ConfigError(f"{where}: expected a list of {len(inner)} values")
        return tuple(_coerce(v, h, where) for v, h in zip(value, inner))
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported config field type {hint!r}")


def _from_mapping(cls: type, data: Any, where: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table")
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], f"{where}.{f.name}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class SceneConfig:
    width_m: float = 5.0
    height_m: float = 5.0
    nx: int = 40
    ny: int = 40
    distance_m: float = 10.0
    kind: str = "shapes"  # shapes | bars | constant, ignored when image is set
    image: str = ""  # path to an 8-bit PGM target
    seed: int = 0


@dataclass(frozen=True)
class SensorConfig:
    count: int = 1
    t_res: float = 20e-12
    region_side_m: float = 0.1
    region_center: tuple[float, float] = (0.0, 0.0)
    method: str = "auto"  # grid | lloyd | auto
    seed: int = 0
    positions_file: str = ""  # placement CSV from a design run


@dataclass(frozen=True)
class PatternConfig:
    kind: str = "optimized"  # optimized | hadamard | bernoulli | gaussian | all_ones
    count: int = 50
    max_iter: int = 2000
    tol: float = 1e-7
    seed: int = 0
    file: str = ""  # pattern blob from a design run


@dataclass(frozen=True)
class NoiseConfig:
    snr_db: float = 60.0
    noiseless: bool = False
    seeds: list[int] = field(default_factory=lambda: [0])


@dataclass(frozen=True)
class ReconConfig:
    method: str = "tv"  # tv | pinv
    reg_mu: float = 2.0**13
    beta: float = 32.0
    max_outer: int = 300
    tol: float = 1e-6


@dataclass(frozen=True)
class TransportSweepConfig:
    t_res_list: list[float] = field(default_factory=lambda: [20e-12, 50e-12, 100e-12])
    distance_list: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0])


@dataclass(frozen=True)
class DesignSweepConfig:
    k_list: list[int] = field(default_factory=lambda: [1, 2])
    t_res_list: list[float] = field(default_factory=lambda: [20e-12, 50e-12, 100e-12])
    m_list: list[int] = field(default_factory=lambda: [20, 50])
    area_side_list: list[float] = field(default_factory=lambda: [0.1])
    optimize: bool = True


@dataclass(frozen=True)
class MinPatternsConfig:
    k_list: list[int] = field(default_factory=lambda: [1, 2])
    t_res_list: list[float] = field(default_factory=lambda: [20e-12])
    ssim_target: float = 0.95
    psnr_target: float = 40.0
    m_lo: int = 1
    m_hi: int = 400


@dataclass(frozen=True)
class RunConfig:
    jobs: int = 1
    single_pixel: bool = False  # classic bucket-detector mode for cmd_image


_SECTIONS = {
    "scene": ("scene", SceneConfig),
    "sensors": ("sensors", SensorConfig),
    "patterns": ("patterns", PatternConfig),
    "noise": ("noise", NoiseConfig),
    "recon": ("recon", ReconConfig),
    "transport": ("transport", TransportSweepConfig),
    "design": ("design", DesignSweepConfig),
    "min_patterns": ("min_patterns", MinPatternsConfig),
    "run": ("run", RunConfig),
}


@dataclass
class ExperimentConfig:
    """Validated view of one run's config file, plus its verbatim text."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    patterns: PatternConfig = field(default_factory=PatternConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    recon: ReconConfig = field(default_factory=ReconConfig)
    transport: TransportSweepConfig = field(default_factory=TransportSweepConfig)
    design: DesignSweepConfig = field(default_factory=DesignSweepConfig)
    min_patterns: MinPatternsConfig = field(default_factory=MinPatternsConfig)
    run: RunConfig = field(default_factory=RunConfig)
    raw_text: str = ""

    @classmethod
    def from_dict(cls, data: dict[str, Any], raw_text: str = "") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a table")
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown section(s) {sorted(unknown)}")
        kwargs: dict[str, Any] = {"raw_text": raw_text}
        for key, (attr, section_cls) in _SECTIONS.items():
            if key in data:
                kwargs[attr] = _from_mapping(section_cls, data[key], key)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = tomllib.loads(raw)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, raw)
