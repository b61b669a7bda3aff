"""Experiment configuration: typed defaults plus an INI-style file format.

The file mirrors the config dataclasses section by section:

    [run]
    seed = 0
    workers = 1
    format = both

    [sphere-instability]
    k_list = 1, 2, 4, 8, 16, 32, 64
    kappa_list = 0.5

Unknown sections or keys are a hard error; values are parsed against the
declared field types (scalars or comma-separated lists).
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    workers: int = 1
    out_format: str = "both"  # csv | json | both


@dataclass(frozen=True)
class WeakstarConfig:
    n_list: tuple[int, ...] = tuple(range(1, 51))
    n_theta: int = 129           # odd, so the grid carries an exact equator row
    n_phi: int = 128
    functions: tuple[str, ...] = ("one", "cos2_colat", "sin2_cos2")
    pairing_tol: float = 1e-10
    final_gap_max: float = 0.01


@dataclass(frozen=True)
class SphereInstabilityConfig:
    k_list: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    kappa_list: tuple[float, ...] = (0.5,)
    t_list: tuple[float, ...] = ()       # empty: t = pi / kappa per kappa
    n_scan: tuple[int, ...] = ()         # empty: geometric scan adapted to each k
    block_span: int = 64
    margin: float = 1e-3
    p_list: tuple[float, ...] = (1.0, 2.0, 4.0)
    schedule_slack: float = 1.05
    distance_tol: float = 1e-6
    min_final_distance: float = 1.5
    l1_decay_min: float = 10.0


@dataclass(frozen=True)
class RevolutionConfig:
    profile: str = "cosh"
    a: float = -1.0
    b: float = 1.0
    m_list: tuple[int, ...] = (10, 20, 40, 80)
    n_t: int = 801
    selection: str = "ground"            # ground | ridge
    center: str = "tmin"                 # tmin (min of f) | tmax (max of f)
    window_exponent: float = -0.25
    mass_final_min: float = 0.99
    ratio_lo: float = 3.5
    ratio_hi: float = 4.5


@dataclass(frozen=True)
class FlatSmallPConfig:
    n_list: tuple[int, ...] = (2, 4, 8)
    n_side: int = 128
    length: float = 24.0
    base_radius_fraction: float = 0.25
    p_list: tuple[float, ...] = (1.0, 1.4, 2.0)
    phase_tol: float = 1e-12
    norm_tol: float = 0.01
    fit_samples: int = 5


@dataclass(frozen=True)
class PInftyConfig:
    trials: int = 24
    l_max: int = 24
    degree: int = 8
    n_theta: int = 65
    n_phi: int = 32
    t_min: float = 0.2
    t_max: float = 1.0
    amp_min: float = 0.3
    amp_max: float = 1.5
    tol: float = 1e-8


@dataclass(frozen=True)
class LabConfig:
    run: RunSettings = field(default_factory=RunSettings)
    weakstar: WeakstarConfig = field(default_factory=WeakstarConfig)
    sphere: SphereInstabilityConfig = field(default_factory=SphereInstabilityConfig)
    revolution: RevolutionConfig = field(default_factory=RevolutionConfig)
    flat: FlatSmallPConfig = field(default_factory=FlatSmallPConfig)
    pinfty: PInftyConfig = field(default_factory=PInftyConfig)


_SECTIONS = {
    "run": ("run", RunSettings),
    "weakstar": ("weakstar", WeakstarConfig),
    "sphere-instability": ("sphere", SphereInstabilityConfig),
    "revolution": ("revolution", RevolutionConfig),
    "flat-smallp": ("flat", FlatSmallPConfig),
    "pinfty": ("pinfty", PInftyConfig),
}

_FILE_KEY_ALIASES = {("run", "format"): "out_format"}


def _parse_value(raw: str, hint, where: str):
    raw = raw.strip()
    origin = typing.get_origin(hint)
    if origin is tuple:
        elem = typing.get_args(hint)[0]
        if raw == "":
            return ()
        parts = [p.strip() for p in raw.split(",") if p.strip() != ""]
        try:
            return tuple(elem(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot parse list value {raw!r}") from exc
    try:
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is str:
            return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse value {raw!r}") from exc
    raise ConfigError(f"{where}: unsupported field type {hint!r}")


def load_config(path: str | None = None, **run_overrides) -> LabConfig:
    """Build a LabConfig from defaults, an optional file, and CLI overrides."""
    cfg = LabConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        updates = {}
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(
                    f"{path}: unknown section [{section}]; "
                    f"expected one of {sorted(_SECTIONS)}"
                )
            attr, cls = _SECTIONS[section]
            hints = typing.get_type_hints(cls)
            fields = {f.name for f in dataclasses.fields(cls)}
            kwargs = {}
            for key, raw in parser.items(section):
                name = _FILE_KEY_ALIASES.get((section, key), key)
                if name not in fields:
                    raise ConfigError(
                        f"{path}: unknown key {key!r} in section [{section}]"
                    )
                kwargs[name] = _parse_value(raw, hints[name], f"[{section}] {key}")
            updates[attr] = dataclasses.replace(getattr(cfg, attr), **kwargs)
        cfg = dataclasses.replace(cfg, **updates)
    if run_overrides:
        clean = {k: v for k, v in run_overrides.items() if v is not None}
        if clean:
            cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, **clean))
    _validate(cfg)
    return cfg


def _validate(cfg: LabConfig) -> None:
    if cfg.run.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.run.workers}")
    if cfg.run.out_format not in ("csv", "json", "both"):
        raise ConfigError(f"format must be csv, json, or both, got {cfg.run.out_format!r}")
    if cfg.run.seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if any(n < 1 for n in cfg.weakstar.n_list):
        raise ConfigError("weakstar degrees must be >= 1")
    if cfg.weakstar.n_theta % 2 == 0:
        raise ConfigError("weakstar n_theta must be odd (equator row required)")
    if cfg.weakstar.n_list and cfg.weakstar.n_theta < max(cfg.weakstar.n_list) + 2:
        raise ConfigError("weakstar n_theta too small for the requested degrees")
    if cfg.weakstar.n_list and cfg.weakstar.n_phi < 2 * max(cfg.weakstar.n_list) + 1:
        raise ConfigError("weakstar n_phi too small for the requested degrees")
    unknown = set(cfg.weakstar.functions) - {"one", "cos2_colat", "sin2_cos2"}
    if unknown:
        raise ConfigError(f"unknown weakstar test functions: {sorted(unknown)}")
    if any(k < 1 for k in cfg.sphere.k_list):
        raise ConfigError("shrink indices must be >= 1")
    if any(not 0 < kap <= 1 for kap in cfg.sphere.kappa_list):
        raise ConfigError("cutoff amplitudes must lie in (0, 1]")
    if cfg.sphere.block_span < 2:
        raise ConfigError("block span must be >= 2")
    if cfg.revolution.profile not in ("cosh", "sech", "constant"):
        raise ConfigError(f"unknown revolution profile {cfg.revolution.profile!r}")
    if cfg.revolution.selection not in ("ground", "ridge"):
        raise ConfigError(f"unknown mode selection {cfg.revolution.selection!r}")
    if cfg.revolution.center not in ("tmin", "tmax"):
        raise ConfigError(f"unknown window center policy {cfg.revolution.center!r}")
    if not cfg.revolution.b > cfg.revolution.a:
        raise ConfigError("revolution interval must satisfy a < b")
    if any(n < 1 for n in cfg.flat.n_list):
        raise ConfigError("flat scale indices must be >= 1")
    if not 0 < cfg.flat.base_radius_fraction <= 1.0 / 3.0:
        raise ConfigError(
            "flat base radius fraction must lie in (0, 1/3] so scaled bumps "
            "can fit the box"
        )
    if cfg.pinfty.trials < 1:
        raise ConfigError("pinfty needs at least one trial")
    if cfg.pinfty.n_theta < cfg.pinfty.l_max + 1:
        raise ConfigError("pinfty n_theta too small for l_max")
