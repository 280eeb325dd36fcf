"""Run configuration: one YAML file drives every command.

Defaults are the desk-scale settings (full pipeline in minutes on a laptop);
``large_config()`` switches to the full-scale network sizes and dataset
counts. Configs round-trip losslessly through YAML and are embedded in every
artifact together with the seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import yaml

from .errors import ConfigError


@dataclass
class NoiseSettings:
    sigma_force: float = 0.05
    sigma_torque: float = 0.005
    slip_enabled: bool = False
    slip_prob: float = 0.05
    slip_sigma: float = 0.1


@dataclass
class SimSettings:
    grasps: int = 50
    orientations_per_grasp: int = 40
    mass_range: tuple = (0.127, 0.585)
    offset_xy_max: float = 0.075
    offset_z_max: float = 0.08
    theta_max: float = math.pi / 3
    gravity: float = 9.81
    noise: NoiseSettings = field(default_factory=NoiseSettings)


@dataclass
class BnnSettings:
    hidden_sizes: tuple = (32, 16)
    map_epochs: int = 200
    map_lr: float = 1e-3
    batch_size: int = 64
    samples: int = 200
    warmup: int = 50
    prior_std: float = 0.5
    obs_sigma_scale: float = 1.0
    target_accept: float = 0.8
    max_tree_depth: int = 10


@dataclass
class ActionSettings:
    hidden_sizes: tuple = (64, 64, 32)
    epochs: int = 200
    lr: float = 1e-4
    batch_size: int = 64
    label_on_fused: bool = False


@dataclass
class EvalSettings:
    scenes: int = 20
    episodes_per_scene: int = 5
    grid_resolution: int = 21
    force_floor: float = 0.1


@dataclass
class OodSettings:
    masses: tuple = (0.0434, 0.2446, 0.4462, 0.6481)
    offset: tuple = (0.03, -0.02, 0.04)
    episodes_per_mass: int = 10


@dataclass
class RunConfig:
    seed: int = 0
    sim: SimSettings = field(default_factory=SimSettings)
    bnn: BnnSettings = field(default_factory=BnnSettings)
    action: ActionSettings = field(default_factory=ActionSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    ood: OodSettings = field(default_factory=OodSettings)


def desk_config() -> RunConfig:
    return RunConfig()


def large_config() -> RunConfig:
    """Full-scale preset: big networks, 204 grasps x 100 orientations."""
    cfg = RunConfig()
    cfg.sim.grasps = 204
    cfg.sim.orientations_per_grasp = 100
    cfg.bnn.hidden_sizes = (256, 128, 64)
    cfg.bnn.map_epochs = 500
    cfg.bnn.samples = 1000
    cfg.bnn.warmup = 200
    cfg.action.hidden_sizes = (1024, 1024, 512, 64)
    cfg.action.epochs = 500
    return cfg


_PRESETS = {"desk": desk_config, "large": large_config}


def preset_config(name: str) -> RunConfig:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None


def _to_plain(obj):
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [_to_plain(v) for v in obj]
    return obj


def to_dict(cfg: RunConfig) -> dict:
    return _to_plain(cfg)


def _fill(obj, data: dict, path: str) -> None:
    """Assign flat keys from ``data`` onto dataclass ``obj``, strict on names."""
    known = {f.name for f in fields(obj)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    for name, value in data.items():
        current = getattr(obj, name)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}.{name}: expected a mapping")
            _fill(current, value, f"{path}.{name}")
        elif isinstance(current, tuple):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{path}.{name}: expected a list")
            setattr(obj, name, tuple(value))
        else:
            setattr(obj, name, value)


def from_dict(data: dict) -> RunConfig:
    if data is None:
        return RunConfig()
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping at top level")
    cfg = RunConfig()
    _fill(cfg, data, "config")
    cfg.seed = int(cfg.seed)
    return cfg


def to_yaml(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=True, default_flow_style=False)


def from_yaml(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid YAML: {e}") from None
    return from_dict(data)


def load(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return from_yaml(fh.read())


def validate(cfg: RunConfig) -> None:
    """Raise ConfigError naming the offending field on any bad range."""
    sim, bnn, act, ev, ood = cfg.sim, cfg.bnn, cfg.action, cfg.evaluation, cfg.ood
    if sim.grasps < 0:
        raise ConfigError(f"sim.grasps: must be >= 0, got {sim.grasps}")
    if sim.orientations_per_grasp < 1:
        raise ConfigError(
            f"sim.orientations_per_grasp: must be >= 1, got {sim.orientations_per_grasp}"
        )
    lo, hi = sim.mass_range
    if lo > hi:
        raise ConfigError(f"sim.mass_range: min {lo} > max {hi}")
    if lo <= 0:
        raise ConfigError(f"sim.mass_range: bounds must be positive, got {sim.mass_range}")
    if sim.offset_xy_max <= 0 or sim.offset_z_max <= 0:
        raise ConfigError("sim.offset_xy_max/offset_z_max: must be positive")
    if not (0.0 < sim.theta_max <= math.pi):
        raise ConfigError(f"sim.theta_max: must be in (0, pi], got {sim.theta_max}")
    if sim.gravity <= 0:
        raise ConfigError(f"sim.gravity: must be positive, got {sim.gravity}")
    n = sim.noise
    if n.sigma_force < 0 or n.sigma_torque < 0:
        raise ConfigError("sim.noise.sigma_force/sigma_torque: must be >= 0")
    if not (0.0 <= n.slip_prob <= 1.0):
        raise ConfigError(f"sim.noise.slip_prob: must be in [0, 1], got {n.slip_prob}")
    if n.slip_sigma < 0:
        raise ConfigError(f"sim.noise.slip_sigma: must be >= 0, got {n.slip_sigma}")
    for label, sizes in (("bnn.hidden_sizes", bnn.hidden_sizes),
                         ("action.hidden_sizes", act.hidden_sizes)):
        if not sizes or any(int(s) < 1 for s in sizes):
            raise ConfigError(f"{label}: all layer sizes must be >= 1, got {sizes}")
    if bnn.samples < 1:
        raise ConfigError(f"bnn.samples: must be >= 1, got {bnn.samples}")
    if bnn.warmup < 0:
        raise ConfigError(f"bnn.warmup: must be >= 0, got {bnn.warmup}")
    if bnn.prior_std <= 0:
        raise ConfigError(f"bnn.prior_std: must be positive, got {bnn.prior_std}")
    if bnn.obs_sigma_scale <= 0:
        raise ConfigError(f"bnn.obs_sigma_scale: must be positive, got {bnn.obs_sigma_scale}")
    if not (0.0 < bnn.target_accept < 1.0):
        raise ConfigError(f"bnn.target_accept: must be in (0, 1), got {bnn.target_accept}")
    if bnn.max_tree_depth < 1:
        raise ConfigError(f"bnn.max_tree_depth: must be >= 1, got {bnn.max_tree_depth}")
    for label, epochs in (("bnn.map_epochs", bnn.map_epochs), ("action.epochs", act.epochs)):
        if epochs < 1:
            raise ConfigError(f"{label}: must be >= 1, got {epochs}")
    for label, lr in (("bnn.map_lr", bnn.map_lr), ("action.lr", act.lr)):
        if lr <= 0:
            raise ConfigError(f"{label}: must be positive, got {lr}")
    for label, bs in (("bnn.batch_size", bnn.batch_size), ("action.batch_size", act.batch_size)):
        if bs < 1:
            raise ConfigError(f"{label}: must be >= 1, got {bs}")
    if ev.grid_resolution < 2:
        raise ConfigError(f"evaluation.grid_resolution: must be >= 2, got {ev.grid_resolution}")
    if ev.scenes < 1 or ev.episodes_per_scene < 1:
        raise ConfigError("evaluation.scenes/episodes_per_scene: must be >= 1")
    if ev.force_floor <= 0:
        raise ConfigError(f"evaluation.force_floor: must be positive, got {ev.force_floor}")
    if not ood.masses or any(m <= 0 for m in ood.masses):
        raise ConfigError(f"ood.masses: must be positive, got {ood.masses}")
    if len(ood.offset) != 3:
        raise ConfigError(f"ood.offset: expected 3 components, got {len(ood.offset)}")
    if ood.episodes_per_mass < 1:
        raise ConfigError(f"ood.episodes_per_mass: must be >= 1, got {ood.episodes_per_mass}")
