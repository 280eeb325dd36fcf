"""Gravity-wrench simulation for a grasped rigid object.

Models the object-only force-torque reading at a wrist-mounted sensor as a
function of the two free wrist angles, with additive Gaussian sensor noise
and optional in-hand slip, and generates labeled datasets that stand in for
robot data collection.

Frame convention: at the default orientation (0, 0) the gripper points
straight down and the gripper frame coincides with the world frame. A wrist
orientation (theta1, theta2) rotates the gripper by R = Rx(theta1) @ Ry(theta2),
so a world-fixed vector v is seen by the sensor as R.T @ v. The object's
center of mass sits at a fixed offset from the grasp point, expressed in the
gripper frame; the induced torque is offset x force.

All functions are pure given their RNG; per-grasp streams are derived from
(seed, grasp_id) so dataset generation can be fanned out across workers and
merged stably by grasp_id.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import fileio, seeding
from .config import SimSettings

THETA_MAX_DEFAULT = math.pi / 3
MAX_OFFSET_NORM = 0.15
DATASET_FORMAT = "grasp-wrench-dataset-v1"

RECORD_KEYS = (
    "grasp_id", "theta1", "theta2",
    "fx", "fy", "fz", "tx", "ty", "tz",
    "dx", "dy", "dz", "mass_kg",
)


@dataclass(frozen=True)
class WristOrientation:
    """The 2-DOF action: rotations about gripper-frame X then Y, radians."""

    theta1: float
    theta2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2], dtype=float)

    def is_default(self) -> bool:
        return self.theta1 == 0.0 and self.theta2 == 0.0


ORIENTATION_ZERO = WristOrientation(0.0, 0.0)


@dataclass
class RigidGraspScene:
    """Ground truth for one grasp: mass and CoM offset from the grasp point.

    The offset is expressed in the gripper frame at orientation (0, 0),
    where gripper and world axes coincide.
    """

    mass: float
    com_offset_gripper: np.ndarray
    gravity: float = 9.81

    def __post_init__(self):
        self.com_offset_gripper = np.asarray(self.com_offset_gripper, dtype=float)
        if self.com_offset_gripper.shape != (3,):
            raise ValueError("com_offset_gripper must be a 3-vector")
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        norm = float(np.linalg.norm(self.com_offset_gripper))
        if norm > MAX_OFFSET_NORM:
            raise ValueError(
                f"|com_offset_gripper| = {norm:.4f} m exceeds {MAX_OFFSET_NORM} m"
            )


@dataclass
class Wrench:
    """Object-only force-torque reading in the gripper/sensor frame."""

    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=float)
        self.torque = np.asarray(self.torque, dtype=float)
        if self.force.shape != (3,) or self.torque.shape != (3,):
            raise ValueError("force and torque must be 3-vectors")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


@dataclass
class NoiseModel:
    """Per-axis additive Gaussian sensor noise plus optional in-hand slip."""

    sigma_force: float = 0.05
    sigma_torque: float = 0.005
    slip_enabled: bool = False
    slip_prob: float = 0.05
    slip_sigma: float = 0.1

    def __post_init__(self):
        if self.sigma_force < 0 or self.sigma_torque < 0 or self.slip_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.slip_prob <= 1.0:
            raise ValueError(f"slip_prob must be in [0, 1], got {self.slip_prob}")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(sigma_force=0.0, sigma_torque=0.0, slip_enabled=False)


@dataclass
class DatasetRecord:
    grasp_id: int
    orientation: WristOrientation
    wrench: Wrench
    true_offset: np.ndarray
    mass: float

    def __post_init__(self):
        self.true_offset = np.asarray(self.true_offset, dtype=float)


@dataclass
class ObservedWrench:
    """A noisy observation plus the (possibly slipped) offset it was made with."""

    wrench: Wrench
    com_offset_gripper: np.ndarray
    slipped: bool = False


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def check_orientation(o: WristOrientation, theta_max: float = THETA_MAX_DEFAULT) -> None:
    if abs(o.theta1) > theta_max or abs(o.theta2) > theta_max:
        raise ValueError(
            f"orientation ({o.theta1}, {o.theta2}) outside bounds +/-{theta_max}"
        )


def orientation_to_rotation(
    o: WristOrientation, theta_max: float = THETA_MAX_DEFAULT
) -> np.ndarray:
    """Gripper-to-world rotation for a wrist orientation: Rx(t1) @ Ry(t2)."""
    check_orientation(o, theta_max)
    return rotation_x(o.theta1) @ rotation_y(o.theta2)


def gravity_wrench(
    scene: RigidGraspScene,
    o: WristOrientation,
    theta_max: float = THETA_MAX_DEFAULT,
    com_offset: np.ndarray | None = None,
) -> Wrench:
    """Noiseless object-only wrench at the sensor for a wrist orientation.

    Gravity acts at the CoM: force is the world weight vector expressed in
    the gripper frame, torque is offset x force about the grasp point.
    """
    rot = orientation_to_rotation(o, theta_max)
    offset = scene.com_offset_gripper if com_offset is None else com_offset
    weight_world = np.array([0.0, 0.0, -scene.mass * scene.gravity])
    force = rot.T @ weight_world
    torque = np.cross(offset, force)
    return Wrench(force=force, torque=torque)


def observe_wrench(
    scene: RigidGraspScene,
    o: WristOrientation,
    noise: NoiseModel,
    rng: np.random.Generator,
    theta_max: float = THETA_MAX_DEFAULT,
) -> ObservedWrench:
    """Noisy observation; may slip the offset about gripper Z first.

    Slip is Bernoulli(slip_prob) per re-orientation (never at (0, 0)); when it
    fires the offset rotates about the gripper Z axis by N(0, slip_sigma) and
    the mutated offset is returned so the caller can track the new truth.
    """
    check_orientation(o, theta_max)
    offset = scene.com_offset_gripper.copy()
    slipped = False
    if noise.slip_enabled and not o.is_default():
        if rng.random() < noise.slip_prob:
            angle = rng.normal(0.0, noise.slip_sigma)
            offset = rotation_z(angle) @ offset
            slipped = True
    clean = gravity_wrench(scene, o, theta_max, com_offset=offset)
    force = clean.force + rng.normal(0.0, noise.sigma_force, size=3)
    torque = clean.torque + rng.normal(0.0, noise.sigma_torque, size=3)
    return ObservedWrench(Wrench(force, torque), offset, slipped)


def sample_orientation(
    rng: np.random.Generator, theta_max: float = THETA_MAX_DEFAULT
) -> WristOrientation:
    t1, t2 = rng.uniform(-theta_max, theta_max, size=2)
    return WristOrientation(float(t1), float(t2))


def generate_grasp_trial(
    scene: RigidGraspScene,
    n_orientations: int,
    noise: NoiseModel,
    rng: np.random.Generator,
    grasp_id: int = 0,
    theta_max: float = THETA_MAX_DEFAULT,
) -> list[DatasetRecord]:
    """One record at (0, 0) plus ``n_orientations`` at random orientations.

    Records where slip fired are discarded (their label would be stale) and
    the object is treated as re-settled, so all kept records of a grasp share
    the same true offset.
    """
    if n_orientations < 1:
        raise ValueError(f"n_orientations must be >= 1, got {n_orientations}")

    def record(o: WristOrientation) -> DatasetRecord | None:
        obs = observe_wrench(scene, o, noise, rng, theta_max)
        if obs.slipped:
            return None
        return DatasetRecord(
            grasp_id=grasp_id,
            orientation=o,
            wrench=obs.wrench,
            true_offset=scene.com_offset_gripper.copy(),
            mass=scene.mass,
        )

    records = [record(ORIENTATION_ZERO)]
    for _ in range(n_orientations):
        records.append(record(sample_orientation(rng, theta_max)))
    return [r for r in records if r is not None]


def grasp_rng(seed: int, grasp_id: int) -> np.random.Generator:
    return seeding.derive_rng("grasp-trial", seed, grasp_id)


def sample_scene(settings: SimSettings, rng: np.random.Generator) -> RigidGraspScene:
    mass = float(rng.uniform(*settings.mass_range))
    offset = np.array([
        rng.uniform(-settings.offset_xy_max, settings.offset_xy_max),
        rng.uniform(-settings.offset_xy_max, settings.offset_xy_max),
        rng.uniform(-settings.offset_z_max, settings.offset_z_max),
    ])
    return RigidGraspScene(mass=mass, com_offset_gripper=offset, gravity=settings.gravity)


def noise_from_settings(settings: SimSettings) -> NoiseModel:
    n = settings.noise
    return NoiseModel(
        sigma_force=n.sigma_force,
        sigma_torque=n.sigma_torque,
        slip_enabled=n.slip_enabled,
        slip_prob=n.slip_prob,
        slip_sigma=n.slip_sigma,
    )


def _record_line(r: DatasetRecord) -> str:
    return fileio.canonical_json({
        "grasp_id": int(r.grasp_id),
        "theta1": float(r.orientation.theta1),
        "theta2": float(r.orientation.theta2),
        "fx": float(r.wrench.force[0]),
        "fy": float(r.wrench.force[1]),
        "fz": float(r.wrench.force[2]),
        "tx": float(r.wrench.torque[0]),
        "ty": float(r.wrench.torque[1]),
        "tz": float(r.wrench.torque[2]),
        "dx": float(r.true_offset[0]),
        "dy": float(r.true_offset[1]),
        "dz": float(r.true_offset[2]),
        "mass_kg": float(r.mass),
    })


def generate_dataset(
    settings: SimSettings,
    seed: int,
    path,
    header_config: dict | None = None,
) -> int:
    """Simulate all grasp trials and write one JSON record per line.

    The first line is a header carrying the generator config and seed.
    Byte-identical for identical (settings, seed). Returns the record count.
    """
    header = fileio.canonical_json({
        "format": DATASET_FORMAT,
        "seed": int(seed),
        "config": header_config if header_config is not None else _to_plain_sim(settings),
    })
    noise = noise_from_settings(settings)
    lines = [header]
    count = 0
    for gid in range(settings.grasps):
        rng = grasp_rng(seed, gid)
        scene = sample_scene(settings, rng)
        trial = generate_grasp_trial(
            scene, settings.orientations_per_grasp, noise, rng,
            grasp_id=gid, theta_max=settings.theta_max,
        )
        lines.extend(_record_line(r) for r in trial)
        count += len(trial)
    fileio.atomic_write_text(path, "\n".join(lines) + "\n")
    return count


def _to_plain_sim(settings: SimSettings) -> dict:
    d = asdict(settings)
    d["mass_range"] = list(d["mass_range"])
    return d


def load_dataset(path) -> tuple[dict, list[DatasetRecord]]:
    """Read a dataset file back into (header, records)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    if header.get("format") != DATASET_FORMAT:
        raise ValueError(f"{path}: unrecognized dataset format {header.get('format')!r}")
    records = []
    for line in lines[1:]:
        d = json.loads(line)
        records.append(DatasetRecord(
            grasp_id=int(d["grasp_id"]),
            orientation=WristOrientation(float(d["theta1"]), float(d["theta2"])),
            wrench=Wrench(
                force=[d["fx"], d["fy"], d["fz"]],
                torque=[d["tx"], d["ty"], d["tz"]],
            ),
            true_offset=[d["dx"], d["dy"], d["dz"]],
            mass=float(d["mass_kg"]),
        ))
    return header, records


def records_to_arrays(records: list[DatasetRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into model inputs (wrench, orientation) and targets (offset)."""
    x = np.array([
        np.concatenate([r.wrench.as_array(), r.orientation.as_array()])
        for r in records
    ])
    y = np.array([r.true_offset for r in records])
    return x, y
