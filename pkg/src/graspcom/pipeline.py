"""End-to-end estimation episodes and the paired benchmark loop.

An episode queries a wrench source — first at the rest pose (0, 0), then
(for two-measurement methods) at one more orientation — and turns the
readings into a CoM estimate. The source abstracts over the simulator so the
same runners can later drive hardware; per-orientation noise streams derive
from (seed, episode id, orientation bits), which makes method comparisons
paired: every method sees the identical (0, 0) reading in a given episode.

Methods:
  active         two measurements, second orientation picked by the scorer,
                 estimates fused by inverse variance
  random-rotate  same, but the second orientation is drawn uniformly
  one-grasp      single measurement, regressor only
  analytical     single measurement, closed-form solution (z reported as 0)
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .actions import ActionScorerModel, select_action
from .analytical import ComEstimate, solve_com_analytical
from .bnn import PosteriorSamples, predict
from .fusion import fuse
from .sim import (
    ORIENTATION_ZERO,
    THETA_MAX_DEFAULT,
    NoiseModel,
    RigidGraspScene,
    Wrench,
    WristOrientation,
    observe_wrench,
)

__all__ = [
    "EpisodeResult", "SimulatedWrenchSource", "observation_rng", "fuse",
    "run_active", "run_one_grasp", "run_random_rotate", "run_analytical",
    "evaluate",
]


def observation_rng(base_seed: int, episode_id: int, o: WristOrientation) -> np.random.Generator:
    """Noise stream for one observation, a pure function of the orientation."""
    return seeding.derive_rng(
        "observe", base_seed, episode_id,
        seeding.float_bits(o.theta1), seeding.float_bits(o.theta2),
    )


class SimulatedWrenchSource:
    """Episode-scoped oracle over one simulated scene.

    Stateful: slip permanently rotates the hidden offset, so later queries
    (and the reported ground truth) see the moved CoM. Episodes must open
    with the rest pose (0, 0). Single-threaded, one episode per instance.
    """

    def __init__(
        self,
        scene: RigidGraspScene,
        noise: NoiseModel,
        base_seed: int,
        episode_id: int,
        theta_max: float = THETA_MAX_DEFAULT,
    ):
        self._scene = copy.deepcopy(scene)
        self._noise = noise
        self._base_seed = base_seed
        self._episode_id = episode_id
        self._theta_max = theta_max
        self.n_queries = 0
        self.slips = 0

    @property
    def true_offset(self) -> np.ndarray:
        return self._scene.com_offset_gripper.copy()

    def observe(self, o: WristOrientation) -> Wrench:
        if self.n_queries == 0 and not o.is_default():
            raise ValueError("the first observation of an episode must be at (0, 0)")
        rng = observation_rng(self._base_seed, self._episode_id, o)
        obs = observe_wrench(self._scene, o, self._noise, rng, self._theta_max)
        if obs.slipped:
            self._scene.com_offset_gripper = obs.com_offset_gripper.copy()
            self.slips += 1
        self.n_queries += 1
        return obs.wrench


@dataclass
class EpisodeResult:
    method: str
    estimate: ComEstimate
    true_offset: np.ndarray
    abs_errors: np.ndarray
    actions: list = field(default_factory=list)

    def __post_init__(self):
        self.true_offset = np.asarray(self.true_offset, dtype=float)
        self.abs_errors = np.asarray(self.abs_errors, dtype=float)

    @property
    def total_error(self) -> float:
        return float(np.linalg.norm(self.estimate.mean - self.true_offset))


def _finish(method: str, source, estimate: ComEstimate, actions: list) -> EpisodeResult:
    truth = source.true_offset
    return EpisodeResult(
        method=method,
        estimate=estimate,
        true_offset=truth,
        abs_errors=np.abs(estimate.mean - truth),
        actions=actions,
    )


def _predict_estimate(bnn: PosteriorSamples, wrench: Wrench, o: WristOrientation) -> ComEstimate:
    pd = predict(bnn, wrench, o)
    return ComEstimate(mean=pd.mean, std=pd.std)


def run_active(
    source,
    bnn: PosteriorSamples,
    scorer: ActionScorerModel,
    grid_resolution: int = 21,
    theta_max: float = THETA_MAX_DEFAULT,
) -> EpisodeResult:
    """Observe at rest, pick the best-scored rotation, observe again, fuse."""
    w0 = source.observe(ORIENTATION_ZERO)
    prior = _predict_estimate(bnn, w0, ORIENTATION_ZERO)
    action = select_action(scorer, prior, grid_resolution, theta_max)
    w1 = source.observe(action)
    second = _predict_estimate(bnn, w1, action)
    return _finish("active", source, fuse(prior, second), [ORIENTATION_ZERO, action])


def run_one_grasp(source, bnn: PosteriorSamples) -> EpisodeResult:
    w0 = source.observe(ORIENTATION_ZERO)
    prior = _predict_estimate(bnn, w0, ORIENTATION_ZERO)
    return _finish("one-grasp", source, prior, [ORIENTATION_ZERO])


def run_random_rotate(
    source,
    bnn: PosteriorSamples,
    rng: np.random.Generator,
    theta_max: float = THETA_MAX_DEFAULT,
) -> EpisodeResult:
    """Like run_active but the second orientation is uniform over the bounds."""
    w0 = source.observe(ORIENTATION_ZERO)
    prior = _predict_estimate(bnn, w0, ORIENTATION_ZERO)
    t1, t2 = rng.uniform(-theta_max, theta_max, size=2)
    action = WristOrientation(float(t1), float(t2))
    w1 = source.observe(action)
    second = _predict_estimate(bnn, w1, action)
    return _finish("random-rotate", source, fuse(prior, second), [ORIENTATION_ZERO, action])


def run_analytical(source, force_floor: float = 0.1) -> EpisodeResult:
    """Closed-form solution at the rest pose; the z component is reported 0."""
    w0 = source.observe(ORIENTATION_ZERO)
    estimate = solve_com_analytical(w0, force_floor=force_floor)
    return _finish("analytical", source, estimate, [ORIENTATION_ZERO])


def action_rng(base_seed: int, episode_id: int) -> np.random.Generator:
    """Stream for random-action draws, independent of observation noise."""
    return seeding.derive_rng("action-draw", base_seed, episode_id)


def evaluate(
    methods: dict,
    scenes: list,
    episodes_per_scene: int,
    base_seed: int,
    noise: NoiseModel,
    theta_max: float = THETA_MAX_DEFAULT,
    metadata: dict | None = None,
):
    """Run every method over identical episode seeds and collect a report.

    ``methods`` maps a name to a runner ``fn(source, rng) -> EpisodeResult``.
    Episode seeds derive from (base_seed, episode_id); each method gets its
    own source instance so slip state never leaks between methods, while the
    shared (0, 0) noise stream keeps the comparison paired.
    """
    from .report import EpisodeRow, EvaluationReport

    if not scenes:
        raise ValueError("evaluate needs at least one scene")
    if episodes_per_scene < 1:
        raise ValueError("episodes_per_scene must be >= 1")

    rows = []
    for scene_id, scene in enumerate(scenes):
        for ep in range(episodes_per_scene):
            episode_id = scene_id * episodes_per_scene + ep
            for name, runner in methods.items():
                source = SimulatedWrenchSource(
                    scene, noise, base_seed, episode_id, theta_max)
                result = runner(source, action_rng(base_seed, episode_id))
                rows.append(EpisodeRow.from_result(
                    result, name, scene_id, episode_id, scene.mass))
    meta = {
        "paired": "methods share observation noise at (0,0) within each episode",
        "scenes": len(scenes),
        "episodes_per_scene": episodes_per_scene,
        "methods": list(methods),
        "base_seed": base_seed,
    }
    if metadata:
        meta.update(metadata)
    return EvaluationReport(rows=rows, metadata=meta)
