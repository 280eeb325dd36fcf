"""Scoring candidate second rotations and picking the best one.

A small deterministic MLP regresses the error a second measurement would
leave, given the first estimate's mean and std and a proposed orientation.
Labels come from replaying the regressor over every recorded orientation of
each training grasp. Selection is a plain grid search over the bounded
2-D action space: cheap, exhaustive, and immune to local minima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytical import ComEstimate
from .bnn import NormalizationStats, PosteriorSamples, predict_batch, wrench_input
from .config import ActionSettings
from .fusion import fuse
from .mlp import MlpArchitecture, TrainResult, forward, train_mse
from .sim import THETA_MAX_DEFAULT, DatasetRecord, WristOrientation

SCORE_INPUT_DIM = 8  # prior mean (3) + prior std (3) + proposed action (2)


@dataclass
class ActionScoreExample:
    prior_mean: np.ndarray
    prior_std: np.ndarray
    action: WristOrientation
    score: float

    def __post_init__(self):
        self.prior_mean = np.asarray(self.prior_mean, dtype=float)
        self.prior_std = np.asarray(self.prior_std, dtype=float)
        if self.score < 0:
            raise ValueError(f"score must be >= 0, got {self.score}")

    def features(self) -> np.ndarray:
        return np.concatenate([self.prior_mean, self.prior_std, self.action.as_array()])


@dataclass
class ActionScorerModel:
    architecture: MlpArchitecture
    weights: np.ndarray
    normalization: NormalizationStats

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)


def make_training_labels(
    bnn: PosteriorSamples,
    records: list[DatasetRecord],
    label_on_fused: bool = False,
) -> list[ActionScoreExample]:
    """One scored example per (grasp, non-default orientation) record.

    The prior is the regressor's output at the grasp's (0, 0) record; each
    other record is scored by the error the regressor leaves at that
    orientation (optionally after fusing with the prior).
    """
    by_grasp: dict[int, list[DatasetRecord]] = {}
    for r in records:
        by_grasp.setdefault(r.grasp_id, []).append(r)

    inputs = np.array([
        wrench_input(r.wrench, r.orientation)
        for grasp in sorted(by_grasp) for r in by_grasp[grasp]
    ])
    means, stds = predict_batch(bnn, inputs)

    examples: list[ActionScoreExample] = []
    pos = 0
    for grasp in sorted(by_grasp):
        group = by_grasp[grasp]
        defaults = [i for i, r in enumerate(group) if r.orientation.is_default()]
        if len(defaults) != 1:
            raise ValueError(
                f"grasp {grasp}: expected exactly one (0, 0) record, found {len(defaults)}"
            )
        prior_mean = means[pos + defaults[0]]
        prior_std = stds[pos + defaults[0]]
        prior = ComEstimate(mean=prior_mean, std=prior_std)
        for i, r in enumerate(group):
            if i == defaults[0]:
                continue
            second = ComEstimate(mean=means[pos + i], std=stds[pos + i])
            estimate = fuse(prior, second).mean if label_on_fused else second.mean
            score = float(np.linalg.norm(estimate - r.true_offset))
            examples.append(ActionScoreExample(
                prior_mean=prior_mean,
                prior_std=prior_std,
                action=r.orientation,
                score=score,
            ))
        pos += len(group)
    return examples


def train_action_scorer(
    examples: list[ActionScoreExample],
    settings: ActionSettings,
    rng: np.random.Generator,
) -> tuple[ActionScorerModel, TrainResult]:
    """MSE regression of score on (prior mean, prior std, action)."""
    if not examples:
        raise ValueError("cannot train on an empty example set")
    x = np.array([e.features() for e in examples])
    y = np.array([[e.score] for e in examples])
    norm = NormalizationStats.from_data(x, y)
    arch = MlpArchitecture(SCORE_INPUT_DIM, tuple(settings.hidden_sizes), 1)
    result = train_mse(
        arch, norm.normalize_x(x), norm.normalize_y(y),
        epochs=settings.epochs, lr=settings.lr,
        batch_size=settings.batch_size, rng=rng,
    )
    return ActionScorerModel(arch, result.weights, norm), result


def score_actions(
    model: ActionScorerModel, prior: ComEstimate, actions: np.ndarray
) -> np.ndarray:
    """Predicted error, meters, for each candidate action (n, 2)."""
    actions = np.asarray(actions, dtype=float).reshape(-1, 2)
    if prior.std is None:
        raise ValueError("action scoring needs a prior with a std")
    head = np.concatenate([prior.mean, prior.std])
    x = np.hstack([np.tile(head, (actions.shape[0], 1)), actions])
    out = forward(model.architecture, model.weights, model.normalization.normalize_x(x))
    return model.normalization.denormalize_y(out)[:, 0]


def score_action(
    model: ActionScorerModel, prior: ComEstimate, action: WristOrientation
) -> float:
    return float(score_actions(model, prior, action.as_array()[None, :])[0])


def action_grid(grid_resolution: int, theta_max: float = THETA_MAX_DEFAULT) -> np.ndarray:
    """Regular (resolution^2, 2) grid over the bounded action box."""
    if grid_resolution < 2:
        raise ValueError(f"grid_resolution must be >= 2, got {grid_resolution}")
    axis = np.linspace(-theta_max, theta_max, grid_resolution)
    if grid_resolution % 2 == 1:
        axis[grid_resolution // 2] = 0.0  # keep the rest pose exactly on the grid
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([t1.ravel(), t2.ravel()])


def select_action(
    model: ActionScorerModel,
    prior: ComEstimate,
    grid_resolution: int = 21,
    theta_max: float = THETA_MAX_DEFAULT,
) -> WristOrientation:
    """Grid-search argmin of the predicted score.

    Exact ties break toward the smallest rotation (by norm), then
    lexicographically, so a constant scorer returns the rest pose.
    """
    grid = action_grid(grid_resolution, theta_max)
    scores = score_actions(model, prior, grid)
    best = scores.min()
    tied = np.flatnonzero(scores == best)
    keys = [
        (float(grid[i, 0] ** 2 + grid[i, 1] ** 2), float(grid[i, 0]), float(grid[i, 1]), i)
        for i in tied
    ]
    _, t1, t2, _ = min(keys)
    return WristOrientation(t1, t2)
