"""Bayesian wrench-to-offset regression with calibrated per-axis uncertainty.

An 8-input (wrench + orientation), 3-output rectifier MLP is first fit by
minibatch Adam on standardized data, then a posterior over all weights plus
per-axis observation noise is drawn with the No-U-Turn sampler. The log
posterior combines a per-axis Gaussian likelihood with sampled noise stds, a
Gaussian prior on weights centered at the pretrained point, and a half-normal
prior on the noise stds; the sampler works in an unconstrained space where
the noise stds enter through their logs.

Prediction averages the ensemble and reports, per axis,
sqrt(between-sample variance + mean squared observation noise), so the
reported std keeps a noise floor even where the ensemble agrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nuts
from .config import BnnSettings
from .errors import NumericalError
from .mlp import MlpArchitecture, TrainResult, backprop, forward, forward_cached, train_mse
from .sim import Wrench, WristOrientation

INPUT_DIM = 8
OUTPUT_DIM = 3
PREDICTIVE_STD_FLOOR = 1e-6
_RMSE_FLOOR = 1e-3  # keeps log(obs sigma) finite when the fit is near perfect


@dataclass
class NormalizationStats:
    """Per-dimension z-score statistics captured from the training set."""

    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    def __post_init__(self):
        for name in ("input_mean", "input_std", "output_mean", "output_std"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.input_std <= 0) or np.any(self.output_std <= 0):
            raise ValueError("normalization stds must be positive")

    @classmethod
    def from_data(cls, x: np.ndarray, y: np.ndarray) -> "NormalizationStats":
        def stats(a):
            mean = a.mean(axis=0)
            std = a.std(axis=0)
            return mean, np.where(std > 1e-12, std, 1.0)

        xm, xs = stats(np.asarray(x, dtype=float))
        ym, ys = stats(np.asarray(y, dtype=float))
        return cls(xm, xs, ym, ys)

    def normalize_x(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.input_mean) / self.input_std

    def normalize_y(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.output_mean) / self.output_std

    def denormalize_y(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.output_std + self.output_mean


@dataclass
class WeightPrior:
    """Gaussian prior on weights around a center, half-normal on noise stds."""

    center: np.ndarray
    std: float = 0.5
    obs_sigma_scale: float = 1.0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.std <= 0 or self.obs_sigma_scale <= 0:
            raise ValueError("prior scales must be positive")


@dataclass
class PredictiveDistribution:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if not np.all(self.std > 0):
            raise ValueError("predictive std must be positive elementwise")


@dataclass
class PosteriorSamples:
    """Weight ensemble plus everything needed to run it on raw inputs."""

    architecture: MlpArchitecture
    normalization: NormalizationStats
    samples: np.ndarray            # (S, n_params)
    obs_sigma_samples: np.ndarray  # (S, 3), normalized target units
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.obs_sigma_samples = np.atleast_2d(
            np.asarray(self.obs_sigma_samples, dtype=float))
        if self.samples.shape[0] < 1:
            raise ValueError("need at least one posterior sample")
        if self.samples.shape[1] != self.architecture.n_params:
            raise ValueError("sample length does not match architecture")
        if self.obs_sigma_samples.shape != (self.samples.shape[0], OUTPUT_DIM):
            raise ValueError("obs_sigma_samples must be (n_samples, 3)")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]


def gaussian_loglik(resid: np.ndarray, obs_sigma: np.ndarray) -> float:
    """Sum of per-axis Gaussian log densities for an (n, 3) residual array."""
    if resid.size == 0:
        return 0.0
    n = resid.shape[0]
    var = np.square(obs_sigma)
    ssr = np.sum(np.square(resid), axis=0)
    return float(np.sum(-0.5 * n * np.log(2.0 * np.pi * var) - ssr / (2.0 * var)))


def log_posterior(
    arch: MlpArchitecture,
    prior: WeightPrior,
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    obs_sigma: np.ndarray,
) -> float:
    """Likelihood + weight prior + noise prior at (weights, obs_sigma).

    ``x``/``y`` are normalized; ``obs_sigma`` is per-axis and positive. NaN
    results raise NumericalError; -inf (zero posterior mass) is legitimate.
    """
    obs_sigma = np.asarray(obs_sigma, dtype=float)
    if np.any(obs_sigma <= 0):
        raise ValueError("obs_sigma must be positive elementwise")
    x = np.asarray(x, dtype=float).reshape(-1, arch.input_dim)
    y = np.asarray(y, dtype=float).reshape(-1, arch.output_dim)

    with np.errstate(over="ignore", invalid="ignore"):
        resid = forward(arch, weights, x) - y if x.shape[0] else np.zeros((0, OUTPUT_DIM))
        ll = gaussian_loglik(resid, obs_sigma)
        dw = np.asarray(weights, dtype=float) - prior.center
        lp_w = float(
            -0.5 * np.sum(np.square(dw)) / prior.std ** 2
            - dw.size * 0.5 * math.log(2.0 * math.pi * prior.std ** 2)
        )
        scale = prior.obs_sigma_scale
        lp_sigma = float(np.sum(
            0.5 * math.log(2.0 / math.pi) - math.log(scale)
            - np.square(obs_sigma) / (2.0 * scale ** 2)
        ))
        total = ll + lp_w + lp_sigma
    if math.isnan(total):
        raise NumericalError("log posterior evaluated to NaN")
    return total


def split_position(arch: MlpArchitecture, z: np.ndarray) -> tuple:
    """Unconstrained position -> (weights, obs_sigma)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (arch.n_params + OUTPUT_DIM,):
        raise ValueError(f"expected position of length {arch.n_params + OUTPUT_DIM}")
    with np.errstate(over="ignore"):
        return z[:arch.n_params], np.exp(z[arch.n_params:])


def log_posterior_unconstrained(
    arch: MlpArchitecture,
    prior: WeightPrior,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
) -> float:
    """Sampler target over (weights, log obs_sigma), change of variables included."""
    weights, obs_sigma = split_position(arch, z)
    if not np.all(np.isfinite(obs_sigma)):
        return -math.inf
    return log_posterior(arch, prior, x, y, weights, obs_sigma) \
        + float(np.sum(z[arch.n_params:]))


def value_and_grad_unconstrained(
    arch: MlpArchitecture,
    prior: WeightPrior,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
) -> tuple:
    """(value, gradient) of the unconstrained target in one reverse pass."""
    weights, obs_sigma = split_position(arch, z)
    if not np.all(np.isfinite(obs_sigma)) or np.any(obs_sigma <= 0):
        return -math.inf, np.zeros_like(z)
    x = np.asarray(x, dtype=float).reshape(-1, arch.input_dim)
    y = np.asarray(y, dtype=float).reshape(-1, arch.output_dim)
    n = x.shape[0]
    var = np.square(obs_sigma)

    with np.errstate(over="ignore", invalid="ignore"):
        if n:
            pred, cache = forward_cached(arch, weights, x)
            resid = pred - y
            ssr = np.sum(np.square(resid), axis=0)
            ll = float(np.sum(-0.5 * n * np.log(2.0 * np.pi * var) - ssr / (2.0 * var)))
            grad_w_ll = backprop(arch, cache, -resid / var)
            grad_logsig_ll = -n + ssr / var
        else:
            ll = 0.0
            grad_w_ll = np.zeros(arch.n_params)
            grad_logsig_ll = np.zeros(OUTPUT_DIM)

        dw = weights - prior.center
        lp_w = float(
            -0.5 * np.sum(np.square(dw)) / prior.std ** 2
            - dw.size * 0.5 * math.log(2.0 * math.pi * prior.std ** 2)
        )
        scale2 = prior.obs_sigma_scale ** 2
        lp_sigma = float(np.sum(
            0.5 * math.log(2.0 / math.pi) - math.log(prior.obs_sigma_scale)
            - var / (2.0 * scale2)
        ))
        value = ll + lp_w + lp_sigma + float(np.sum(z[arch.n_params:]))
        grad = np.concatenate([
            grad_w_ll - dw / prior.std ** 2,
            grad_logsig_ll - var / scale2 + 1.0,
        ])
    if math.isnan(value) or not np.all(np.isfinite(grad)):
        return -math.inf, np.zeros_like(z)
    return value, grad


def grad_log_posterior(
    arch: MlpArchitecture,
    prior: WeightPrior,
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    obs_sigma: np.ndarray,
) -> np.ndarray:
    """Exact gradient of the unconstrained target at (weights, log obs_sigma).

    Length n_params + 3; the last three coordinates differentiate with respect
    to log obs_sigma and include the change-of-variables term, matching
    central finite differences of ``log_posterior_unconstrained``.
    """
    obs_sigma = np.asarray(obs_sigma, dtype=float)
    if np.any(obs_sigma <= 0):
        raise ValueError("obs_sigma must be positive elementwise")
    z = np.concatenate([np.asarray(weights, dtype=float), np.log(obs_sigma)])
    value, grad = value_and_grad_unconstrained(arch, prior, x, y, z)
    if not math.isfinite(value):
        raise NumericalError("log posterior is not finite at the requested point")
    return grad


def pretrain_map(
    arch: MlpArchitecture,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    lr: float,
    batch_size: int,
    rng: np.random.Generator,
) -> TrainResult:
    """Deterministic-MLP fit on normalized data; the posterior centers here."""
    if np.asarray(x).shape[0] == 0:
        raise ValueError("cannot pretrain on an empty dataset")
    return train_mse(arch, x, y, epochs=epochs, lr=lr, batch_size=batch_size, rng=rng)


def train_bnn(
    x_raw: np.ndarray,
    y_raw: np.ndarray,
    settings: BnnSettings,
    rng: np.random.Generator,
) -> PosteriorSamples:
    """Full training pass: standardize, MAP pretrain, then NUTS posterior."""
    x_raw = np.asarray(x_raw, dtype=float)
    y_raw = np.asarray(y_raw, dtype=float)
    if x_raw.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    norm = NormalizationStats.from_data(x_raw, y_raw)
    xn = norm.normalize_x(x_raw)
    yn = norm.normalize_y(y_raw)
    arch = MlpArchitecture(INPUT_DIM, tuple(settings.hidden_sizes), OUTPUT_DIM)

    map_result = pretrain_map(
        arch, xn, yn,
        epochs=settings.map_epochs, lr=settings.map_lr,
        batch_size=settings.batch_size, rng=rng,
    )
    prior = WeightPrior(
        center=map_result.weights,
        std=settings.prior_std,
        obs_sigma_scale=settings.obs_sigma_scale,
    )
    resid = forward(arch, map_result.weights, xn) - yn
    rmse = np.sqrt(np.mean(np.square(resid), axis=0))
    z0 = np.concatenate([map_result.weights, np.log(np.maximum(rmse, _RMSE_FLOOR))])

    memo = {}

    def cached(z: np.ndarray) -> tuple:
        key = z.tobytes()
        if key not in memo:
            memo.clear()
            memo[key] = value_and_grad_unconstrained(arch, prior, xn, yn, z)
        return memo[key]

    result = nuts.nuts_sample(
        lambda z: cached(z)[0],
        lambda z: cached(z)[1],
        z0,
        n_samples=settings.samples,
        n_warmup=settings.warmup,
        rng=rng,
        target_accept=settings.target_accept,
        max_tree_depth=settings.max_tree_depth,
    )
    diagnostics = dict(result.diagnostics)
    diagnostics["map_final_loss"] = map_result.final_loss
    return PosteriorSamples(
        architecture=arch,
        normalization=norm,
        samples=result.samples[:, :arch.n_params],
        obs_sigma_samples=np.exp(result.samples[:, arch.n_params:]),
        diagnostics=diagnostics,
    )


def wrench_input(wrench: Wrench, orientation: WristOrientation) -> np.ndarray:
    """Model input layout: [fx fy fz tx ty tz theta1 theta2]."""
    return np.concatenate([wrench.as_array(), orientation.as_array()])


def predict_batch(ps: PosteriorSamples, inputs_raw: np.ndarray) -> tuple:
    """Ensemble predictions for raw inputs (n, 8) -> (means (n, 3), stds (n, 3))."""
    inputs_raw = np.asarray(inputs_raw, dtype=float)
    if inputs_raw.ndim != 2 or inputs_raw.shape[1] != INPUT_DIM:
        raise ValueError(f"expected inputs of shape (n, {INPUT_DIM}), got {inputs_raw.shape}")
    xn = ps.normalization.normalize_x(inputs_raw)
    outputs = np.stack([
        forward(ps.architecture, w, xn) for w in ps.samples
    ])                                                       # (S, n, 3)
    de = ps.normalization.denormalize_y(outputs)
    mean = de.mean(axis=0)
    var_between = de.var(axis=0)
    noise_sq = np.mean(
        np.square(ps.obs_sigma_samples * ps.normalization.output_std), axis=0)
    std = np.sqrt(var_between + noise_sq)
    return mean, np.maximum(std, PREDICTIVE_STD_FLOOR)


def predict(
    ps: PosteriorSamples, wrench: Wrench, orientation: WristOrientation
) -> PredictiveDistribution:
    """Posterior predictive for one observation at a known orientation."""
    mean, std = predict_batch(ps, wrench_input(wrench, orientation)[None, :])
    return PredictiveDistribution(mean=mean[0], std=std[0])
