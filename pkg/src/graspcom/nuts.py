"""No-U-Turn sampler with dual-averaging step-size adaptation.

A self-contained Euclidean-metric NUTS kernel: leapfrog integration under an
identity mass matrix, recursive trajectory doubling with the endpoint U-turn
termination rule, multinomial sampling over trajectory states, an energy-error
divergence guard, and Hoffman-Gelman dual averaging of the step size during
warmup. The target is supplied as a log-density callable plus its gradient.

Conventions: positions q live in R^d, momenta p ~ N(0, I), the Hamiltonian is
H(q, p) = -log_post(q) + 0.5 |p|^2, and a trajectory state carries multinomial
log-weight H0 - H relative to the transition's initial energy H0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

TARGET_ACCEPT_DEFAULT = 0.8
MAX_TREE_DEPTH_DEFAULT = 10
DIVERGENCE_THRESHOLD_DEFAULT = 1000.0


@dataclass
class _Point:
    q: np.ndarray
    p: np.ndarray
    grad: np.ndarray
    lp: float

    def energy(self) -> float:
        h = 0.5 * float(self.p @ self.p) - self.lp
        return h if math.isfinite(h) else math.inf


@dataclass
class _Tree:
    left: _Point          # backward-most state
    right: _Point         # forward-most state
    proposal: _Point
    log_weight: float
    alpha_sum: float
    n_alpha: int
    n_leapfrog: int
    cont: bool
    divergent: bool


@dataclass
class NutsResult:
    samples: np.ndarray
    diagnostics: dict = field(default_factory=dict)


class DualAveraging:
    """Step-size adaptation toward a target acceptance statistic."""

    def __init__(self, eps0: float, target: float = TARGET_ACCEPT_DEFAULT,
                 gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75):
        self.mu = math.log(10.0 * eps0)
        self.target = target
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.log_eps = math.log(eps0)
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.t = 0

    def update(self, accept_stat: float) -> float:
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_stat)
        self.log_eps = self.mu - (math.sqrt(self.t) / self.gamma) * self.h_bar
        w = self.t ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar
        return math.exp(self.log_eps)

    def final(self) -> float:
        return math.exp(self.log_eps_bar)


def _finite_lp(value) -> float:
    value = float(value)
    return value if not math.isnan(value) else -math.inf


def leapfrog(eval_fn, point: _Point, eps: float) -> _Point:
    """One leapfrog step of size eps (may be negative for backward time)."""
    p_half = point.p + 0.5 * eps * point.grad
    q_new = point.q + eps * p_half
    lp_new, grad_new = eval_fn(q_new)
    p_new = p_half + 0.5 * eps * grad_new
    return _Point(q_new, p_new, grad_new, lp_new)


def _uturn(left: _Point, right: _Point) -> bool:
    dq = right.q - left.q
    return (dq @ left.p) < 0.0 or (dq @ right.p) < 0.0


def _leaf(eval_fn, start: _Point, direction: int, eps: float, h0: float,
          threshold: float) -> _Tree:
    pt = leapfrog(eval_fn, start, direction * eps)
    delta = pt.energy() - h0          # +inf when the step blew up
    divergent = not (delta <= threshold)
    log_weight = -delta if not divergent else -math.inf
    alpha = math.exp(min(0.0, -delta)) if math.isfinite(delta) else 0.0
    return _Tree(left=pt, right=pt, proposal=pt, log_weight=log_weight,
                 alpha_sum=alpha, n_alpha=1, n_leapfrog=1,
                 cont=not divergent, divergent=divergent)


def _build_tree(eval_fn, start: _Point, direction: int, depth: int, eps: float,
                h0: float, rng: np.random.Generator, threshold: float) -> _Tree:
    if depth == 0:
        return _leaf(eval_fn, start, direction, eps, h0, threshold)

    first = _build_tree(eval_fn, start, direction, depth - 1, eps, h0, rng, threshold)
    if not first.cont:
        return first

    grow_from = first.left if direction < 0 else first.right
    second = _build_tree(eval_fn, grow_from, direction, depth - 1, eps, h0, rng, threshold)

    total = np.logaddexp(first.log_weight, second.log_weight)
    proposal = first.proposal
    if second.log_weight > -math.inf and \
            math.log(rng.random()) < second.log_weight - total:
        proposal = second.proposal

    left = second.left if direction < 0 else first.left
    right = first.right if direction < 0 else second.right
    cont = second.cont and not second.divergent and not _uturn(left, right)
    return _Tree(left=left, right=right, proposal=proposal, log_weight=float(total),
                 alpha_sum=first.alpha_sum + second.alpha_sum,
                 n_alpha=first.n_alpha + second.n_alpha,
                 n_leapfrog=first.n_leapfrog + second.n_leapfrog,
                 cont=cont, divergent=first.divergent or second.divergent)


def _transition(eval_fn, current: _Point, eps: float, max_depth: int,
                rng: np.random.Generator, threshold: float):
    """One NUTS update from ``current``; returns (point, accept_stat, depth, divergent)."""
    p0 = rng.standard_normal(current.q.shape[0])
    start = _Point(current.q, p0, current.grad, current.lp)
    h0 = start.energy()

    left = start
    right = start
    proposal = start
    log_weight = 0.0
    alpha_sum = 0.0
    n_alpha = 0
    divergent = False
    depth = 0

    while depth < max_depth:
        direction = 1 if rng.random() < 0.5 else -1
        grow_from = right if direction > 0 else left
        sub = _build_tree(eval_fn, grow_from, direction, depth, eps, h0, rng, threshold)

        alpha_sum += sub.alpha_sum
        n_alpha += sub.n_alpha
        divergent = divergent or sub.divergent
        depth += 1

        if not sub.cont:
            break
        # valid subtree: multinomial-swap the proposal, then extend the ends
        total = np.logaddexp(log_weight, sub.log_weight)
        if sub.log_weight > -math.inf and \
                math.log(rng.random()) < sub.log_weight - total:
            proposal = sub.proposal
        log_weight = float(total)
        if direction > 0:
            right = sub.right
        else:
            left = sub.left
        if _uturn(left, right):
            break

    accept_stat = alpha_sum / max(1, n_alpha)
    return proposal, accept_stat, depth, divergent


def find_reasonable_step_size(eval_fn, point: _Point,
                              rng: np.random.Generator) -> float:
    """Double/halve eps until the one-step acceptance probability crosses 1/2."""
    eps = 1.0
    p0 = rng.standard_normal(point.q.shape[0])
    start = _Point(point.q, p0, point.grad, point.lp)
    h0 = start.energy()

    def log_accept(step: float) -> float:
        h = leapfrog(eval_fn, start, step).energy()
        return h0 - h if math.isfinite(h) else -math.inf

    log_half = math.log(0.5)
    direction = 1.0 if log_accept(eps) > log_half else -1.0
    for _ in range(100):
        candidate = eps * (2.0 ** direction)
        if not (1e-12 < candidate < 1e6):
            break
        if direction * log_accept(candidate) <= direction * log_half:
            break
        eps = candidate
    return eps


def nuts_sample(
    log_post_fn,
    grad_fn,
    init: np.ndarray,
    n_samples: int,
    n_warmup: int,
    rng: np.random.Generator,
    target_accept: float = TARGET_ACCEPT_DEFAULT,
    max_tree_depth: int = MAX_TREE_DEPTH_DEFAULT,
    divergence_threshold: float = DIVERGENCE_THRESHOLD_DEFAULT,
    step_size: float | None = None,
) -> NutsResult:
    """Draw ``n_samples`` post-warmup samples from an unnormalized log density.

    ``log_post_fn``/``grad_fn`` evaluate the log posterior and its gradient at
    a position vector. Step size is adapted by dual averaging over
    ``n_warmup`` transitions unless ``step_size`` pins it. Raises
    NumericalError when the initial point is not finite or when every warmup
    transition diverged.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if n_warmup < 0:
        raise ValueError(f"n_warmup must be >= 0, got {n_warmup}")

    def eval_fn(q: np.ndarray):
        lp = _finite_lp(log_post_fn(q))
        grad = np.asarray(grad_fn(q), dtype=float)
        if not np.all(np.isfinite(grad)):
            lp = -math.inf
            grad = np.zeros_like(grad)
        return lp, grad

    q0 = np.array(init, dtype=float)
    lp0, grad0 = eval_fn(q0)
    if not math.isfinite(lp0):
        raise NumericalError("initial log posterior is not finite")
    current = _Point(q0, np.zeros_like(q0), grad0, lp0)

    eps = step_size if step_size is not None else \
        find_reasonable_step_size(eval_fn, current, rng)
    adapter = DualAveraging(eps, target=target_accept) if n_warmup > 0 else None

    warmup_divergences = 0
    for _ in range(n_warmup):
        current, accept_stat, _, div = _transition(
            eval_fn, current, eps, max_tree_depth, rng, divergence_threshold)
        warmup_divergences += int(div)
        eps = adapter.update(accept_stat)
    if adapter is not None:
        eps = adapter.final()
    if n_warmup > 0 and warmup_divergences == n_warmup:
        raise NumericalError(
            f"all {n_warmup} warmup transitions diverged "
            f"(final step size {eps:.3e}); the posterior may be degenerate"
        )

    samples = np.empty((n_samples, q0.shape[0]))
    divergences = 0
    accept_total = 0.0
    depth_total = 0
    for i in range(n_samples):
        current, accept_stat, depth, div = _transition(
            eval_fn, current, eps, max_tree_depth, rng, divergence_threshold)
        samples[i] = current.q
        divergences += int(div)
        accept_total += accept_stat
        depth_total += depth

    diagnostics = {
        "divergences": divergences,
        "warmup_divergences": warmup_divergences,
        "mean_accept": accept_total / n_samples,
        "step_size": eps,
        "mean_tree_depth": depth_total / n_samples,
        "max_split_rhat": float(np.max(split_rhat(samples))) if n_samples >= 4 else 1.0,
    }
    return NutsResult(samples=samples, diagnostics=diagnostics)


def split_rhat(samples: np.ndarray) -> np.ndarray:
    """Split-R-hat of a single chain (first half vs second half), per dimension.

    Values near 1 indicate the two halves agree in mean and variance.
    """
    n = (samples.shape[0] // 2) * 2
    if n < 4:
        return np.ones(samples.shape[1])
    halves = samples[:n].reshape(2, n // 2, samples.shape[1])
    within = halves.var(axis=1, ddof=1).mean(axis=0)
    between = (n // 2) * halves.mean(axis=1).var(axis=0, ddof=1)
    var_hat = (n // 2 - 1) / (n // 2) * within + between / (n // 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhat = np.sqrt(var_hat / within)
    return np.where(within > 0, rhat, 1.0)
