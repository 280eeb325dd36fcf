"""Dense rectifier networks over flat parameter vectors.

Forward passes, exact reverse-mode gradients, and a minimal Adam trainer, all
in numpy. Keeping the parameters flat lets the posterior sampler treat the
whole network as a single vector, and the hand-written backward pass is what
supplies its gradients.

Weight layout: for each layer, the (n_in, n_out) weight matrix row-major,
then the bias. Hidden activations are rectified linear; the output layer is
linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int
    hidden_sizes: tuple
    output_dim: int

    def __post_init__(self):
        sizes = (self.input_dim, *self.hidden_sizes, self.output_dim)
        if any(int(s) < 1 for s in sizes):
            raise ValueError(f"all layer sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "hidden_sizes", tuple(int(s) for s in self.hidden_sizes))

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim, *self.hidden_sizes, self.output_dim)

    @property
    def n_layers(self) -> int:
        return len(self.hidden_sizes) + 1

    @property
    def n_params(self) -> int:
        dims = self.layer_dims
        return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(self.n_layers))


def unflatten(arch: MlpArchitecture, w: np.ndarray) -> list:
    """Views (no copies) of the flat vector as [(W, b), ...] per layer."""
    w = np.asarray(w)
    if w.shape != (arch.n_params,):
        raise ValueError(f"expected {arch.n_params} parameters, got {w.shape}")
    dims = arch.layer_dims
    layers = []
    pos = 0
    for i in range(arch.n_layers):
        n_in, n_out = dims[i], dims[i + 1]
        weight = w[pos:pos + n_in * n_out].reshape(n_in, n_out)
        pos += n_in * n_out
        bias = w[pos:pos + n_out]
        pos += n_out
        layers.append((weight, bias))
    return layers


def init_weights(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """He-scaled Gaussian weights, zero biases."""
    dims = arch.layer_dims
    parts = []
    for i in range(arch.n_layers):
        n_in, n_out = dims[i], dims[i + 1]
        scale = np.sqrt(2.0 / n_in) if i < arch.n_layers - 1 else np.sqrt(1.0 / n_in)
        parts.append((rng.standard_normal((n_in, n_out)) * scale).ravel())
        parts.append(np.zeros(n_out))
    return np.concatenate(parts)


def _as_batch(x: np.ndarray, input_dim: int) -> tuple:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != input_dim:
            raise ValueError(f"expected input of length {input_dim}, got {x.shape[0]}")
        return x[None, :], True
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ValueError(f"expected inputs of shape (n, {input_dim}), got {x.shape}")
    return x, False


def forward(arch: MlpArchitecture, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Deterministic forward pass; accepts a single input or a batch."""
    batch, squeeze = _as_batch(x, arch.input_dim)
    a = batch
    layers = unflatten(arch, w)
    for i, (weight, bias) in enumerate(layers):
        z = a @ weight + bias
        a = np.maximum(z, 0.0) if i < arch.n_layers - 1 else z
    return a[0] if squeeze else a


def forward_cached(arch: MlpArchitecture, w: np.ndarray, x: np.ndarray):
    """Forward pass keeping per-layer inputs and rectifier masks for backprop."""
    batch, _ = _as_batch(x, arch.input_dim)
    layers = unflatten(arch, w)
    inputs = []
    masks = []
    a = batch
    for i, (weight, bias) in enumerate(layers):
        inputs.append(a)
        z = a @ weight + bias
        if i < arch.n_layers - 1:
            mask = z > 0.0
            masks.append(mask)
            a = np.where(mask, z, 0.0)
        else:
            a = z
    return a, (inputs, masks, layers)


def backprop(arch: MlpArchitecture, cache, grad_out: np.ndarray) -> np.ndarray:
    """Gradient of sum(grad_out * output) with respect to the flat parameters."""
    inputs, masks, layers = cache
    grads = [None] * arch.n_layers
    delta = np.asarray(grad_out, dtype=float)
    if delta.ndim == 1:
        delta = delta[None, :]
    for i in range(arch.n_layers - 1, -1, -1):
        weight, _ = layers[i]
        grad_w = inputs[i].T @ delta
        grad_b = delta.sum(axis=0)
        grads[i] = (grad_w, grad_b)
        if i > 0:
            delta = (delta @ weight.T) * masks[i - 1]
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


@dataclass
class TrainResult:
    weights: np.ndarray
    final_loss: float
    loss_history: list = field(default_factory=list)


class Adam:
    """Plain Adam on a flat parameter vector."""

    def __init__(self, n_params: int, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, w: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return w - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def mse_loss(arch: MlpArchitecture, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    pred = forward(arch, w, x)
    return float(np.mean(np.square(pred - y)))


def train_mse(
    arch: MlpArchitecture,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    lr: float,
    batch_size: int,
    rng: np.random.Generator,
    init: np.ndarray | None = None,
) -> TrainResult:
    """Minibatch Adam on mean-squared error; deterministic under a fixed rng."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ValueError(f"expected inputs of shape (n, {arch.input_dim}), got {x.shape}")
    if y.ndim != 2 or y.shape != (x.shape[0], arch.output_dim):
        raise ValueError(f"expected targets of shape ({x.shape[0]}, {arch.output_dim})")
    n = x.shape[0]
    if n == 0:
        raise ValueError("training set is empty")
    w = init_weights(arch, rng) if init is None else np.array(init, dtype=float)
    opt = Adam(arch.n_params, lr)
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb, yb = x[idx], y[idx]
            pred, cache = forward_cached(arch, w, xb)
            resid = pred - yb
            # d/dpred of mean squared error over this batch
            grad_out = (2.0 / resid.size) * resid
            grad = backprop(arch, cache, grad_out)
            w = opt.step(w, grad)
            epoch_loss += float(np.mean(np.square(resid))) * len(idx)
        history.append(epoch_loss / n)
    return TrainResult(weights=w, final_loss=mse_loss(arch, w, x, y), loss_history=history)
