"""Neural building blocks on top of the autodiff tape: linear layers, a
softplus MLP, shift-only batch normalization, dropout, and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (max-subtraction) for plain arrays."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)):
        raise ValueError("softmax input contains NaN")
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


class Linear:
    """Affine map with fan-in-scaled uniform init."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(in_dim)
        self.weight = Tensor(
            rng.uniform(-bound, bound, size=(in_dim, out_dim)), requires_grad=True
        )
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


class MLP:
    """Stack of Linear layers with softplus activations after each layer."""

    def __init__(self, dims: list[int], rng: np.random.Generator):
        if len(dims) < 2:
            raise ValueError("MLP needs at least input and output dims")
        self.layers = [
            Linear(d_in, d_out, rng) for d_in, d_out in zip(dims[:-1], dims[1:])
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x).softplus()
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


def mlp_forward(x: Tensor, mlp: MLP) -> Tensor:
    return mlp(x)


class BatchNorm1d:
    """Per-feature batch normalization with a learnable shift only (no scale).

    Train mode normalizes with batch statistics (biased variance) and updates
    running statistics; eval mode uses the running statistics.
    """

    def __init__(self, num_features: int, momentum: float = 0.1, eps: float = 1e-5):
        self.shift = Tensor(np.zeros(num_features), requires_grad=True)
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, train: bool) -> Tensor:
        if train:
            if x.data.shape[0] < 2:
                raise ValueError("batch norm in train mode needs batch size >= 2")
            mu = x.mean(axis=0)
            centered = x - mu
            var = (centered * centered).mean(axis=0)
            out = centered / (var + Tensor(self.eps)).sqrt() + self.shift
            m = self.momentum
            self.running_mean = (1 - m) * self.running_mean + m * mu.data
            self.running_var = (1 - m) * self.running_var + m * var.data
            return out
        scale = 1.0 / np.sqrt(self.running_var + self.eps)
        return (x - Tensor(self.running_mean)) * Tensor(scale) + self.shift

    def parameters(self) -> list[Tensor]:
        return [self.shift]


def batch_norm(x: Tensor, bn: BatchNorm1d, mode: str) -> Tensor:
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    return bn(x, train=(mode == "train"))


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0."""
    if not train or rate <= 0.0:
        return x
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return x * Tensor(mask)


@dataclass
class AdamState:
    """Per-parameter Adam moments and the shared step counter."""

    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


class Adam:
    """Bias-corrected Adam over a list of Tensor parameters."""

    def __init__(self, params: list[Tensor], lr: float = 2e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        self.state.m = [np.zeros_like(p.data) for p in params]
        self.state.v = [np.zeros_like(p.data) for p in params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        s = self.state
        s.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            s.m[i] = s.beta1 * s.m[i] + (1 - s.beta1) * g
            s.v[i] = s.beta2 * s.v[i] + (1 - s.beta2) * g * g
            m_hat = s.m[i] / (1 - s.beta1 ** s.t)
            v_hat = s.v[i] / (1 - s.beta2 ** s.t)
            p.data -= s.lr * m_hat / (np.sqrt(v_hat) + s.eps)


def adam_step(params: list[Tensor], grads: list[np.ndarray], opt: Adam):
    """Functional wrapper: assign grads, take one Adam step."""
    for p, g in zip(params, grads):
        p.grad = g
    opt.step()
