"""Small feed-forward network engine on top of numpy.

Networks are plain lists of ``(W, b)`` pairs with ``W`` shaped ``(out, in)``.
All functions accept a single input vector or a batch (rows are samples);
gradients are summed over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("identity", "relu", "tanh")


class DimensionError(ValueError):
    """Input or gradient shape does not fit the network."""


class NumericError(ArithmeticError):
    """Non-finite value where a finite one is required."""


class DomainError(ValueError):
    """Value outside the domain an operation is defined on."""


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    # derivative expressed through pre-activation z and activation a
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass
class Mlp:
    layers: list[tuple[np.ndarray, np.ndarray]]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self) -> None:
        if self.hidden_activation not in ACTIVATIONS or self.output_activation not in ACTIVATIONS:
            raise ValueError("unknown activation")
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise DimensionError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[1] != self.layers[i - 1][0].shape[0]:
                raise DimensionError(f"layer {i} input {w.shape[1]} != previous output")

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    def params(self) -> list[np.ndarray]:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        return [p for layer in self.layers for p in layer]

    def copy(self) -> "Mlp":
        return Mlp([(w.copy(), b.copy()) for w, b in self.layers],
                   self.hidden_activation, self.output_activation)

    def activation(self, i: int) -> str:
        return self.output_activation if i == len(self.layers) - 1 else self.hidden_activation


def init_mlp(sizes: list[int], rng: np.random.Generator, hidden_activation: str = "relu",
             output_activation: str = "identity") -> Mlp:
    """Uniform init in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` for weights and biases."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        layers.append((rng.uniform(-bound, bound, (fan_out, fan_in)),
                       rng.uniform(-bound, bound, fan_out)))
    return Mlp(layers, hidden_activation, output_activation)


def zeros_like_mlp(net: Mlp) -> Mlp:
    return Mlp([(np.zeros_like(w), np.zeros_like(b)) for w, b in net.layers],
               net.hidden_activation, net.output_activation)


def _as_batch(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != net.in_dim:
        raise DimensionError(f"input shape {x.shape} does not match in-dimension {net.in_dim}")
    return xb, single


def _forward_cache(net: Mlp, xb: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    cache = []
    a = xb
    for i, (w, b) in enumerate(net.layers):
        z = a @ w.T + b
        a_next = _act(net.activation(i), z)
        cache.append((a, z))
        a = a_next
    cache.append((a, a))
    return cache


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    xb, single = _as_batch(net, x)
    if not np.all(np.isfinite(xb)):
        raise NumericError("non-finite network input")
    a = xb
    for i, (w, b) in enumerate(net.layers):
        a = _act(net.activation(i), a @ w.T + b)
    return a[0] if single else a


def backward(net: Mlp, x: np.ndarray, output_grad: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients of ``sum(output * output_grad)``.

    Returns ``(param_grads, input_grad)`` where ``param_grads`` follows the
    ordering of :meth:`Mlp.params` and is summed over batch rows.
    """
    xb, single = _as_batch(net, x)
    g = np.asarray(output_grad, dtype=float)
    gb = g[None, :] if single else g
    if gb.shape != (xb.shape[0], net.out_dim):
        raise DimensionError(f"output_grad shape {g.shape} does not match output")
    cache = _forward_cache(net, xb)
    grads: list[np.ndarray] = [None] * (2 * len(net.layers))  # type: ignore[list-item]
    delta = gb
    for i in range(len(net.layers) - 1, -1, -1):
        a_in, z = cache[i]
        a_out = cache[i + 1][0]
        delta = delta * _act_grad(net.activation(i), z, a_out)
        w = net.layers[i][0]
        grads[2 * i] = delta.T @ a_in
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ w
    return grads, (delta[0] if single else delta)


@dataclass
class AdamState:
    params: list[np.ndarray]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.params]
            self.v = [np.zeros_like(p) for p in self.params]


def adam_step(state: AdamState, grads: list[np.ndarray]) -> None:
    """Bias-corrected Adam update, applied in place to ``state.params``.

    An all-zero gradient is a no-op apart from advancing the step counter.
    """
    if len(grads) != len(state.params):
        raise DimensionError("gradient list does not match parameter list")
    for p, g in zip(state.params, grads):
        if p.shape != g.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient")
    state.step_count += 1
    if not any(np.any(g) for g in grads):
        return
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(state.params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def huber_loss(pred: np.ndarray, target: np.ndarray, delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Summed elementwise Huber loss and its gradient with respect to ``pred``."""
    if delta <= 0:
        raise ValueError("huber delta must be positive")
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise DimensionError(f"pred {pred.shape} and target {target.shape} differ")
    r = pred - target
    absr = np.abs(r)
    quad = absr <= delta
    loss = np.where(quad, 0.5 * r * r, delta * (absr - 0.5 * delta))
    grad = np.where(quad, r, delta * np.sign(r))
    return float(loss.sum()), grad


def squared_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    r = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return float((r * r).sum()), 2.0 * r


@dataclass(frozen=True)
class FourierConfig:
    order: int
    input_dim: int

    @property
    def output_dim(self) -> int:
        return self.input_dim * (self.order + 1)


def fourier_features(state: np.ndarray, cfg: FourierConfig) -> np.ndarray:
    """Decoupled cosine basis: ``cos(i*pi*s_j)`` for every coordinate ``j`` and ``i = 0..order``.

    Works on a single state or a batch; coordinate-major ordering, so the
    features of ``s_0`` come first.
    """
    s = np.asarray(state, dtype=float)
    if s.shape[-1] != cfg.input_dim:
        raise DimensionError(f"state width {s.shape[-1]} != {cfg.input_dim}")
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise DomainError("fourier features need state entries in [0, 1]")
    k = np.arange(cfg.order + 1)
    out = np.cos(np.pi * s[..., :, None] * k)
    return out.reshape(*s.shape[:-1], cfg.output_dim)


def grad_check(net: Mlp, x: np.ndarray, eps: float = 1e-5, output_grad: np.ndarray | None = None,
               grads: list[np.ndarray] | None = None) -> float:
    """Max relative error between backprop and central differences over all parameters.

    ``grads`` may be passed to check a precomputed gradient (used for negative
    controls). The relative error uses ``|a-n| / max(|a|+|n|, 1e-8)``, so
    entries where both are tiny do not dominate.
    """
    if not 0.0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    x = np.asarray(x, dtype=float)
    out_shape = forward(net, x).shape
    g_out = np.ones(out_shape) if output_grad is None else np.asarray(output_grad, dtype=float)
    if grads is None:
        grads, _ = backward(net, x, g_out)
    worst = 0.0
    for p, g in zip(net.params(), grads):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + eps
            up = float(np.sum(forward(net, x) * g_out))
            flat[j] = old - eps
            down = float(np.sum(forward(net, x) * g_out))
            flat[j] = old
            num = (up - down) / (2.0 * eps)
            denom = max(abs(num) + abs(gflat[j]), 1e-8)
            worst = max(worst, abs(num - gflat[j]) / denom)
    return worst
