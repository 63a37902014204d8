"""Distance-based actor updates.

The actor is regressed toward a softmax-weighted average of perturbed,
rounded candidates scored by the critic. Distances are measured in scaled
action coordinates; the chain rule through the affine scaling map is applied
before backpropagating into the actor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nn import AdamState, Mlp, NumericError, adam_step, backward, forward, huber_loss, squared_loss
from .spaces import ActionSpaceSpec, critic_scale, nearest_neighbor, scale_gradient, scale_proto


@dataclass
class DbuConfig:
    perturbation: float = 0.5
    candidates: int = 10
    temperature: float = 1.0
    loss: str = "huber"
    huber_delta: float = 1.0
    continuous_perturbation: float | None = None  # None = 10% of the continuous range

    def __post_init__(self) -> None:
        if self.perturbation <= 0:
            raise ValueError("perturbation std must be positive")
        if self.candidates < 2:
            raise ValueError("need at least two candidates for a softmax mixture")
        if self.temperature <= 0:
            raise ValueError("softmax temperature must be positive")
        if self.loss not in ("huber", "squared"):
            raise ValueError(f"unknown loss {self.loss!r}")


def perturb_candidates(scaled_proto: np.ndarray, cfg: DbuConfig, spec: ActionSpaceSpec,
                       rng: np.random.Generator) -> np.ndarray:
    """``M`` rounded Gaussian perturbations of the scaled proto-action, duplicates kept.

    Accepts one proto ``(width,)`` or a batch ``(B, width)``; the result has an
    extra candidate axis ``(..., M, width)``.
    """
    s = np.asarray(scaled_proto, dtype=float)
    shape = s.shape[:-1] + (cfg.candidates, s.shape[-1])
    sigma = np.full(spec.width, cfg.perturbation)
    if spec.is_hybrid:
        cont = (0.1 * (spec.cont_high - spec.cont_low) if cfg.continuous_perturbation is None
                else np.full(spec.n_continuous, cfg.continuous_perturbation))
        sigma[spec.n_dims:] = cont
    noisy = s[..., None, :] + sigma * rng.standard_normal(shape)
    return nearest_neighbor(noisy, spec)


def softmax_weights(q_values: np.ndarray, temperature: float) -> np.ndarray:
    q = np.asarray(q_values, dtype=float)
    if not np.all(np.isfinite(q)):
        raise NumericError("non-finite Q-value in target construction")
    z = q / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_target(candidates: np.ndarray, q_values: np.ndarray, temperature: float) -> np.ndarray:
    """Softmax(Q/temperature)-weighted average of the candidates (batched over leading axes)."""
    c = np.asarray(candidates, dtype=float)
    if c.shape[-2] < 2 or c.shape[:-1] != np.shape(q_values):
        raise ValueError("need >= 2 candidates with one Q-value each")
    w = softmax_weights(q_values, temperature)
    return (w[..., None] * c).sum(axis=-2)


def distance_loss(scaled_pred: np.ndarray, target: np.ndarray, cfg: DbuConfig) -> tuple[float, np.ndarray]:
    if cfg.loss == "huber":
        return huber_loss(scaled_pred, target, cfg.huber_delta)
    return squared_loss(scaled_pred, target)


def hybrid_loss_parts(scaled_pred: np.ndarray, target: np.ndarray, spec: ActionSpaceSpec,
                      cfg: DbuConfig) -> tuple[float, float]:
    """Discrete-part and continuous-part distance losses, computed separately."""
    n = spec.n_dims
    jd, _ = distance_loss(scaled_pred[..., :n], target[..., :n], cfg)
    jc, _ = distance_loss(scaled_pred[..., n:], target[..., n:], cfg)
    return jd, jc


def build_targets(states: np.ndarray, actor: Mlp, critic: Callable[[np.ndarray, np.ndarray], np.ndarray],
                  cfg: DbuConfig, spec: ActionSpaceSpec, rng: np.random.Generator) -> np.ndarray:
    """Targets for a batch of states; ``critic(states_rep, actions)`` scores row-aligned pairs."""
    states = np.atleast_2d(states)
    scaled = scale_proto(forward(actor, states), spec)
    cands = perturb_candidates(scaled, cfg, spec, rng)  # (B, M, width)
    b, m, w = cands.shape
    q = np.asarray(critic(np.repeat(states, m, axis=0), cands.reshape(b * m, w)), dtype=float)
    return softmax_target(cands, q.reshape(b, m), cfg.temperature)


def dbu_actor_update(actor: Mlp, states: np.ndarray, targets: np.ndarray, optimizer: AdamState,
                     spec: ActionSpaceSpec, cfg: DbuConfig) -> float:
    """One optimizer step on the mean (over the batch) distance to fixed targets."""
    states = np.atleast_2d(states)
    targets = np.atleast_2d(targets)
    out = forward(actor, states)
    pred = scale_proto(out, spec)
    loss, g_pred = distance_loss(pred, targets, cfg)
    # outputs at the clip boundary still get the affine slope; tanh keeps them inside
    g_out = g_pred * scale_gradient(spec) / len(states)
    grads, _ = backward(actor, states, g_out)
    adam_step(optimizer, grads)
    return loss / len(states)


def dbu_output_gradient(scaled_pred: np.ndarray, target: np.ndarray, cfg: DbuConfig) -> np.ndarray:
    """Gradient of the distance loss with respect to the scaled actor output."""
    _, g = distance_loss(scaled_pred, target, cfg)
    return g


def dbu_gradient_variance_probe(state: np.ndarray, actor: Mlp, critic: Callable[[np.ndarray, np.ndarray], np.ndarray],
                                cfg: DbuConfig, per_dim_sizes: list[int], trials: int,
                                n_dims: int = 2, seed: int = 0) -> list[float]:
    """Trace of the covariance of the DBU output gradient, one value per per-dimension size.

    For each size a space ``{0..size-1}^n_dims`` is built, targets are
    resampled ``trials`` times at a fixed state and proto-action, and the
    gradient of the distance loss with respect to the scaled actor output is
    collected. ``critic`` scores actions normalised to ``[0, 1]``, so the same
    network serves every size.
    """
    out = []
    s = np.atleast_2d(state)
    for size in per_dim_sizes:
        spec = ActionSpaceSpec.uniform(n_dims, size)
        rng = np.random.default_rng(seed)
        pred = np.repeat(scale_proto(forward(actor, s), spec), trials, axis=0)
        cands = perturb_candidates(pred, cfg, spec, rng)
        m = cands.shape[1]
        flat = critic_scale(cands.reshape(trials * m, -1), spec)
        q = np.asarray(critic(np.repeat(s, trials * m, axis=0), flat), dtype=float)
        targets = softmax_target(cands, q.reshape(trials, m), cfg.temperature)
        grads = dbu_output_gradient(pred, targets, cfg)
        out.append(float(np.trace(np.atleast_2d(np.cov(grads, rowvar=False)))))
    return out
