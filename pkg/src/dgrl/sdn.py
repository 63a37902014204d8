"""Sampled dynamic neighborhoods and the two simpler mapping baselines.

Selection functions take the networks as callables:

* ``actor(state) -> proto`` with proto in ``[-1, 1]^width``
* ``critic(state, actions) -> q`` scoring a ``(k, width)`` block of actions
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spaces import ActionSpaceSpec, nearest_neighbor, round_half_up, scale_proto

Actor = Callable[[np.ndarray], np.ndarray]
Critic = Callable[[np.ndarray, np.ndarray], np.ndarray]

_TOL = 1e-9


@dataclass
class SdnConfig:
    radius: int = 1
    samples: int = 10
    sampling_temperature: float = 1.0
    exploration_temperature: float = 0.8
    proto_noise: float = 0.0
    scheme: str = "linear"
    # std of the Gaussian continuous neighborhood in action units; None = 10% of the range
    continuous_noise: float | None = None

    def __post_init__(self) -> None:
        if self.radius < 1 or self.samples < 1:
            raise ValueError("radius and samples must be >= 1")
        if self.sampling_temperature <= 0:
            raise ValueError("sampling temperature must be positive")
        if not 0.0 < self.exploration_temperature <= 1.0:
            raise ValueError("exploration temperature must lie in (0, 1]")
        if self.proto_noise < 0:
            raise ValueError("proto noise must be non-negative")
        if self.scheme not in ("linear", "softmax"):
            raise ValueError(f"unknown sampling scheme {self.scheme!r}")


@dataclass
class CandidateSet:
    actions: np.ndarray  # (k, width); nearest neighbor first
    q_values: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.actions)


def _weights(dist: np.ndarray, radius: int, temperature: float, scheme: str) -> np.ndarray:
    if scheme == "softmax":
        return np.exp(-dist / temperature)
    return radius - dist + temperature


def coordinate_options(scaled_coord: float, radius: int, bounds: tuple[int, int],
                       temperature: float = 1.0, scheme: str = "linear") -> tuple[np.ndarray, np.ndarray]:
    """Integers within ``radius`` of a real coordinate and their sampling probabilities."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    lo, hi = bounds
    z = np.arange(np.floor(scaled_coord) - radius, np.ceil(scaled_coord) + radius + 1).astype(np.int64)
    dist = np.abs(z - scaled_coord)
    keep = (dist <= radius + _TOL) & (z >= lo) & (z <= hi)
    z, dist = z[keep], dist[keep]
    w = _weights(dist, radius, temperature, scheme)
    return z, w / w.sum()


def option_table(scaled: np.ndarray, cfg: SdnConfig, spec: ActionSpaceSpec) -> tuple[np.ndarray, np.ndarray]:
    """All dims at once: ``values (N, W)`` and ``probs (N, W)``; invalid slots get probability 0."""
    s = np.asarray(scaled, dtype=float)[: spec.n_dims]
    L = cfg.radius
    values = np.floor(s)[:, None] - L + np.arange(2 * L + 2)[None, :]
    dist = np.abs(values - s[:, None])
    valid = (dist <= L + _TOL) & (values >= spec.low[:, None]) & (values <= spec.high[:, None])
    w = np.where(valid, _weights(dist, L, cfg.sampling_temperature, cfg.scheme), 0.0)
    total = w.sum(axis=1, keepdims=True)
    # clipping may push every integer of the ball outside a degenerate box; fall back to the NN
    empty = total[:, 0] <= 0
    if np.any(empty):
        nn = np.clip(round_half_up(s), spec.low, spec.high)
        values[empty, 0] = nn[empty]
        w[empty] = 0.0
        w[empty, 0] = 1.0
        total = w.sum(axis=1, keepdims=True)
    return values, w / total


def draw_candidates(scaled: np.ndarray, cfg: SdnConfig, spec: ActionSpaceSpec, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. discrete draws with every coordinate sampled independently (no dedup)."""
    values, probs = option_table(scaled, cfg, spec)
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random((n, values.shape[0]))
    idx = (u[:, :, None] >= cdf[None, :, :]).sum(axis=2)
    idx = np.minimum(idx, values.shape[1] - 1)
    return np.take_along_axis(values[None, :, :].repeat(n, axis=0), idx[:, :, None], axis=2)[:, :, 0]


def _unique_rows(a: np.ndarray) -> np.ndarray:
    """Distinct rows in order of first appearance."""
    if len(a) < 2:
        return a
    rows = np.ascontiguousarray(a, dtype=float) + 0.0  # folds -0.0 into 0.0
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first = np.unique(keys, return_index=True)
    return a[np.sort(first)]


def in_ball(points: np.ndarray, center: np.ndarray, radius: float, metric: str) -> np.ndarray:
    diff = np.abs(np.asarray(points, dtype=float) - np.asarray(center, dtype=float))
    if metric == "euclidean":
        d = np.sqrt((diff * diff).sum(axis=-1))
    elif metric == "manhattan":
        d = diff.sum(axis=-1)
    else:
        d = diff.max(axis=-1)
    return d <= radius + _TOL


def sample_neighborhood(scaled: np.ndarray, cfg: SdnConfig, spec: ActionSpaceSpec,
                        rng: np.random.Generator) -> CandidateSet:
    """Discrete candidate set around a scaled proto-action.

    Draws ``2K`` candidates, drops duplicates (and, for euclidean or manhattan
    metrics, points outside the ball), keeps the first ``K`` and puts the
    nearest neighbor in front if it is not already present. The nearest
    neighbor is always kept, even where a tight euclidean ball excludes it.
    """
    s = np.asarray(scaled, dtype=float)[: spec.n_dims]
    draws = draw_candidates(s, cfg, spec, 2 * cfg.samples, rng)
    draws = _unique_rows(draws)
    if spec.metric != "chebyshev":
        draws = draws[in_ball(draws, s, cfg.radius, spec.metric)]
    draws = draws[: cfg.samples]
    nn = np.clip(round_half_up(s), spec.low, spec.high)
    hit = np.all(draws == nn, axis=1)
    if hit.any():
        draws = np.concatenate([draws[hit], draws[~hit]])
    else:
        draws = np.concatenate([nn[None, :], draws])
    return CandidateSet(draws.astype(float))


def rank_probabilities(q_values: np.ndarray, temperature: float) -> np.ndarray:
    """``temperature ** rank`` normalised; rank 0 is the highest Q, ties favour lower index."""
    q = np.asarray(q_values, dtype=float)
    order = np.argsort(-q, kind="stable")
    rank = np.empty(q.size)
    rank[order] = np.arange(q.size)
    w = temperature ** rank
    return w / w.sum()


def rank_selection(q_values: np.ndarray, temperature: float, rng: np.random.Generator) -> int:
    p = rank_probabilities(q_values, temperature)
    idx = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    return min(idx, p.size - 1)


def _choose(q: np.ndarray, mode: str, cfg: SdnConfig, rng: np.random.Generator) -> int:
    if mode == "eval":
        return int(np.argmax(q))
    if mode == "train":
        return rank_selection(q, cfg.exploration_temperature, rng)
    raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


def perturbed_proto(state: np.ndarray, actor: Actor, noise: float, mode: str,
                    rng: np.random.Generator) -> np.ndarray:
    proto = np.asarray(actor(state), dtype=float)
    if mode == "train" and noise > 0:
        proto = proto + noise * rng.standard_normal(proto.shape)
    return np.clip(proto, -1.0, 1.0)


def continuous_noise(cfg: SdnConfig, spec: ActionSpaceSpec) -> np.ndarray:
    if cfg.continuous_noise is None:
        return 0.1 * (spec.cont_high - spec.cont_low)
    return np.full(spec.n_continuous, float(cfg.continuous_noise))


def hybrid_candidates(scaled: np.ndarray, cfg: SdnConfig, spec: ActionSpaceSpec,
                      rng: np.random.Generator, sigma_c: np.ndarray | float | None = None) -> CandidateSet:
    """Joint candidates: SDN discrete part plus a Gaussian continuous part per candidate."""
    disc = sample_neighborhood(scaled, cfg, spec, rng).actions
    s_c = np.asarray(scaled, dtype=float)[spec.n_dims:]
    sig = continuous_noise(cfg, spec) if sigma_c is None else np.broadcast_to(sigma_c, s_c.shape)
    cont = s_c + sig * rng.standard_normal((len(disc), spec.n_continuous))
    cont = np.clip(cont, spec.cont_low, spec.cont_high)
    return CandidateSet(np.concatenate([disc, cont], axis=1))


def sdn_candidates(state: np.ndarray, actor: Actor, cfg: SdnConfig, spec: ActionSpaceSpec, mode: str,
                   rng: np.random.Generator) -> CandidateSet:
    proto = perturbed_proto(state, actor, cfg.proto_noise, mode, rng)
    scaled = scale_proto(proto, spec)
    if spec.is_hybrid:
        return hybrid_candidates(scaled, cfg, spec, rng)
    return sample_neighborhood(scaled, cfg, spec, rng)


def sdn_select(state: np.ndarray, actor: Actor, critic: Critic, cfg: SdnConfig, spec: ActionSpaceSpec,
               mode: str, rng: np.random.Generator) -> np.ndarray:
    """Execution action: argmax over the sampled candidates (eval) or a rank-based draw (train)."""
    cands = sdn_candidates(state, actor, cfg, spec, mode, rng)
    cands.q_values = np.asarray(critic(state, cands.actions), dtype=float)
    return cands.actions[_choose(cands.q_values, mode, cfg, rng)]


def sdn_select_batch(states: np.ndarray, actor: Actor, critic: Critic, cfg: SdnConfig, spec: ActionSpaceSpec,
                     rng: np.random.Generator) -> np.ndarray:
    """Eval-mode selection for a batch of states with one actor and one critic call.

    ``critic(states, actions)`` must score row-aligned pairs here.
    """
    states = np.atleast_2d(states)
    scaled = scale_proto(np.clip(np.asarray(actor(states), dtype=float), -1.0, 1.0), spec)
    blocks = [(hybrid_candidates(s, cfg, spec, rng) if spec.is_hybrid else sample_neighborhood(s, cfg, spec, rng)).actions
              for s in scaled]
    sizes = np.array([len(b) for b in blocks])
    q = np.asarray(critic(np.repeat(states, sizes, axis=0), np.concatenate(blocks)), dtype=float)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    return np.stack([b[int(np.argmax(q[o:o + n]))] for b, o, n in zip(blocks, starts, sizes)])


def hybrid_select(state: np.ndarray, actor: Actor, critic: Critic, cfg: SdnConfig, spec: ActionSpaceSpec,
                  sigma_c: float | None, mode: str, rng: np.random.Generator) -> np.ndarray:
    if not spec.is_hybrid:
        raise ValueError("hybrid_select needs at least one continuous dimension")
    proto = perturbed_proto(state, actor, cfg.proto_noise, mode, rng)
    cands = hybrid_candidates(scale_proto(proto, spec), cfg, spec, rng, sigma_c)
    cands.q_values = np.asarray(critic(state, cands.actions), dtype=float)
    return cands.actions[_choose(cands.q_values, mode, cfg, rng)]


def axial_neighbors(center: np.ndarray, spec: ActionSpaceSpec, radius: int = 1) -> np.ndarray:
    """Points reached by moving one discrete coordinate by ``1..radius`` in either direction.

    Out-of-bounds moves are dropped; the center itself is not included.
    """
    c = np.asarray(center, dtype=float)
    n = spec.n_dims
    steps = np.concatenate([np.arange(1, radius + 1), -np.arange(1, radius + 1)])
    out = np.repeat(c[None, :], n * steps.size, axis=0)
    dims = np.repeat(np.arange(n), steps.size)
    out[np.arange(out.shape[0]), dims] += np.tile(steps, n)
    ok = (out[:, :n] >= spec.low).all(axis=1) & (out[:, :n] <= spec.high).all(axis=1)
    return out[ok]


def axial_greedy(scaled: np.ndarray, state: np.ndarray, critic: Critic, steps: int,
                 spec: ActionSpaceSpec) -> np.ndarray:
    """Greedy hill climbing over single-coordinate +-1 moves, starting at the nearest neighbor."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    current = nearest_neighbor(scaled, spec)
    best_q = float(critic(state, current[None, :])[0])
    for _ in range(steps):
        nbrs = axial_neighbors(current, spec)
        if len(nbrs) == 0:
            break
        q = np.asarray(critic(state, nbrs), dtype=float)
        k = int(np.argmax(q))
        if q[k] <= best_q:
            break
        current, best_q = nbrs[k], float(q[k])
    return current


def axial_greedy_baseline(state: np.ndarray, actor: Actor, critic: Critic, steps: int, spec: ActionSpaceSpec,
                          noise: float = 0.0, mode: str = "eval",
                          rng: np.random.Generator | None = None) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng(0)
    proto = perturbed_proto(state, actor, noise, mode, rng)
    return axial_greedy(scale_proto(proto, spec), state, critic, steps, spec)


def round_only_baseline(state: np.ndarray, actor: Actor, spec: ActionSpaceSpec, noise: float = 0.0,
                        mode: str = "eval", rng: np.random.Generator | None = None) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng(0)
    proto = perturbed_proto(state, actor, noise, mode, rng)
    return nearest_neighbor(scale_proto(proto, spec), spec)
