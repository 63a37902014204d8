"""Replay buffer, twin critics with target copies, TD targets and polyak averaging."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .nn import AdamState, Mlp, adam_step, backward, forward, huber_loss, init_mlp
from .spaces import ActionSpaceSpec, critic_scale


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten when full."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._data)

    def __getitem__(self, i: int) -> Transition:
        """Entries in insertion order, oldest first."""
        if len(self._data) < self.capacity:
            return self._data[i]
        return self._data[(self._cursor + i) % self.capacity]

    def push(self, t: Transition) -> None:
        if not np.isfinite(t.reward):
            raise ValueError("transition reward must be finite")
        if len(self._data) < self.capacity:
            self._data.append(t)
        else:
            self._data[self._cursor] = t
        self._cursor = (self._cursor + 1) % self.capacity

    def sample_indices(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if batch < 1 or len(self._data) < batch:
            raise RuntimeError(f"cannot sample {batch} from a buffer holding {len(self._data)}")
        return rng.integers(0, len(self._data), size=batch)

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sampling with replacement."""
        return [self._data[i] for i in self.sample_indices(batch, rng)]

    def sample_batch(self, batch: int, rng: np.random.Generator) -> Batch:
        ts = self.sample(batch, rng)
        return Batch(np.stack([t.state for t in ts]), np.stack([t.action for t in ts]),
                     np.array([t.reward for t in ts], dtype=float), np.stack([t.next_state for t in ts]),
                     np.array([t.terminal for t in ts], dtype=bool))


def td_target(reward, terminal, next_q_min, gamma: float):
    """``r + gamma * min_target_q`` with no bootstrap through terminal states (vectorised)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return np.asarray(reward, dtype=float) + np.where(terminal, 0.0, gamma * np.asarray(next_q_min, dtype=float))


@dataclass
class QNetwork:
    """State-action value net, optionally with a state-only encoding layer in front.

    With an encoder the action joins after the first layer; otherwise state
    and action are concatenated at the input.
    """

    head: Mlp
    encoder: Mlp | None = None

    def params(self) -> list[np.ndarray]:
        return (self.encoder.params() if self.encoder is not None else []) + self.head.params()

    def copy(self) -> "QNetwork":
        return QNetwork(self.head.copy(), None if self.encoder is None else self.encoder.copy())

    def _head_input(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        h = forward(self.encoder, states) if self.encoder is not None else states
        return np.concatenate([h, actions], axis=1)

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return forward(self.head, self._head_input(np.atleast_2d(states), np.atleast_2d(actions)))[:, 0]

    def gradients(self, states: np.ndarray, actions: np.ndarray, out_grad: np.ndarray) -> list[np.ndarray]:
        states, actions = np.atleast_2d(states), np.atleast_2d(actions)
        x = self._head_input(states, actions)
        head_grads, x_grad = backward(self.head, x, np.asarray(out_grad, dtype=float)[:, None])
        if self.encoder is None:
            return head_grads
        enc_width = self.encoder.out_dim
        enc_grads, _ = backward(self.encoder, states, x_grad[:, :enc_width])
        return enc_grads + head_grads

    def action_gradient(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """dQ/da per row, with respect to the (normalised) action input."""
        states, actions = np.atleast_2d(states), np.atleast_2d(actions)
        _, x_grad = backward(self.head, self._head_input(states, actions), np.ones((len(actions), 1)))
        return x_grad[:, -actions.shape[1]:]


def init_qnetwork(state_dim: int, action_dim: int, width: int, rng: np.random.Generator,
                  state_encoder: bool = False, hidden_layers: int = 3) -> QNetwork:
    if state_encoder:
        enc = init_mlp([state_dim, width], rng, output_activation="relu")
        head = init_mlp([width + action_dim] + [width] * (hidden_layers - 1) + [1], rng)
        return QNetwork(head, enc)
    return QNetwork(init_mlp([state_dim + action_dim] + [width] * hidden_layers + [1], rng))


@dataclass
class CriticPair:
    """Two online critics, their target copies, and the action normalisation they share.

    Critics are called with raw actions; they see them rescaled to ``[0, 1]``.
    """

    q1: QNetwork
    q2: QNetwork
    spec: ActionSpaceSpec
    polyak: float = 0.02
    q1_target: QNetwork = field(default=None)  # type: ignore[assignment]
    q2_target: QNetwork = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not 0.0 < self.polyak < 1.0:
            raise ValueError("polyak rate must lie in (0, 1)")
        if self.q1_target is None:
            self.q1_target = self.q1.copy()
        if self.q2_target is None:
            self.q2_target = self.q2.copy()

    def _norm(self, actions: np.ndarray) -> np.ndarray:
        return critic_scale(np.atleast_2d(actions), self.spec)

    def online_min(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        a = self._norm(actions)
        s = np.broadcast_to(np.atleast_2d(states), (len(a), np.atleast_2d(states).shape[1]))
        return np.minimum(self.q1(s, a), self.q2(s, a))

    def target_min(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        a = self._norm(actions)
        s = np.broadcast_to(np.atleast_2d(states), (len(a), np.atleast_2d(states).shape[1]))
        return np.minimum(self.q1_target(s, a), self.q2_target(s, a))


def critic_update(critics: CriticPair, batch: Batch,
                  next_action_selector: Callable[[np.ndarray], np.ndarray], gamma: float,
                  optimizers: tuple[AdamState, AdamState], delta: float = 1.0) -> float:
    """Regress both online critics toward the shared clipped double-Q target.

    ``batch`` holds network-ready state features and raw actions;
    ``next_action_selector`` maps next-state features to next actions.
    Returns the mean Huber loss of the two critics before the step.
    """
    next_actions = next_action_selector(batch.next_states)
    q_next = critics.target_min(batch.next_states, next_actions)
    y = td_target(batch.rewards, batch.terminals, q_next, gamma)
    a = critics._norm(batch.actions)
    losses = []
    for net, opt in zip((critics.q1, critics.q2), optimizers):
        pred = net(batch.states, a)
        loss, g = huber_loss(pred, y, delta)
        grads = net.gradients(batch.states, a, g / len(y))
        adam_step(opt, grads)
        losses.append(loss / len(y))
    return float(np.mean(losses))


def polyak_update(critics: CriticPair) -> None:
    """``target <- (1 - rho) * target + rho * online`` for every parameter, in place."""
    rho = critics.polyak
    for online, target in ((critics.q1, critics.q1_target), (critics.q2, critics.q2_target)):
        for p, t in zip(online.params(), target.params()):
            t *= 1.0 - rho
            t += rho * p
