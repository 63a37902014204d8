"""Continuous 2-D maze steered by choosing ``d`` of ``n`` actuators.

Layout (unit square, fixed): start at (0.15, 0.15), target region
``[0.75, 1] x [0.75, 1]`` and three wall segments

* x = 0.5 for y in [0, 0.35]
* y = 0.55 for x in [0, 0.35]
* y = 0.3 for x in [0.65, 1]

Actuator 0 does nothing; actuators ``1..n-1`` are unit directions evenly
spaced on the circle (counter-clockwise from +x) scaled to ``actuator_length``.
The chosen vectors are summed and the result is capped at ``max_step``.
Moves that would cross a wall are cancelled, moves past the border are
clipped to the square. With the default constants the target is two steps
away, so the best achievable return is ``10 - 0.5 = 9.5``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spaces import ActionSpaceSpec


class ActionError(ValueError):
    """Action outside the environment's action space."""


DEFAULT_WALLS = ((0.5, 0.0, 0.5, 0.35), (0.0, 0.55, 0.35, 0.55), (0.65, 0.3, 1.0, 0.3))


@dataclass
class MazeConfig:
    n_actuators: int = 5
    d: int = 4
    max_step_size: float = 0.5
    actuator_length: float = 0.25
    start: tuple[float, float] = (0.15, 0.15)
    target: tuple[float, float, float, float] = (0.75, 0.75, 1.0, 1.0)  # x0, y0, x1, y1
    walls: tuple[tuple[float, float, float, float], ...] = DEFAULT_WALLS
    structured: bool = True
    hybrid: bool = False
    step_reward: float = -0.5
    goal_reward: float = 10.0
    max_steps: int = 100
    movement_noise: float = 0.0
    permutation_seed: int = 7


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> bool:
    eps = 1e-12
    return (min(ax, bx) - eps <= cx <= max(ax, bx) + eps) and (min(ay, by) - eps <= cy <= max(ay, by) + eps)


def _segments_intersect(p: np.ndarray, q: np.ndarray, walls: np.ndarray) -> bool:
    """Whether segment p->q touches any wall segment (rows x0, y0, x1, y1)."""
    px, py, qx, qy = float(p[0]), float(p[1]), float(q[0]), float(q[1])
    for ax, ay, bx, by in walls.tolist():
        o1, o2 = _orient(px, py, qx, qy, ax, ay), _orient(px, py, qx, qy, bx, by)
        o3, o4 = _orient(ax, ay, bx, by, px, py), _orient(ax, ay, bx, by, qx, qy)
        if o1 * o2 < 0 and o3 * o4 < 0:
            return True
        if ((o1 == 0 and _on_segment(px, py, qx, qy, ax, ay)) or (o2 == 0 and _on_segment(px, py, qx, qy, bx, by))
                or (o3 == 0 and _on_segment(ax, ay, bx, by, px, py)) or (o4 == 0 and _on_segment(ax, ay, bx, by, qx, qy))):
            return True
    return False


class MazeEnv:
    def __init__(self, cfg: MazeConfig | None = None, seed: int | None = None):
        self.cfg = cfg or MazeConfig()
        c = self.cfg
        if c.n_actuators < 2 or c.d < 1:
            raise ValueError("need at least two actuators and one pick")
        k = c.n_actuators - 1
        angles = 2.0 * np.pi * np.arange(k) / k
        self.directions = np.vstack([np.zeros(2), c.actuator_length * np.column_stack([np.cos(angles), np.sin(angles)])])
        perm = None
        if not c.structured:
            prng = np.random.default_rng(c.permutation_seed)
            labels = np.concatenate([[0], 1 + prng.permutation(k)])
            perm = [labels.copy() for _ in range(c.d)]
        cont = ([0.0], [c.max_step_size]) if c.hybrid else ([], [])
        self.spec = ActionSpaceSpec(np.zeros(c.d), np.full(c.d, c.n_actuators - 1), cont[0], cont[1], permutation=perm)
        self.walls = np.asarray(c.walls, dtype=float).reshape(-1, 4)
        self.observation_dim = 2
        self.rng = np.random.default_rng(seed)
        self.pos = np.asarray(c.start, dtype=float)
        self.t = 0

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.pos = np.asarray(self.cfg.start, dtype=float).copy()
        self.t = 0
        return self.pos.copy()

    def in_target(self, pos: np.ndarray) -> bool:
        x0, y0, x1, y1 = self.cfg.target
        return bool(x0 <= pos[0] <= x1 and y0 <= pos[1] <= y1)

    def movement(self, action: np.ndarray) -> np.ndarray:
        """Displacement requested by an agent-side action, before walls and borders."""
        c = self.cfg
        a = np.asarray(action, dtype=float).reshape(-1)
        if a.size != self.spec.width:
            raise ActionError(f"expected action of length {self.spec.width}, got {a.size}")
        disc = a[: c.d]
        if np.any(disc != np.rint(disc)) or np.any(disc < 0) or np.any(disc > c.n_actuators - 1):
            raise ActionError(f"actuator indices must be integers in [0, {c.n_actuators - 1}]")
        labels = self.spec.relabel(disc.astype(np.int64))
        move = self.directions[labels].sum(axis=0)
        norm = float(np.hypot(*move))
        if c.hybrid:
            size = float(np.clip(a[c.d], 0.0, c.max_step_size))
            return move / norm * size if norm > 0 else np.zeros(2)
        if norm > c.max_step_size:
            move = move * (c.max_step_size / norm)
        return move

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        c = self.cfg
        move = self.movement(action)
        if c.movement_noise > 0:
            move = move + c.movement_noise * self.rng.standard_normal(2)
        new = np.clip(self.pos + move, 0.0, 1.0)
        if _segments_intersect(self.pos, new, self.walls):
            new = self.pos.copy()
        self.pos = new
        self.t += 1
        if self.in_target(new):
            return new.copy(), c.goal_reward, True, {"truncated": False}
        truncated = self.t >= c.max_steps
        return new.copy(), c.step_reward, truncated, {"truncated": truncated}
