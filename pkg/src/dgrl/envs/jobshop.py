"""Job-shop allocation with stochastic machine wear."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spaces import ActionSpaceSpec
from .maze import ActionError


@dataclass
class JobShopConfig:
    machines: int = 10
    capacity: int = 10
    job_reward: float = 2.0
    energy_cap: float = 100.0
    wear_max: float = 10.0
    wear_init: float = 1.0
    deterioration: tuple[float, float] = (0.05, 0.4)
    repair: tuple[float, float] = (-0.4, -0.05)
    high_utilisation: float = 0.75
    low_utilisation: float = 0.5
    horizon: int = 100


def jobshop_reward(allocation: np.ndarray, wear: np.ndarray, cfg: JobShopConfig) -> float:
    """Job revenue minus capped energy cost, minus the population std of the allocation."""
    a = np.asarray(allocation, dtype=float)
    energy = np.minimum(a * (1.0 + wear), cfg.energy_cap)
    return float(np.sum(a * cfg.job_reward - energy) - np.std(a))


class JobShopEnv:
    def __init__(self, cfg: JobShopConfig | None = None, seed: int | None = None):
        self.cfg = cfg or JobShopConfig()
        self.spec = ActionSpaceSpec.uniform(self.cfg.machines, self.cfg.capacity + 1)
        self.observation_dim = self.cfg.machines
        self.rng = np.random.default_rng(seed)
        self.wear = np.full(self.cfg.machines, self.cfg.wear_init)
        self.t = 0

    def observe(self) -> np.ndarray:
        return self.wear / self.cfg.wear_max

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.wear = np.full(self.cfg.machines, self.cfg.wear_init)
        self.t = 0
        return self.observe()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        c = self.cfg
        a = np.asarray(action, dtype=float).reshape(-1)
        if a.size != c.machines or np.any(a < 0) or np.any(a != np.rint(a)):
            raise ActionError("allocation must be a non-negative integer vector, one entry per machine")
        reward = jobshop_reward(a, self.wear, c)
        util = a / c.capacity
        up = util > c.high_utilisation
        down = util < c.low_utilisation
        delta = np.zeros(c.machines)
        delta[up] = self.rng.uniform(*c.deterioration, size=int(up.sum()))
        delta[down] = self.rng.uniform(*c.repair, size=int(down.sum()))
        self.wear = np.clip(self.wear + delta, 0.0, c.wear_max)
        self.t += 1
        truncated = self.t >= c.horizon
        return self.observe(), reward, truncated, {"truncated": truncated}
