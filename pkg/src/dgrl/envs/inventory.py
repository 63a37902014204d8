"""Joint replenishment with order-up-to actions and Poisson demand."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spaces import ActionSpaceSpec
from .maze import ActionError


@dataclass
class InventoryConfig:
    items: int = 20
    holding: float = 1.0
    backorder: float = 19.0
    ordering: float = 10.0
    joint_ordering: float = 75.0
    max_level: int = 66
    demand_rates: tuple[float, float] = (10.0, 20.0)
    initial_inventory: int = 25
    horizon: int = 100
    # "indicator": o_i per item ordered; "quantity": o_i per unit ordered
    order_cost_mode: str = "indicator"
    obs_low: float = -200.0


def inventory_cost(post_demand: np.ndarray, ordered: np.ndarray, cfg: InventoryConfig) -> float:
    inv = np.asarray(post_demand, dtype=float)
    q = np.asarray(ordered, dtype=float)
    per_item = q if cfg.order_cost_mode == "quantity" else (q > 0).astype(float)
    cost = np.sum(cfg.holding * np.maximum(inv, 0.0) + cfg.backorder * np.maximum(-inv, 0.0)
                  + cfg.ordering * per_item)
    return float(cost + cfg.joint_ordering * float(q.sum() > 0))


class InventoryEnv:
    def __init__(self, cfg: InventoryConfig | None = None, seed: int | None = None):
        self.cfg = cfg or InventoryConfig()
        c = self.cfg
        if c.order_cost_mode not in ("indicator", "quantity"):
            raise ValueError(f"unknown order cost mode {c.order_cost_mode!r}")
        self.spec = ActionSpaceSpec.uniform(c.items, c.max_level + 1)
        half = c.items // 2
        self.rates = np.where(np.arange(c.items) < half, c.demand_rates[0], c.demand_rates[1])
        self.observation_dim = c.items
        self.rng = np.random.default_rng(seed)
        self.inventory = np.full(c.items, c.initial_inventory, dtype=np.int64)
        self.t = 0

    def observe(self) -> np.ndarray:
        c = self.cfg
        return np.clip((self.inventory - c.obs_low) / (c.max_level - c.obs_low), 0.0, 1.0)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.inventory = np.full(self.cfg.items, self.cfg.initial_inventory, dtype=np.int64)
        self.t = 0
        return self.observe()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        c = self.cfg
        level = np.asarray(action, dtype=float).reshape(-1)
        if level.size != c.items or np.any(level != np.rint(level)) or np.any(level < 0) or np.any(level > c.max_level):
            raise ActionError(f"order-up-to levels must be integers in [0, {c.max_level}]")
        level = level.astype(np.int64)
        q = np.maximum(0, level - self.inventory)
        demand = self.rng.poisson(self.rates)
        pre = self.inventory
        self.inventory = self.inventory + q - demand
        reward = -inventory_cost(self.inventory, q, c)
        self.t += 1
        truncated = self.t >= c.horizon
        info = {"truncated": truncated, "ordered": q, "demand": demand, "pre_inventory": pre}
        return self.observe(), reward, truncated, info
