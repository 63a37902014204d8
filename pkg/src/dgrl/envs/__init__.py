"""Benchmark environments with a common ``reset() / step(action)`` interface.

``step`` returns ``(observation, reward, done, info)``; ``done`` covers both
true termination and the time limit, and ``info["truncated"]`` tells them
apart. Observations are scaled to ``[0, 1]``.
"""

from __future__ import annotations

from .inventory import InventoryConfig, InventoryEnv, inventory_cost
from .jobshop import JobShopConfig, JobShopEnv, jobshop_reward
from .maze import ActionError, MazeConfig, MazeEnv
from .recommender import (
    DataError,
    FormatError,
    RecommenderConfig,
    RecommenderEnv,
    acceptance_probability,
    build_similarity,
    load_feature_matrix,
    mnl_choice,
    mnl_probabilities,
    synth_feature_matrix,
)

ENV_IDS = ("maze", "jobshop", "inventory", "recommender")
VARIANTS = ("structured", "irregular", "hybrid")


def make_env(env_id: str, variant: str = "structured", seed: int | None = None, **params):
    """Build an environment by id; ``params`` are fields of the matching config dataclass."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if env_id == "maze":
        return MazeEnv(MazeConfig(structured=variant != "irregular", hybrid=variant == "hybrid", **params), seed)
    if variant != "structured" and env_id in ("jobshop", "inventory"):
        raise ValueError(f"{env_id} only has a structured variant")
    if env_id == "jobshop":
        return JobShopEnv(JobShopConfig(**params), seed)
    if env_id == "inventory":
        return InventoryEnv(InventoryConfig(**params), seed)
    if env_id == "recommender":
        if variant == "irregular":
            raise ValueError("recommender variants are structured (discrete) or hybrid")
        return RecommenderEnv(RecommenderConfig(hybrid=variant == "hybrid", **params), seed)
    raise ValueError(f"unknown environment {env_id!r}")


__all__ = [
    "ENV_IDS", "VARIANTS", "make_env", "ActionError", "DataError", "FormatError",
    "MazeConfig", "MazeEnv", "JobShopConfig", "JobShopEnv", "jobshop_reward",
    "InventoryConfig", "InventoryEnv", "inventory_cost", "RecommenderConfig", "RecommenderEnv",
    "acceptance_probability", "build_similarity", "load_feature_matrix", "mnl_choice",
    "mnl_probabilities", "synth_feature_matrix",
]
