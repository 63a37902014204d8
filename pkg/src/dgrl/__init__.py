"""Discrete action selection via sampled neighborhoods and distance-based actor updates."""

from .agent import Agent, AgentConfig, ConfigError, EvalSummary, MetricsRecord, evaluate, linear_decay, preset, train
from .dbu import DbuConfig
from .sdn import SdnConfig, sdn_select
from .spaces import ActionSpaceSpec

__all__ = ["Agent", "AgentConfig", "ActionSpaceSpec", "ConfigError", "DbuConfig", "EvalSummary",
           "MetricsRecord", "SdnConfig", "evaluate", "linear_decay", "preset", "sdn_select", "train"]
