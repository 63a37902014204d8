"""Training loop, evaluation protocol and per-environment hyperparameter presets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .dbu import DbuConfig, build_targets, dbu_actor_update
from .nn import AdamState, FourierConfig, Mlp, adam_step, backward, forward, fourier_features, init_mlp
from .rl import CriticPair, ReplayBuffer, Transition, critic_update, init_qnetwork, polyak_update
from .sdn import SdnConfig, axial_greedy_baseline, round_only_baseline, sdn_select, sdn_select_batch
from .spaces import ActionSpaceSpec, critic_scale, scale_gradient, scale_proto

ALGORITHMS = ("dgrl", "axial-greedy", "round-only")

Policy = Callable[[np.ndarray, np.random.Generator], np.ndarray]


class ConfigError(ValueError):
    """Inconsistent or invalid configuration."""


Schedule = tuple[float, float]


def linear_decay(start: float, end: float, episode: int, total: int) -> float:
    if total < 1:
        raise ValueError("total must be >= 1")
    frac = min(max(episode / total, 0.0), 1.0)
    return start * (1.0 - frac) + end * frac


@dataclass
class AgentConfig:
    episodes: int = 200
    algorithm: str = "dgrl"
    # uniform-random actions for the first fraction of episodes (only if enabled)
    random_warmup: bool = False
    warmup_random_frac: float = 0.10
    update_start_frac: float = 0.05
    update_every: int = 8
    batch: int = 16
    gamma: float = 0.99
    # (start, end) pairs decay linearly over the run; equal entries mean constant
    actor_lr: Schedule = (5e-5, 1e-5)
    critic_lr: Schedule = (1e-4, 5e-5)
    proto_noise: Schedule = (0.5, 0.1)
    dbu_perturbation: Schedule = (0.5, 0.1)
    actor_width: int = 32
    critic_width: int = 64
    actor_layers: int = 3
    critic_layers: int = 3
    sdn: SdnConfig = field(default_factory=SdnConfig)
    dbu: DbuConfig = field(default_factory=DbuConfig)
    # "dbu" or "dpg"; None picks dbu for dgrl and the critic's action gradient for the baselines
    actor_update: str | None = None
    axial_steps: int = 2
    fourier_order: int = 0
    state_encoder: bool = False
    polyak: float = 0.02
    buffer_capacity: int = 100_000
    eval_frac: float = 0.02
    eval_episodes: int = 10
    action_width: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("warmup_random_frac", "update_start_frac", "eval_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.update_every < 1 or self.batch < 1:
            raise ConfigError("update_every and batch must be >= 1")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.actor_update not in (None, "dbu", "dpg"):
            raise ConfigError(f"unknown actor update {self.actor_update!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")

    @property
    def resolved_actor_update(self) -> str:
        if self.actor_update is not None:
            return self.actor_update
        return "dbu" if self.algorithm == "dgrl" else "dpg"


@dataclass
class MetricsRecord:
    episode: int
    train_return: float
    eval_return: float | None
    wall_time_ms_per_step: float
    actor_loss: float | None
    critic_loss: float | None
    steps: int = 0


@dataclass
class EvalSummary:
    mean: float
    median: float
    std: float
    returns: np.ndarray


def evaluate(env, policy: Policy, episodes: int, seed: int, max_steps: int = 100_000) -> EvalSummary:
    """Run ``episodes`` episodes with environment seeds and policy randomness derived from ``seed``."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    env_ss, pol_ss = np.random.SeedSequence(seed).spawn(2)
    env_seeds = env_ss.generate_state(episodes)
    rng = np.random.default_rng(pol_ss)
    returns = np.empty(episodes)
    for e in range(episodes):
        obs = env.reset(seed=int(env_seeds[e]))
        total, done, t = 0.0, False, 0
        while not done and t < max_steps:
            obs, r, done, _ = env.step(policy(obs, rng))
            total += r
            t += 1
        returns[e] = total
    return EvalSummary(float(returns.mean()), float(np.median(returns)), float(returns.std()), returns)


def random_policy(spec: ActionSpaceSpec) -> Policy:
    return lambda obs, rng: spec.sample(rng)


class Agent:
    """Actor, twin critics, optimizers and the configured action-selection rule."""

    def __init__(self, spec: ActionSpaceSpec, observation_dim: int, cfg: AgentConfig, rng: np.random.Generator):
        self.spec = spec
        self.cfg = cfg
        self.sdn = replace(cfg.sdn, proto_noise=cfg.proto_noise[0])
        self.dbu = replace(cfg.dbu, perturbation=cfg.dbu_perturbation[0])
        self.fourier = FourierConfig(cfg.fourier_order, observation_dim) if cfg.fourier_order > 0 else None
        feat = self.fourier.output_dim if self.fourier else observation_dim
        self.actor: Mlp = init_mlp([feat] + [cfg.actor_width] * cfg.actor_layers + [spec.width], rng,
                                   output_activation="tanh")
        q1, q2 = (init_qnetwork(feat, spec.width, cfg.critic_width, rng, cfg.state_encoder, cfg.critic_layers)
                  for _ in range(2))
        self.critics = CriticPair(q1, q2, spec, cfg.polyak)
        self.actor_opt = AdamState(self.actor.params(), lr=cfg.actor_lr[0])
        self.critic_opts = (AdamState(q1.params(), lr=cfg.critic_lr[0]), AdamState(q2.params(), lr=cfg.critic_lr[0]))

    def features(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        return fourier_features(obs, self.fourier) if self.fourier else obs

    def set_schedule(self, episode: int, total: int) -> None:
        c = self.cfg
        self.actor_opt.lr = linear_decay(*c.actor_lr, episode, total)
        lr = linear_decay(*c.critic_lr, episode, total)
        for opt in self.critic_opts:
            opt.lr = lr
        self.sdn.proto_noise = linear_decay(*c.proto_noise, episode, total)
        self.dbu.perturbation = linear_decay(*c.dbu_perturbation, episode, total)

    def actor_fn(self, feats: np.ndarray) -> np.ndarray:
        return forward(self.actor, feats)

    def select(self, feats: np.ndarray, mode: str, rng: np.random.Generator, target: bool = False) -> np.ndarray:
        critic = self.critics.target_min if target else self.critics.online_min
        alg = self.cfg.algorithm
        if alg == "dgrl":
            return sdn_select(feats, self.actor_fn, critic, self.sdn, self.spec, mode, rng)
        if alg == "axial-greedy":
            return axial_greedy_baseline(feats, self.actor_fn, critic, self.cfg.axial_steps, self.spec,
                                         self.sdn.proto_noise, mode, rng)
        return round_only_baseline(feats, self.actor_fn, self.spec, self.sdn.proto_noise, mode, rng)

    def policy(self, mode: str = "eval") -> Policy:
        return lambda obs, rng: self.select(self.features(obs), mode, rng)

    def _dpg_update(self, states: np.ndarray) -> float:
        out = forward(self.actor, states)
        a_norm = critic_scale(scale_proto(out, self.spec), self.spec)
        q = self.critics.q1(states, a_norm)
        span = self.spec.flat_high - self.spec.flat_low
        d_norm = np.where(span > 0, scale_gradient(self.spec) / np.where(span > 0, span, 1.0), 0.0)
        g_out = -self.critics.q1.action_gradient(states, a_norm) * d_norm / len(states)
        grads, _ = backward(self.actor, states, g_out)
        adam_step(self.actor_opt, grads)
        return float(-q.mean())

    def update(self, buffer: ReplayBuffer, rngs: dict[str, np.random.Generator]) -> tuple[float, float]:
        """One critic step, a polyak step and one actor step; returns (critic_loss, actor_loss)."""
        batch = buffer.sample_batch(self.cfg.batch, rngs["buffer"])

        def next_actions(next_states: np.ndarray) -> np.ndarray:
            if self.cfg.algorithm == "dgrl":
                return sdn_select_batch(next_states, self.actor_fn, self.critics.target_min, self.sdn, self.spec,
                                        rngs["target"])
            return np.stack([self.select(s, "eval", rngs["target"], target=True) for s in next_states])

        c_loss = critic_update(self.critics, batch, next_actions, self.cfg.gamma, self.critic_opts)
        polyak_update(self.critics)
        if self.cfg.resolved_actor_update == "dbu":
            targets = build_targets(batch.states, self.actor, self.critics.online_min, self.dbu, self.spec, rngs["dbu"])
            a_loss = dbu_actor_update(self.actor, batch.states, targets, self.actor_opt, self.spec, self.dbu)
        else:
            a_loss = self._dpg_update(batch.states)
        return c_loss, a_loss

    def weights(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, params in (("actor", self.actor.params()), ("q1", self.critics.q1.params()),
                             ("q2", self.critics.q2.params())):
            for i, p in enumerate(params):
                out[f"{name}_{i}"] = p.copy()
        return out


_STREAMS = ("init", "explore", "buffer", "target", "dbu", "env", "eval")


def _eval_every(cfg: AgentConfig) -> int:
    return max(1, int(round(cfg.eval_frac * cfg.episodes)))


def train_agent(env, cfg: AgentConfig) -> tuple[Agent, list[MetricsRecord]]:
    spec: ActionSpaceSpec = env.spec
    if cfg.action_width is not None and cfg.action_width != spec.width:
        raise ConfigError(f"config expects {cfg.action_width} action dims, environment has {spec.width}")
    rngs = {k: np.random.default_rng(s) for k, s in zip(_STREAMS, np.random.SeedSequence(cfg.seed).spawn(len(_STREAMS)))}
    agent = Agent(spec, env.observation_dim, cfg, rngs["init"])
    buffer = ReplayBuffer(cfg.buffer_capacity)
    eval_seed = int(rngs["eval"].integers(2**31))
    warmup_eps = int(np.ceil(cfg.warmup_random_frac * cfg.episodes)) if cfg.random_warmup else 0
    start_eps = int(np.ceil(cfg.update_start_frac * cfg.episodes))
    every = _eval_every(cfg)
    records: list[MetricsRecord] = []
    total_steps = 0
    for ep in range(cfg.episodes):
        agent.set_schedule(ep, cfg.episodes)
        obs = env.reset(seed=int(rngs["env"].integers(2**31)))
        feats = agent.features(obs)
        ret, done, steps = 0.0, False, 0
        a_losses, c_losses = [], []
        t0 = time.perf_counter()
        while not done:
            if ep < warmup_eps:
                action = spec.sample(rngs["explore"])
            else:
                action = agent.select(feats, "train", rngs["explore"])
            obs, r, done, info = env.step(action)
            next_feats = agent.features(obs)
            terminal = bool(done and not info.get("truncated", False))
            buffer.push(Transition(feats, np.asarray(action, dtype=float), float(r), next_feats, terminal))
            feats = next_feats
            ret += r
            steps += 1
            total_steps += 1
            if ep >= start_eps and total_steps % cfg.update_every == 0 and len(buffer) >= cfg.batch:
                c, a = agent.update(buffer, rngs)
                c_losses.append(c)
                a_losses.append(a)
        elapsed = (time.perf_counter() - t0) * 1e3 / max(steps, 1)
        eval_ret = None
        if (ep + 1) % every == 0 or ep + 1 == cfg.episodes:
            eval_ret = evaluate(env, agent.policy("eval"), cfg.eval_episodes, eval_seed).mean
        records.append(MetricsRecord(ep, float(ret), eval_ret, elapsed,
                                     float(np.mean(a_losses)) if a_losses else None,
                                     float(np.mean(c_losses)) if c_losses else None, steps))
    return agent, records


def train(env, cfg: AgentConfig) -> list[MetricsRecord]:
    return train_agent(env, cfg)[1]


def peak_eval_return(records: list[MetricsRecord]) -> float:
    vals = [r.eval_return for r in records if r.eval_return is not None]
    if not vals:
        raise ValueError("no evaluation checkpoints in the record list")
    return float(max(vals))


def preset(env_id: str, variant: str = "structured", **env_params) -> AgentConfig:
    """Hyperparameter defaults per environment and action-space size."""
    if env_id == "maze":
        large = env_params.get("n_actuators", 5) > 5 or env_params.get("d", 4) > 4
        if large:
            return AgentConfig(actor_width=64, critic_width=128, actor_lr=(1e-5, 5e-6), critic_lr=(5e-5, 1e-5),
                               sdn=SdnConfig(radius=2, samples=20), dbu=DbuConfig(candidates=20),
                               fourier_order=3, state_encoder=True)
        return AgentConfig(actor_width=32, critic_width=64, actor_lr=(5e-5, 1e-5), critic_lr=(1e-4, 5e-5),
                           proto_noise=(0.5, 0.1), dbu_perturbation=(0.5, 0.1),
                           sdn=SdnConfig(radius=1, samples=10), dbu=DbuConfig(candidates=10),
                           fourier_order=3, state_encoder=True)
    if env_id == "jobshop":
        return AgentConfig(random_warmup=True, actor_width=32, critic_width=64, actor_lr=(5e-5, 1e-5),
                           critic_lr=(1e-4, 5e-5), proto_noise=(0.1, 0.01), dbu_perturbation=(0.05, 0.01),
                           sdn=SdnConfig(radius=1, samples=10), dbu=DbuConfig(candidates=10))
    if env_id == "inventory":
        return AgentConfig(random_warmup=True, actor_width=32, critic_width=64, actor_lr=(5e-5, 1e-5),
                           critic_lr=(1e-4, 5e-5), proto_noise=(0.1, 0.05), dbu_perturbation=(0.5, 0.2),
                           sdn=SdnConfig(radius=4, samples=40), dbu=DbuConfig(candidates=40))
    if env_id == "recommender":
        many = env_params.get("recommendations", 1) > 1
        return AgentConfig(random_warmup=True, actor_width=128 if many else 64, critic_width=256 if many else 128,
                           actor_lr=(5e-5, 5e-5), critic_lr=(1e-4, 1e-4), proto_noise=(0.1, 0.1),
                           dbu_perturbation=(0.5, 0.1), sdn=SdnConfig(radius=10, samples=100 if many else 10),
                           dbu=DbuConfig(candidates=100 if many else 10), fourier_order=3, state_encoder=True)
    raise ConfigError(f"unknown environment {env_id!r}")
