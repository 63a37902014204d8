"""Hybrid recommender: pick two movies and a price for each.

Shows the logit choice model on a synthetic catalogue, then trains a short
DGRL run and compares it with a random policy. Short runs land close to the
random baseline; the catalogue is small and session length noise is large.
Usage: python3 demos/recommender_hybrid.py [episodes]
"""

import sys
from dataclasses import replace

import numpy as np

from dgrl import evaluate, preset
from dgrl.agent import random_policy, train_agent
from dgrl.envs import RecommenderConfig, RecommenderEnv, mnl_probabilities

env = RecommenderEnv(RecommenderConfig(catalog=120, recommendations=2, hybrid=True), seed=0)
i = env.reset(seed=0)
c = env.cfg
recs, prices = np.array([5, 17]), np.array([1.0, 4.0])
util = np.concatenate([[c.kappa_outside], c.kappa_similarity * env.similarity[env.current, recs] - c.kappa_price * prices])
print("choice probabilities (outside option first):", np.round(mnl_probabilities(util), 3).tolist())

cfg = replace(preset("recommender", "hybrid", recommendations=2), episodes=int(sys.argv[1]) if len(sys.argv) > 1 else 150, eval_frac=0.25, eval_episodes=5)
agent, recs_log = train_agent(env, cfg)
# returns are dominated by the random session length, so score on many episodes
n = 500
trained = evaluate(env, agent.policy("eval"), n, seed=1)
rand = evaluate(env, random_policy(env.spec), n, seed=1)
se = lambda r: r.std / np.sqrt(n)
print(f"eval return after {cfg.episodes} training episodes, {n} test episodes: "
      f"{trained.mean:.2f} +- {se(trained):.2f} (random policy {rand.mean:.2f} +- {se(rand):.2f})")
