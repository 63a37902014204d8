"""Train DGRL and the axial-greedy baseline on the 5^4 maze and print eval curves.

Usage: python3 demos/maze_learning_curve.py [structured|irregular] [episodes]
"""

import sys
from dataclasses import replace

from dgrl import preset
from dgrl.agent import peak_eval_return, train
from dgrl.envs import make_env

variant = sys.argv[1] if len(sys.argv) > 1 else "structured"
episodes = int(sys.argv[2]) if len(sys.argv) > 2 else 150

env = make_env("maze", variant, seed=0)
if variant == "irregular":
    print("actuator labels seen by the agent map to directions", env.spec.permutation[0].tolist())

for alg in ("dgrl", "axial-greedy"):
    cfg = replace(preset("maze"), episodes=episodes, algorithm=alg, eval_frac=0.05, seed=0)
    recs = train(make_env("maze", variant, seed=0), cfg)
    curve = [(r.episode + 1, r.eval_return) for r in recs if r.eval_return is not None]
    print(f"\n{alg}: peak eval return {peak_eval_return(recs):.2f}")
    for ep, ret in curve:
        bar = "#" * max(0, int((ret + 50) / 2))
        print(f"  ep {ep:4d} {ret:7.2f} {bar}")
