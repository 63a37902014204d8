"""Look inside one SDN selection step.

Prints the per-coordinate sampling options around a proto-action, one
sampled candidate set, and which candidate a toy critic picks in eval mode
versus how often each is picked under rank-based exploration.
"""

import numpy as np

from dgrl import ActionSpaceSpec, SdnConfig
from dgrl.sdn import coordinate_options, rank_probabilities, sample_neighborhood, sdn_select
from dgrl.spaces import nearest_neighbor, scale_proto

spec = ActionSpaceSpec.uniform(n_dims=4, size=11)
cfg = SdnConfig(radius=1, samples=8)
proto = np.array([-0.3, 0.05, 0.62, 1.0])
scaled = scale_proto(proto, spec)
print("proto", proto, "-> scaled", scaled, "-> nearest", nearest_neighbor(scaled, spec))

for d, x in enumerate(scaled):
    z, p = coordinate_options(x, cfg.radius, (0, 10))
    print(f"  dim {d}: options {z.tolist()} probs {np.round(p, 3).tolist()}")

rng = np.random.default_rng(0)
cands = sample_neighborhood(scaled, cfg, spec, rng).actions
goal = np.array([3, 6, 8, 9])
critic = lambda state, actions: -np.abs(actions - goal).sum(axis=1)
q = critic(None, cands)
print("\ncandidates (nearest neighbour first) and toy Q = -|a - goal|_1:")
for a, v, p in zip(cands.astype(int), q, rank_probabilities(q, 0.8)):
    print(f"  {a.tolist()}  Q={v:5.1f}  train-mode prob {p:.3f}")

pick = sdn_select(None, lambda s: proto, critic, cfg, spec, "eval", np.random.default_rng(0))
print("\neval-mode pick:", pick.astype(int).tolist())
