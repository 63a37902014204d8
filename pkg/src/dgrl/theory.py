"""Seeded finite-sample checks of the geometric and statistical claims behind SDN and DBU.

Statistical tolerances are three standard errors unless a check says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dbu import DbuConfig, dbu_gradient_variance_probe
from .nn import forward, init_mlp
from .sdn import SdnConfig, axial_neighbors, draw_candidates
from .spaces import ActionSpaceSpec

REPORT_HEADER = """\
Not checked here (bounds in expectation, not finite-sample assertions):
  - Lipschitz bound on the SDN value gap
  - monotonic improvement of DBU updates
  - regret floor of hybrid updates
These are covered only indirectly, through the learning-curve runs."""


@dataclass
class CheckReport:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {"check": self.name, "passed": self.passed, "measured": self.measured,
                "expected": self.expected, "tolerance": self.tolerance}


def format_reports(reports: list[CheckReport]) -> str:
    lines = [REPORT_HEADER, "", f"{'check':<24}{'pass':<6}{'measured':>14}{'expected':>14}{'tolerance':>12}"]
    for r in reports:
        lines.append(f"{r.name:<24}{'yes' if r.passed else 'NO':<6}{r.measured:>14.6g}{r.expected:>14.6g}{r.tolerance:>12.4g}")
    return "\n".join(lines)


def check_chebyshev_invariance(dims: list[int], radius: int = 1, samples: int = 200, seed: int = 0) -> CheckReport:
    """L-infinity reach of sampled candidates is ``radius`` for every N, while L2 reach scales with sqrt(N).

    Two probes per dimension count N:

    * integer-centred proto: the largest sampled L-infinity offset must equal
      ``radius`` exactly;
    * half-integer proto with radius 1: every coordinate sits exactly
      ``eps = 0.5`` from the proto, so the largest L2 offset is compared with
      ``eps * sqrt(N)`` (5% relative tolerance).
    """
    if len(dims) < 1:
        raise ValueError("need at least one dimension count")
    rng = np.random.default_rng(seed)
    eps = 0.5
    linf, l2, rel_err = [], [], []
    for n in dims:
        size = 2 * radius + 3
        spec = ActionSpaceSpec.uniform(n, size)
        center = np.full(n, float(radius + 1))
        cands = draw_candidates(center, SdnConfig(radius=radius, samples=samples), spec, samples, rng)
        linf.append(float(np.abs(cands - center).max()))
        half = center + 0.5
        cands = draw_candidates(half, SdnConfig(radius=1, samples=samples), spec, samples, rng)
        d2 = float(np.sqrt(((cands - half) ** 2).sum(axis=1)).max())
        l2.append(d2)
        rel_err.append(abs(d2 - eps * np.sqrt(n)) / (eps * np.sqrt(n)))
    ok = all(v == radius for v in linf) and max(rel_err) <= 0.05
    return CheckReport("chebyshev_invariance", ok, max(linf), float(radius), 0.05,
                       {"dims": list(dims), "max_linf": linf, "max_l2": l2, "l2_rel_err": rel_err, "eps": eps})


def _temperature_for_mass(p: float) -> tuple[float, bool]:
    """Sampling temperature giving one option mass ``p`` in a 1-D radius-1 ball around an integer.

    Linear weights are ``1 + tau`` for the centre and ``tau`` for each
    neighbour, so the centre has mass ``(1 + tau) / (1 + 3 tau)`` (> 1/3) and a
    neighbour ``tau / (1 + 3 tau)`` (< 1/3). Returns ``(tau, optimum_is_centre)``.
    """
    if p > 1.0 / 3.0:
        return (1.0 - p) / (3.0 * p - 1.0), True
    if p < 1.0 / 3.0:
        return p / (1.0 - 3.0 * p), False
    return 1e12, True


def check_consistency(p: float, samples: int, trials: int, seed: int = 0) -> CheckReport:
    """Miss rate of a ``samples``-draw neighborhood versus ``(1 - p) ** samples``.

    The optimum is a single integer carrying sampling mass ``p``; a miss means
    none of the raw draws hit it.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    rng = np.random.default_rng(seed)
    if p == 1.0:
        spec = ActionSpaceSpec(np.array([5]), np.array([5]))
        tau, optimum = 1.0, 5.0
    else:
        spec = ActionSpaceSpec(np.array([0]), np.array([10]))
        tau, at_centre = _temperature_for_mass(p)
        optimum = 5.0 if at_centre else 6.0
    cfg = SdnConfig(radius=1, samples=samples, sampling_temperature=tau)
    misses = 0
    chunk = 2000
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        draws = draw_candidates(np.array([5.0]), cfg, spec, m * samples, rng).reshape(m, samples)
        misses += int((~np.any(draws == optimum, axis=1)).sum())
        done += m
    rate = misses / trials
    expected = (1.0 - p) ** samples
    se = np.sqrt(expected * (1.0 - expected) / trials)
    ok = abs(rate - expected) <= 3.0 * se if se > 0 else rate == expected
    return CheckReport("consistency", bool(ok), rate, expected, 3.0 * se,
                       {"p": p, "samples": samples, "trials": trials, "temperature": tau})


def check_support_coverage(d: int, radius: int, draws: int, seed: int = 0) -> CheckReport:
    """Points of the integer L-infinity ball reached by SDN sampling versus by one axial step."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    spec = ActionSpaceSpec.uniform(d, 2 * radius + 3)
    center = np.full(d, float(radius + 1))
    cands = draw_candidates(center, SdnConfig(radius=radius), spec, draws, rng)
    covered = len(np.unique(cands, axis=0))
    ball = (2 * radius + 1) ** d
    axial = len(np.unique(np.vstack([center[None, :], axial_neighbors(center, spec, radius)]), axis=0))
    ok = covered == ball and axial == 2 * d * radius + 1
    return CheckReport("support_coverage", ok, covered / ball, 1.0, 0.0,
                       {"covered": covered, "ball": ball, "axial": axial, "axial_expected": 2 * d * radius + 1})


def score_function_relative_variance(q_fn, n_actions: int, trials: int, rng: np.random.Generator) -> float:
    """Relative variance ``tr Cov(g) / |E g|^2`` of the REINFORCE gradient under uniform logits.

    ``g = f(a) (e_a - pi)`` with ``a`` uniform over ``n_actions`` joint actions
    and ``f = q_fn(indices)``; the estimate is built from ``trials`` samples.
    The mean gradient is computed exactly, the second moment by sampling.
    """
    f_all = np.asarray(q_fn(np.arange(n_actions)), dtype=float)
    pi = 1.0 / n_actions
    mean_g = pi * (f_all - f_all.mean())
    a = rng.integers(0, n_actions, size=trials)
    f = f_all[a]
    second = float(np.mean(f * f) * (1.0 - pi))
    signal = float(mean_g @ mean_g)
    return (second - signal) / signal


def check_variance_cardinality(per_dim_sizes: list[int], trials: int, n_dims: int = 2, seed: int = 0,
                               max_ratio: float = 3.0) -> CheckReport:
    """DBU gradient variance should not depend on the number of values per dimension.

    Actor and critic are fixed random networks; the critic reads actions
    normalised to ``[0, 1]`` so the same function is scored on every space.
    The contrast is a score-function gradient over the joint action set,
    whose relative variance grows with the number of joint actions.
    """
    rng = np.random.default_rng(seed)
    state = rng.uniform(size=4)
    actor = init_mlp([4, 16, n_dims], rng, output_activation="tanh")
    critic_net = init_mlp([4 + n_dims, 32, 1], rng, hidden_activation="tanh")

    def critic(states, actions_norm):
        return forward(critic_net, np.concatenate([states, actions_norm], axis=1))[:, 0]

    dbu_vars = dbu_gradient_variance_probe(state, actor, critic, DbuConfig(), list(per_dim_sizes), trials,
                                           n_dims=n_dims, seed=seed)
    sf_vars = []
    for size in per_dim_sizes:
        def q_fn(idx, size=size):
            coords = np.stack(np.unravel_index(idx, (size,) * n_dims), axis=1) / max(size - 1, 1)
            return critic(np.repeat(state[None, :], len(idx), axis=0), coords)
        sf_vars.append(score_function_relative_variance(q_fn, size ** n_dims, trials, np.random.default_rng(seed)))
    dbu_ratio = max(dbu_vars) / min(dbu_vars)
    sf_ratio = max(sf_vars) / min(sf_vars)
    monotone = all(b > a for a, b in zip(sf_vars, sf_vars[1:]))
    ok = dbu_ratio <= max_ratio and (len(per_dim_sizes) < 2 or (monotone and sf_ratio > dbu_ratio))
    return CheckReport("variance_cardinality", bool(ok), dbu_ratio, 1.0, max_ratio,
                       {"sizes": list(per_dim_sizes), "dbu_variance": dbu_vars, "score_function_rel_variance": sf_vars,
                        "score_function_ratio": sf_ratio})


def run_all(seed: int = 0) -> list[CheckReport]:
    return [
        check_chebyshev_invariance([2, 10, 50], radius=1, seed=seed),
        check_consistency(0.5, 4, 10_000, seed=seed),
        check_support_coverage(2, 1, 1000, seed=seed),
        check_variance_cardinality([5, 17, 65], 10_000, seed=seed),
    ]
