import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgrl.dbu import (
    DbuConfig,
    build_targets,
    dbu_actor_update,
    dbu_gradient_variance_probe,
    hybrid_loss_parts,
    perturb_candidates,
    softmax_target,
)
from dgrl.nn import AdamState, Mlp, NumericError, forward, init_mlp
from dgrl.spaces import ActionSpaceSpec, scale_proto


def test_config_validation():
    for kw in ({"perturbation": 0.0}, {"candidates": 1}, {"temperature": 0.0}, {"loss": "l1"}):
        with pytest.raises(ValueError):
            DbuConfig(**kw)


def test_tiny_perturbation_gives_nearest_neighbor():
    spec = ActionSpaceSpec.uniform(3, 10)
    c = perturb_candidates(np.array([2.2, 5.7, 9.4]), DbuConfig(perturbation=1e-9, candidates=8), spec,
                           np.random.default_rng(0))
    assert np.all(c == [2, 6, 9])


def test_perturbation_reproducible_and_in_bounds():
    spec = ActionSpaceSpec.uniform(4, 5)
    x = np.array([0.1, 4.0, 2.5, 3.3])
    a = perturb_candidates(x, DbuConfig(perturbation=3.0, candidates=50), spec, np.random.default_rng(3))
    b = perturb_candidates(x, DbuConfig(perturbation=3.0, candidates=50), spec, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert all(spec.contains(r) for r in a)


def test_softmax_target_examples():
    c = np.array([[2.0], [4.0]])
    assert softmax_target(c, np.array([0.0, 0.0]), 1.0) == pytest.approx([3.0])
    assert softmax_target(c, np.array([1.0, 0.0]), 1.0)[0] == pytest.approx(2.0 * 0.7311 + 4.0 * 0.2689, abs=1e-3)
    assert softmax_target(c, np.array([1.0, 0.0]), 1.0)[0] == pytest.approx(2.5379, abs=1e-4)
    assert softmax_target(c, np.array([1.0, 0.0]), 1e-4) == pytest.approx([2.0])
    with pytest.raises(NumericError):
        softmax_target(c, np.array([np.nan, 0.0]), 1.0)
    with pytest.raises(ValueError):
        softmax_target(c[:1], np.array([0.0]), 1.0)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 100_000), m=st.integers(2, 12), n=st.integers(1, 6), temp=st.floats(0.01, 100))
def test_softmax_target_in_bounding_box(seed, m, n, temp):
    rng = np.random.default_rng(seed)
    c = rng.integers(-5, 6, size=(m, n)).astype(float)
    t = softmax_target(c, rng.normal(scale=20, size=m), temp)
    assert np.all(t >= c.min(axis=0) - 1e-12) and np.all(t <= c.max(axis=0) + 1e-12)


def test_hybrid_loss_additive():
    spec = ActionSpaceSpec(np.zeros(2), np.full(2, 9), np.zeros(2), np.full(2, 5.0))
    rng = np.random.default_rng(0)
    cfg = DbuConfig()
    from dgrl.dbu import distance_loss
    for _ in range(50):
        pred, tgt = rng.uniform(0, 9, size=(3, 4)), rng.uniform(0, 9, size=(3, 4))
        jd, jc = hybrid_loss_parts(pred, tgt, spec, cfg)
        total, _ = distance_loss(pred, tgt, cfg)
        assert abs(total - (jd + jc)) <= 1e-12


def _linear_actor(w=0.2, b=0.1):
    return Mlp([(np.array([[w]]), np.array([b]))], output_activation="tanh")


def test_actor_update_fixed_point():
    spec = ActionSpaceSpec.uniform(1, 9)
    actor = _linear_actor()
    s = np.array([[0.5]])
    target = scale_proto(forward(actor, s), spec)
    before = [p.copy() for p in actor.params()]
    loss = dbu_actor_update(actor, s, target, AdamState(actor.params(), lr=0.01), spec, DbuConfig())
    assert loss == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, actor.params()))


def test_actor_update_moves_toward_target():
    spec = ActionSpaceSpec.uniform(1, 9)
    actor = _linear_actor()
    s = np.array([[0.5]])
    target = np.array([[7.0]])
    d0 = abs(scale_proto(forward(actor, s), spec)[0, 0] - 7.0)
    dbu_actor_update(actor, s, target, AdamState(actor.params(), lr=0.01), spec, DbuConfig())
    d1 = abs(scale_proto(forward(actor, s), spec)[0, 0] - 7.0)
    assert d1 < d0


def test_build_targets_shape_and_hull():
    spec = ActionSpaceSpec.uniform(3, 6)
    rng = np.random.default_rng(0)
    actor = init_mlp([2, 8, 3], rng, output_activation="tanh")
    states = rng.uniform(size=(4, 2))
    t = build_targets(states, actor, lambda s, a: -a.sum(axis=1), DbuConfig(), spec, rng)
    assert t.shape == (4, 3)
    assert np.all(t >= 0) and np.all(t <= 5)


def test_variance_probe_degenerate_noise_is_zero():
    rng = np.random.default_rng(0)
    actor = init_mlp([2, 8, 2], rng, output_activation="tanh")
    v = dbu_gradient_variance_probe(np.array([0.3, 0.7]), actor, lambda s, a: a.sum(axis=1),
                                    DbuConfig(perturbation=1e-12), [5, 17], trials=200)
    assert max(v) < 1e-20


def test_variance_probe_flat_across_sizes():
    rng = np.random.default_rng(0)
    actor = init_mlp([2, 8, 2], rng, output_activation="tanh")
    critic = lambda s, a: -((a - 0.6) ** 2).sum(axis=1) * 10
    v = dbu_gradient_variance_probe(np.array([0.3, 0.7]), actor, critic, DbuConfig(), [5, 17, 65], trials=10_000)
    assert max(v) / min(v) <= 3.0
