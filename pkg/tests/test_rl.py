import numpy as np
import pytest

from dgrl.nn import AdamState, zeros_like_mlp
from dgrl.rl import (
    Batch,
    CriticPair,
    ReplayBuffer,
    Transition,
    critic_update,
    init_qnetwork,
    polyak_update,
    td_target,
)
from dgrl.spaces import ActionSpaceSpec


def tr(i, terminal=False, reward=None):
    return Transition(np.array([float(i)]), np.array([0.0]), float(i if reward is None else reward),
                      np.array([float(i + 1)]), terminal)


def test_push_and_ring_semantics():
    buf = ReplayBuffer(2)
    buf.push(tr(0))
    assert len(buf) == 1
    buf.push(tr(1))
    buf.push(tr(2))
    assert len(buf) == 2
    assert [buf[i].reward for i in range(2)] == [1.0, 2.0]


def test_sample_single_and_undersized():
    buf = ReplayBuffer(10)
    with pytest.raises(RuntimeError):
        buf.sample(1, np.random.default_rng(0))
    t = tr(7)
    buf.push(t)
    assert buf.sample(1, np.random.default_rng(0))[0] is t


def test_sample_deterministic_with_cloned_rng():
    buf = ReplayBuffer(100)
    for i in range(50):
        buf.push(tr(i))
    a = buf.sample_batch(8, np.random.default_rng(42))
    b = buf.sample_batch(8, np.random.default_rng(42))
    assert np.array_equal(a.rewards, b.rewards)


def test_sample_is_uniform():
    buf = ReplayBuffer(10)
    for i in range(10):
        buf.push(tr(i))
    rng = np.random.default_rng(1)
    idx = np.concatenate([buf.sample_indices(10, rng) for _ in range(10_000)])
    counts = np.bincount(idx, minlength=10)
    expected = 10_000
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 27.88  # 99.9% quantile, 9 dof


def test_push_rejects_nonfinite_reward():
    with pytest.raises(ValueError):
        ReplayBuffer(2).push(tr(0, reward=np.nan))


def test_td_target_examples():
    assert td_target(3.0, True, 100.0, 0.99) == 3.0
    assert td_target(1.0, False, 2.0, 0.99) == pytest.approx(2.98)
    assert td_target(1.5, False, 7.0, 0.0) == 1.5
    with pytest.raises(ValueError):
        td_target(0.0, False, 0.0, 1.5)


def _pair(seed=0, zero=False, polyak=0.02):
    rng = np.random.default_rng(seed)
    spec = ActionSpaceSpec.uniform(1, 5)
    q1 = init_qnetwork(2, 1, 8, rng, hidden_layers=2)
    q2 = init_qnetwork(2, 1, 8, rng, hidden_layers=2)
    if zero:
        q1.head, q2.head = zeros_like_mlp(q1.head), zeros_like_mlp(q2.head)
    return CriticPair(q1, q2, spec, polyak=polyak)


def _batch(n, terminal, reward):
    return Batch(np.full((n, 2), 0.3), np.full((n, 1), 2.0), np.full(n, reward),
                 np.full((n, 2), 0.4), np.full(n, terminal))


def _opts(c):
    return AdamState(c.q1.params(), lr=1e-2), AdamState(c.q2.params(), lr=1e-2)


def test_critic_update_zero_fixed_point():
    c = _pair(zero=True)
    before = [p.copy() for p in c.q1.params()]
    loss = critic_update(c, _batch(4, True, 0.0), lambda s: np.full((len(s), 1), 1.0), 0.99, _opts(c))
    assert loss == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, c.q1.params()))


def test_critic_update_moves_toward_target():
    c = _pair(1)
    b = _batch(1, True, 5.0)
    q_before = c.q1(b.states, c._norm(b.actions))[0]
    critic_update(c, b, lambda s: np.full((len(s), 1), 1.0), 0.99, _opts(c))
    q_after = c.q1(b.states, c._norm(b.actions))[0]
    assert abs(q_after - 5.0) < abs(q_before - 5.0)


def test_critics_share_target():
    c = _pair(2)
    b = _batch(1, False, 1.0)
    opts = _opts(c)
    y = td_target(b.rewards, b.terminals, c.target_min(b.next_states, np.full((1, 1), 3.0)), 0.9)
    q1_0, q2_0 = c.q1(b.states, c._norm(b.actions))[0], c.q2(b.states, c._norm(b.actions))[0]
    critic_update(c, b, lambda s: np.full((len(s), 1), 3.0), 0.9, opts)
    q1_1, q2_1 = c.q1(b.states, c._norm(b.actions))[0], c.q2(b.states, c._norm(b.actions))[0]
    assert np.sign(q1_1 - q1_0) == np.sign(y[0] - q1_0)
    assert np.sign(q2_1 - q2_0) == np.sign(y[0] - q2_0)


def test_polyak_fixed_point_and_rate():
    c = _pair(3)
    before = [p.copy() for p in c.q1_target.params()]
    polyak_update(c)
    assert all(np.allclose(a, b) for a, b in zip(before, c.q1_target.params()))
    for p in c.q1_target.params():
        p[...] = 0.0
    for p in c.q1.params():
        p[...] = 1.0
    polyak_update(c)
    assert all(np.allclose(p, 0.02) for p in c.q1_target.params())
    for _ in range(9):
        polyak_update(c)
    gap = 1.0 - c.q1_target.params()[0].flat[0]
    assert gap == pytest.approx(0.98 ** 10, rel=1e-12)


def test_polyak_rate_validated():
    with pytest.raises(ValueError):
        _pair(polyak=1.0)


def test_critic_sees_normalised_actions():
    c = _pair(4)
    raw = np.array([[4.0]])
    direct = np.minimum(c.q1(np.full((1, 2), 0.3), np.array([[1.0]])), c.q2(np.full((1, 2), 0.3), np.array([[1.0]])))
    assert c.online_min(np.full((1, 2), 0.3), raw) == pytest.approx(direct)


def test_action_gradient_matches_finite_difference():
    rng = np.random.default_rng(5)
    q = init_qnetwork(3, 2, 16, rng, state_encoder=True)
    s, a = rng.uniform(size=(1, 3)), rng.uniform(size=(1, 2))
    g = q.action_gradient(s, a)[0]
    eps = 1e-6
    for j in range(2):
        d = np.zeros((1, 2))
        d[0, j] = eps
        num = (q(s, a + d)[0] - q(s, a - d)[0]) / (2 * eps)
        assert g[j] == pytest.approx(num, rel=1e-4, abs=1e-8)
