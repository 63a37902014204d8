import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgrl.envs import (
    ActionError,
    DataError,
    FormatError,
    InventoryConfig,
    InventoryEnv,
    JobShopConfig,
    JobShopEnv,
    MazeConfig,
    MazeEnv,
    RecommenderConfig,
    RecommenderEnv,
    acceptance_probability,
    build_similarity,
    inventory_cost,
    jobshop_reward,
    load_feature_matrix,
    make_env,
    mnl_choice,
    mnl_probabilities,
    synth_feature_matrix,
)
from dgrl.envs.maze import _segments_intersect


# maze

def test_maze_noop_action():
    env = MazeEnv()
    s0 = env.reset()
    s1, r, done, _ = env.step(np.zeros(4))
    assert np.array_equal(s0, s1) and r == -0.5 and not done


def test_maze_two_step_optimum():
    env = MazeEnv()
    env.reset()
    # right + right + up + up, capped at 0.5 along the diagonal
    _, r, done, _ = env.step(np.array([1, 1, 2, 2.0]))
    assert r == -0.5 and not done
    _, r, done, info = env.step(np.array([1, 1, 2, 2.0]))
    assert r == 10.0 and done and not info["truncated"]


def test_maze_rejects_bad_actuator():
    env = MazeEnv()
    env.reset()
    with pytest.raises(ActionError):
        env.step(np.array([0, 0, 0, 5.0]))
    with pytest.raises(ActionError):
        env.step(np.array([0, 0, 0.5, 1.0]))


def test_maze_wall_blocks_move():
    env = MazeEnv()
    env.reset()
    env.pos = np.array([0.4, 0.1])
    s, _, _, _ = env.step(np.array([1, 0, 0, 0.0]))  # 0.25 right would cross x = 0.5
    assert np.array_equal(s, [0.4, 0.1])


def test_maze_truncates():
    env = MazeEnv(MazeConfig(max_steps=3))
    env.reset()
    total, done = 0.0, False
    while not done:
        _, r, done, info = env.step(np.zeros(4))
        total += r
    assert total == -1.5 and info["truncated"]


def test_irregular_is_permuted_structured():
    reg, irr = MazeEnv(MazeConfig()), MazeEnv(MazeConfig(structured=False))
    perm = irr.spec.permutation[0]
    assert perm[0] == 0 and sorted(perm) == [0, 1, 2, 3, 4] and not np.array_equal(perm, np.arange(5))
    for a in np.random.default_rng(0).integers(0, 5, size=(50, 4)).astype(float):
        assert np.allclose(irr.movement(a), reg.movement(perm[a.astype(int)].astype(float)))


def test_hybrid_maze_step_size():
    env = make_env("maze", "hybrid")
    env.reset()
    assert env.spec.is_hybrid
    move = env.movement(np.array([1, 0, 0, 0, 0.2]))
    assert np.allclose(move, [0.2, 0.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_maze_random_walk_invariants(seed):
    rng = np.random.default_rng(seed)
    env = MazeEnv(MazeConfig(structured=bool(seed % 2)))
    s = env.reset()
    ret, done = 0.0, False
    while not done:
        a = env.spec.sample(rng)
        nxt, r, done, _ = env.step(a)
        assert np.all((0 <= nxt) & (nxt <= 1))
        if not np.array_equal(nxt, s):
            assert not _segments_intersect(s, nxt, env.walls)
        ret += r
        s = nxt
    assert -50.0 <= ret <= 9.5


# job shop

def test_jobshop_examples():
    cfg = JobShopConfig(machines=2)
    assert jobshop_reward(np.array([5, 5]), np.array([1.0, 1.0]), cfg) == 0.0
    assert jobshop_reward(np.array([10, 0]), np.array([1.0, 1.0]), cfg) == -5.0


def test_jobshop_idle_repairs():
    env = JobShopEnv(JobShopConfig(machines=3, wear_init=5.0), seed=0)
    w0 = env.reset().copy()
    _, r, _, _ = env.step(np.zeros(3))
    assert r == 0.0 and np.all(env.observe() < w0)
    with pytest.raises(ActionError):
        env.step(np.array([-1, 0, 0.0]))


def test_jobshop_wear_bounded():
    env = JobShopEnv(seed=1)
    rng = np.random.default_rng(1)
    env.reset()
    for _ in range(10_000):
        _, r, done, _ = env.step(env.spec.sample(rng))
        assert 0.0 <= env.wear.min() and env.wear.max() <= 10.0 and np.isfinite(r)
        if done:
            env.reset()


# inventory

def test_inventory_holding_only():
    env = InventoryEnv(InventoryConfig(items=1, initial_inventory=5, demand_rates=(0.0, 0.0)), seed=0)
    env.reset()
    _, r, _, info = env.step(np.array([0.0]))
    assert r == -5.0 and info["ordered"][0] == 0


def test_inventory_order_costs():
    env = InventoryEnv(InventoryConfig(items=1, initial_inventory=5, demand_rates=(0.0, 0.0)), seed=0)
    env.reset()
    _, r, _, _ = env.step(np.array([6.0]))
    assert r == -(6 + 10 + 75)


def test_inventory_range_check():
    env = InventoryEnv(InventoryConfig(items=2))
    env.reset()
    with pytest.raises(ActionError):
        env.step(np.array([67.0, 0.0]))


def _brute_cost(pre, level, demand, cfg):
    total, any_order = 0.0, False
    for i in range(len(pre)):
        q = max(0, int(level[i]) - int(pre[i]))
        inv = int(pre[i]) + q - int(demand[i])
        total += cfg.holding * max(inv, 0) + cfg.backorder * max(-inv, 0)
        if q > 0:
            total += cfg.ordering
            any_order = True
    return total + (cfg.joint_ordering if any_order else 0.0)


def test_inventory_matches_brute_force():
    env = InventoryEnv(seed=3)
    rng = np.random.default_rng(3)
    env.reset()
    for _ in range(1000):
        a = env.spec.sample(rng)
        _, r, done, info = env.step(a)
        assert r == -_brute_cost(info["pre_inventory"], a, info["demand"], env.cfg)
        if done:
            env.reset()


def test_inventory_quantity_mode():
    cfg = InventoryConfig(order_cost_mode="quantity")
    assert inventory_cost(np.array([0.0]), np.array([3.0]), cfg) == 30 + 75


# recommender

def test_similarity_examples():
    s = build_similarity(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0], [2.0, 0.0]]))
    assert s[0, 1] == pytest.approx(1 / np.sqrt(2))
    assert s[0, 2] == 0.0 and s[0, 3] == pytest.approx(1.0)
    assert np.allclose(s, s.T) and np.allclose(np.diag(s), 1.0)
    with pytest.raises(DataError):
        build_similarity(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_acceptance_examples():
    assert acceptance_probability(np.array([0.0]))[0] == 0.5
    assert acceptance_probability(np.array([1.0]))[0] == pytest.approx(0.9933, abs=1e-4)


def test_mnl_frequencies_match_logit():
    u = np.array([1.0, 0.3, -0.5, 1.2])
    p = mnl_probabilities(u)
    rng = np.random.default_rng(0)
    n = 100_000
    freq = np.bincount([mnl_choice(u, rng) for _ in range(n)], minlength=4) / n
    se = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) <= 3 * se)


def test_mnl_symmetric_utilities_uniform():
    assert np.allclose(mnl_probabilities(np.full(5, 0.7)), 0.2)


def test_feature_loading(tmp_path):
    f = tmp_path / "f.csv"
    f.write_text("# genre flags\n1,0,1\n0,1,0\n1,0,1\n")
    m = load_feature_matrix(f)
    assert m.shape == (2, 3)
    f.write_text("1 0 1\n0 1\n")
    with pytest.raises(FormatError):
        load_feature_matrix(f)
    f.write_text("")
    with pytest.raises(FormatError):
        load_feature_matrix(f)
    f.write_text("1,0\n0,0\n")
    with pytest.raises(DataError):
        load_feature_matrix(f)


def test_synthetic_features():
    a, b = synth_feature_matrix(343, 24, seed=5), synth_feature_matrix(343, 24, seed=5)
    assert np.array_equal(a, b) and a.shape == (343, 24)
    assert np.all(a >= 0) and np.all(a.sum(axis=1) > 0)
    assert len(np.unique(a, axis=0)) == 343


def test_recommender_episode():
    env = RecommenderEnv(RecommenderConfig(catalog=50, recommendations=3), seed=0)
    rng = np.random.default_rng(0)
    s = env.reset()
    assert np.all((0 <= s) & (s <= 1))
    for _ in range(200):
        s, r, done, info = env.step(env.spec.sample(rng))
        assert np.all((0 <= s) & (s <= 1)) and np.isfinite(r) and r >= 1.0
        if done:
            s = env.reset()
    with pytest.raises(ActionError):
        env.step(np.array([0, 1, 50.0]))


def test_recommender_hybrid_price_paid():
    env = RecommenderEnv(RecommenderConfig(catalog=30, hybrid=True, kappa_outside=-50.0), seed=0)
    env.reset()
    _, r, _, info = env.step(np.array([3.0, 2.0]))
    assert info["recommended"] and info["chosen"] == 3
    assert r == pytest.approx(env.movie_reward[3] + 2.0)


def test_make_env_validation():
    with pytest.raises(ValueError):
        make_env("jobshop", "irregular")
    with pytest.raises(ValueError):
        make_env("chess")
    assert make_env("inventory", items=4).spec.n_dims == 4
