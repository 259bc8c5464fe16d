import numpy as np
import pytest

from contention_ppo.dqn import DQNAgent, DQNTrainer, _huber, _huber_grad, dqn_loss_and_grads, epsilon_at, q_targets
from contention_ppo.neural import NetSpec, RecurrentNet
from contention_ppo.radio import generate_episode, layout, sample_configuration
from contention_ppo.training import NetPolicy, TrainConfig


def bellman_oracle(rewards, q_eos_next, q_con, gamma):
    """Walk the EOS -> CON -> EOS chain slot by slot."""
    L = len(rewards)
    half = gamma**0.5
    y_con, y_eos = [], []
    for n in range(L):
        y_eos.append(half * max(q_con[n]))
        succ = q_eos_next[n + 1] if n + 1 < L else 0.0
        y_con.append(rewards[n] + half * succ)
    return np.array(y_con), np.array(y_eos)


def test_zero_targets():
    y_con, y_eos = q_targets(np.zeros(4), np.zeros(4), np.zeros((4, 2)), 0.99)
    assert np.all(y_con == 0) and np.all(y_eos == 0)


def test_single_slot_terminal():
    y_con, _ = q_targets(np.array([0.7]), np.array([5.0]), np.zeros((1, 2)), 0.99)
    assert y_con[0] == 0.7


def test_five_slot_oracle():
    rng = np.random.default_rng(0)
    r, qe = rng.normal(size=(2, 5))
    qc = rng.normal(size=(5, 2))
    y_con, y_eos = q_targets(r, qe, qc, 0.9)
    o_con, o_eos = bellman_oracle(r, qe, qc, 0.9)
    np.testing.assert_allclose(y_con, o_con, atol=1e-12, rtol=0)
    np.testing.assert_allclose(y_eos, o_eos, atol=1e-12, rtol=0)


def test_huber():
    err = np.array([-3.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(_huber(err, 1.0), [2.5, 0.125, 0.0, 0.125, 1.5])
    np.testing.assert_allclose(_huber_grad(err, 1.0), [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_epsilon_schedule():
    cfg = TrainConfig(iterations=200)
    assert epsilon_at(cfg, 0) == 1.0
    assert epsilon_at(cfg, 50) == pytest.approx(1.0 - 0.95 * 0.5)
    assert epsilon_at(cfg, 100) == pytest.approx(0.05)
    assert epsilon_at(cfg, 199) == pytest.approx(0.05)


def test_full_exploration_is_uniform():
    net = layout("L1", episode_len=2500)
    nets = [RecurrentNet.zeros(NetSpec(8, n_hidden=2, n_dense=2, head="linear")) for _ in range(4)]
    traj = generate_episode(NetPolicy(nets, net, rule="epsilon", epsilon=1.0), net, sample_configuration(net, 0), 3)
    a = traj.actions[0, 1:].ravel()
    n = a.size
    assert n == 10_000
    assert abs(a.mean() - 0.5) < 3 * np.sqrt(0.25 / n)


def test_zero_epsilon_is_greedy():
    net = layout("L1", episode_len=12)
    rng = np.random.default_rng(1)
    nets = [RecurrentNet.create(NetSpec(8, n_hidden=4, n_dense=3, head="linear"), rng) for _ in range(4)]
    cfg = sample_configuration(net, 1)
    a = generate_episode(NetPolicy(nets, net, rule="epsilon", epsilon=0.0), net, cfg, 5)
    b = generate_episode(NetPolicy(nets, net, rule="greedy"), net, cfg, 5)
    np.testing.assert_array_equal(a.actions, b.actions)


def test_loss_gradient_finite_differences():
    net_cfg = layout("L1", n_bs=2, episode_len=4)
    cfg = TrainConfig(dqn_hidden=6, dense_width=5, huber_delta=100.0)
    agent = DQNAgent.create(net_cfg, cfg, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    con_in = rng.normal(size=(4, 3, 6))
    eos_in = rng.normal(size=(4, 3, 6))
    actions = rng.integers(0, 2, size=(4, 3))
    rewards = rng.normal(size=(4, 3))

    def total():
        return sum(dqn_loss_and_grads(agent, con_in, eos_in, actions, rewards, cfg)[0].values())

    _, grads = dqn_loss_and_grads(agent, con_in, eos_in, actions, rewards, cfg)
    worst = 0.0
    for role, net in (("q_con", agent.q_con), ("q_eos", agent.q_eos)):
        for name, p in net.params.items():
            flat = p.reshape(-1)
            for k in range(0, flat.size, 3):
                old = flat[k]
                flat[k] = old + 1e-6
                up = total()
                flat[k] = old - 1e-6
                dn = total()
                flat[k] = old
                num = (up - dn) / 2e-6
                ana = grads[role][name].reshape(-1)[k]
                worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-6))
    assert worst < 1e-4


def _trainer(seed=0, **kw):
    net = layout("L1", episode_len=6)
    cfg = TrainConfig(dqn_hidden=8, dense_width=6, n_batch=2, iterations=8, **kw)
    return DQNTrainer(net, cfg, seed)


def test_zero_learning_rate_keeps_nets():
    tr = _trainer(lr=0.0)
    before = {k: {p: v.copy() for p, v in n.params.items()} for k, n in tr.named_nets()[0].items()}
    stats = tr.train_iteration()
    assert np.isfinite(stats["loss_con"]) and stats["epsilon"] == 1.0
    for k, n in tr.named_nets()[0].items():
        for p, v in n.params.items():
            np.testing.assert_array_equal(v, before[k][p])


def test_deterministic_stats():
    a, b = _trainer(seed=2), _trainer(seed=2)
    assert [a.train_iteration() for _ in range(3)] == [b.train_iteration() for _ in range(3)]


def test_target_nets_hard_copied_on_cadence():
    tr = _trainer(target_every=2)
    agent = tr.agents[0]
    initial = agent.q_con_target.params["head.W"].copy()
    tr.train_iteration()
    np.testing.assert_array_equal(agent.q_con_target.params["head.W"], initial)
    assert not np.array_equal(agent.q_con.params["head.W"], initial)
    tr.train_iteration()
    agent = tr.agents[0]
    np.testing.assert_array_equal(agent.q_con_target.params["head.W"], agent.q_con.params["head.W"])
    assert agent.q_con_target is not agent.q_con


def test_q_eos_uses_global_state():
    tr = _trainer()
    assert tr.agents[0].q_eos.spec.n_in == 12
    assert tr.agents[0].q_con.spec.n_in == 8
    assert tr.agents[0].q_con.spec.n_hidden == 8
    assert tr.agents[0].q_con.spec.n_out == 2
