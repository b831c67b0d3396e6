import numpy as np
import pytest

from common.env import N_ACTIONS, HarvestEnv, obs_dim, state_dim
from common.exceptions import BufferUnderflowError, ContractViolation, LayoutMismatchError
from common.learner import (
    NO_ACTION,
    AgentNet,
    EpisodeBatch,
    EpisodeBuffer,
    MixerNet,
    QLearner,
    act,
    agent_layout,
    greedy_rollout,
    mixer_layout,
    run_episode,
)
from common.learner.agent import init_uniform
from common.nn import ParamVector, grad_check
from common.schemas import DeviceSpec, UavSpec
from config import LearnerConfig
from tests.conftest import make_spec, open_city


def _learner(env: HarvestEnv, cfg: LearnerConfig, seed: int = 0) -> QLearner:
    n, k = env.n_agents, env.n_devices
    return QLearner(cfg, n, obs_dim(n, k), state_dim(n, k), np.random.default_rng(seed))


@pytest.fixture
def short_env() -> HarvestEnv:
    """Два БПЛА с зарядом 2: эпизоды длиной от 2 до 4 шагов."""
    city = open_city(3, 3, start=(1, 1))
    return HarvestEnv(make_spec(
        city,
        [DeviceSpec(id=0, cell=(0, 0), data_init=30.0), DeviceSpec(id=1, cell=(2, 1), data_init=20.0)],
        [UavSpec(id=0, altitude_m=10.0, battery_init=2.0), UavSpec(id=1, altitude_m=14.0, battery_init=2.0)],
    ))


def _batch(learner: QLearner, env: HarvestEnv, episodes: int, seed: int = 1) -> EpisodeBatch:
    rng = np.random.default_rng(seed)
    return EpisodeBatch.from_episodes([run_episode(learner, env, rng, epsilon=1.0).episode for _ in range(episodes)])


def _pinned_mixer(n_agents: int, s_dim: int) -> MixerNet:
    vector = ParamVector(mixer_layout(n_agents, s_dim, embed_dim=1, hypernet_dim=4))
    views = vector.subset("mixer")
    init_uniform(views, np.random.default_rng(0))
    for name, bias in (("w1_out", 1.0), ("b1", 0.0), ("w2_out", 1.0), ("b2_out", 0.0)):
        views[f"{name}.weight"][...] = 0.0
        views[f"{name}.bias"][...] = bias
    return MixerNet(views, n_agents)


class TestMixer:
    def test_pinned_weights(self, rng):
        mixer = _pinned_mixer(3, 4)
        qs = rng.normal(size=(20, 3))
        states = rng.normal(size=(20, 4))
        total = qs.sum(axis=1)
        expected = np.where(total > 0, total, np.expm1(total))
        assert np.allclose(mixer.mix(qs, states), expected, atol=1e-12)

    def test_monotone(self, rng):
        vector = ParamVector(mixer_layout(3, 5, embed_dim=4, hypernet_dim=6))
        init_uniform(vector.subset("mixer"), rng)
        mixer = MixerNet(vector.subset("mixer"), 3)
        for _ in range(1000):
            qs = rng.normal(size=(1, 3)) * 3.0
            states = rng.normal(size=(1, 5))
            bumped = qs.copy()
            bumped[0, rng.integers(3)] += rng.uniform(1e-9, 1.0)
            assert mixer.mix(bumped, states)[0] >= mixer.mix(qs, states)[0]

    def test_same_hypernet_output_same_mixing(self, rng):
        mixer = _pinned_mixer(2, 3)
        qs = rng.normal(size=(1, 2))
        assert mixer.mix(qs, rng.normal(size=(1, 3)))[0] == mixer.mix(qs, rng.normal(size=(1, 3)))[0]

    def test_gradients(self, rng):
        layout = mixer_layout(3, 4, embed_dim=2, hypernet_dim=5)
        qs = rng.normal(size=(6, 3))
        states = rng.normal(size=(6, 4))
        upstream = rng.normal(size=6)

        def loss_fn(values):
            vector = ParamVector(layout, values)
            mixer = MixerNet(vector.subset("mixer"), 3)
            q_tot, cache = mixer.forward(qs, states)
            _, grads = mixer.backward(upstream, cache)
            flat = np.zeros(layout.size)
            for name, (start, stop, _) in layout.offsets().items():
                flat[start:stop] = grads[name[len("mixer."):]].reshape(-1)
            return float(np.sum(q_tot * upstream)), flat

        point = ParamVector(layout)
        init_uniform(point.subset("mixer"), rng)
        assert grad_check(loss_fn, point.values).passed


class TestAct:
    @staticmethod
    def _net(rng, zero: bool = False) -> AgentNet:
        vector = ParamVector(agent_layout(5, 4))
        if not zero:
            init_uniform(vector.subset("agent"), rng)
        return AgentNet(vector.subset("agent"))

    def test_greedy_respects_mask(self, rng):
        net = self._net(rng)
        x = rng.normal(size=5)
        hidden = net.init_hidden(1)[0]
        mask = np.array([0, 1, 0, 1, 1, 0], dtype=np.float64)
        q, _ = net.step(x[None, :], hidden[None, :])
        action, _ = act(net, hidden, x, mask, 0.0, rng)
        feasible = np.flatnonzero(mask)
        assert action == feasible[np.argmax(q[0, feasible])]

    def test_ties_pick_lowest_feasible(self, rng):
        net = self._net(rng, zero=True)
        mask = np.array([0, 1, 1, 0, 1, 0], dtype=np.float64)
        action, _ = act(net, net.init_hidden(1)[0], np.ones(5), mask, 0.0, rng)
        assert action == 1

    def test_epsilon_one_is_uniform(self, rng):
        net = self._net(rng)
        mask = np.array([1, 0, 1, 0, 0, 1], dtype=np.float64)
        hidden = net.init_hidden(1)[0]
        counts = np.zeros(N_ACTIONS)
        draws = 100_000
        for _ in range(draws):
            action, _ = act(net, hidden, np.zeros(5), mask, 1.0, rng)
            counts[action] += 1
        assert counts[1] == counts[3] == counts[4] == 0
        assert np.all(np.abs(counts[[0, 2, 5]] / draws - 1.0 / 3.0) <= 0.02)

    def test_greedy_does_not_touch_rng(self, rng):
        net = self._net(rng)
        before = rng.bit_generator.state
        act(net, net.init_hidden(1)[0], np.zeros(5), np.ones(N_ACTIONS), 0.0, rng)
        assert rng.bit_generator.state == before

    def test_empty_mask(self, rng):
        net = self._net(rng)
        with pytest.raises(ContractViolation, match="empty feasibility mask"):
            act(net, net.init_hidden(1)[0], np.zeros(5), np.zeros(N_ACTIONS), 0.0, rng)


class TestBuffer:
    def test_fifo_and_underflow(self, short_env, small_learner_config, rng):
        learner = _learner(short_env, small_learner_config)
        buffer = EpisodeBuffer(capacity=2)
        with pytest.raises(BufferUnderflowError):
            buffer.sample(1, rng)
        episodes = [run_episode(learner, short_env, rng, epsilon=1.0).episode for _ in range(3)]
        for ep in episodes:
            buffer.add(ep)
        assert len(buffer) == 2
        batch = buffer.sample(2, rng)
        assert batch.size == 2
        assert batch.max_length == max(ep.length for ep in episodes[1:])

    def test_padding(self, short_env, small_learner_config):
        learner = _learner(short_env, small_learner_config)
        batch = _batch(learner, short_env, episodes=6)
        lengths = batch.filled.sum(axis=1).astype(int)
        assert lengths.max() == batch.max_length
        for n, length in enumerate(lengths):
            assert np.all(batch.rewards[n, length:] == 0.0)
            assert batch.terminated[n, length - 1]


class TestQLearner:
    def test_qmix_gradient(self, short_env, small_learner_config):
        learner = _learner(short_env, small_learner_config.model_copy(update={"gamma": 0.9}))
        learner.target.values[:] += np.random.default_rng(3).normal(scale=0.1, size=learner.layout.size)
        batch = _batch(learner, short_env, episodes=2)

        def loss_fn(values):
            learner.params.values[:] = values
            return learner.loss_and_grad(batch)

        report = grad_check(loss_fn, learner.params.values.copy(), tolerance=1e-4)
        assert report.passed, report

    def test_loss_ignores_episode_order(self, short_env, small_learner_config):
        learner = _learner(short_env, small_learner_config.model_copy(update={"gamma": 0.9}))
        rng = np.random.default_rng(5)
        episodes = [run_episode(learner, short_env, rng, epsilon=1.0).episode for _ in range(4)]

        loss, grad = learner.loss_and_grad(EpisodeBatch.from_episodes(episodes))
        loss_rev, grad_rev = learner.loss_and_grad(EpisodeBatch.from_episodes(episodes[::-1]))
        assert loss_rev == pytest.approx(loss, rel=1e-12)
        assert np.allclose(grad_rev, grad, rtol=1e-10, atol=1e-14)

    def test_iql_gradient_and_layout(self, short_env, small_learner_config):
        learner = _learner(short_env, small_learner_config.model_copy(update={"mode": "iql"}))
        assert not any(name.startswith("mixer.") for name in learner.layout.names)
        batch = _batch(learner, short_env, episodes=2)

        def loss_fn(values):
            learner.params.values[:] = values
            return learner.loss_and_grad(batch)

        assert grad_check(loss_fn, learner.params.values.copy()).passed

    def test_gamma_zero_loss(self, short_env, small_learner_config):
        learner = _learner(short_env, small_learner_config.model_copy(update={"gamma": 0.0}))
        episode = run_episode(learner, short_env, np.random.default_rng(4), epsilon=1.0).episode
        loss, _ = learner.loss_and_grad(EpisodeBatch.from_episodes([episode]))

        hidden = learner.init_hidden()
        prev = np.full(learner.n_agents, NO_ACTION)
        expected = 0.0
        for t in range(episode.length):
            q, hidden = learner.agent.step(learner.agent_inputs(episode.obs[t], prev), hidden)
            chosen = q[np.arange(learner.n_agents), episode.actions[t]]
            q_tot = learner.mixer.mix(chosen[None, :], episode.states[t][None, :])[0]
            expected += (episode.rewards[t] - q_tot) ** 2
            prev = episode.actions[t]
        assert loss == pytest.approx(expected, rel=1e-10)

    def test_target_sync_period(self, short_env, small_learner_config, rng):
        learner = _learner(short_env, small_learner_config)
        buffer = EpisodeBuffer(10)
        for _ in range(4):
            run_episode(learner, short_env, rng, buffer=buffer)
        learner.train_step(buffer, rng)
        assert not np.array_equal(learner.target.values, learner.params.values)
        learner.train_step(buffer, rng)
        learner.train_step(buffer, rng)
        assert learner.train_calls == 3
        assert np.array_equal(learner.target.values, learner.params.values)

    def test_epsilon_schedule(self, short_env, small_learner_config, rng):
        learner = _learner(short_env, small_learner_config)
        assert learner.epsilon() == 1.0
        learner.env_steps = 50
        assert learner.epsilon() == pytest.approx(0.525)
        learner.env_steps = 10_000
        assert learner.epsilon() == pytest.approx(0.05)

    def test_schedule_counts_env_steps(self, short_env, small_learner_config, rng):
        learner = _learner(short_env, small_learner_config)
        result = run_episode(learner, short_env, rng)
        assert learner.env_steps == result.steps
        run_episode(learner, short_env, rng, epsilon=0.3)
        assert learner.env_steps == result.steps

    def test_load_params_rejects_other_mode(self, short_env, small_learner_config):
        qmix = _learner(short_env, small_learner_config)
        iql = _learner(short_env, small_learner_config.model_copy(update={"mode": "iql"}))
        with pytest.raises(LayoutMismatchError):
            qmix.load_params(iql.export_params())

    def test_same_seed_same_init(self, short_env, small_learner_config):
        a = _learner(short_env, small_learner_config, seed=9)
        b = _learner(short_env, small_learner_config, seed=9)
        assert np.array_equal(a.params.values, b.params.values)
        assert np.array_equal(a.params.values, a.target.values)


class TestRollout:
    def test_untrained_greedy_rollout(self, two_uav_env, small_learner_config):
        learner = _learner(two_uav_env, small_learner_config)
        result = greedy_rollout(learner, two_uav_env, np.random.default_rng(0))
        last = result.trajectory[-1]
        assert all(tuple(u["cell"]) == two_uav_env.spec.city.start_cell for u in last["uavs"])
        assert all(u["battery"] == 0.0 for u in last["uavs"])
        assert 0.0 <= result.collection_ratio <= 1.0
        assert result.total_reward == pytest.approx(result.collection_ratio)

    def test_greedy_rollout_deterministic(self, two_uav_env, small_learner_config):
        learner = _learner(two_uav_env, small_learner_config)
        a = greedy_rollout(learner, two_uav_env, np.random.default_rng(2))
        b = greedy_rollout(learner, two_uav_env, np.random.default_rng(2))
        assert a.trajectory == b.trajectory
        assert a.collected == b.collected
