"""Deep Q-learning over the full observation and the 25-action grid."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import neuralnet as nn
from . import seeding
from .actions import N_ACTIONS, action_table, decode_action
from .crop_env import N_FULL
from .errors import FormatError, InvalidArgument, StateError
from .policies import FULL, Policy, observation_for
from .reward import daily_reward, resolve

_DTYPES = {"float64": np.float64, "float32": np.float32}


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s2: np.ndarray
    done: bool


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.a)


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions, sampled uniformly with replacement."""

    def __init__(self, capacity, obs_size=N_FULL):
        if capacity < 1:
            raise InvalidArgument("replay capacity must be >= 1")
        self.capacity = int(capacity)
        self._s = np.zeros((self.capacity, obs_size))
        self._s2 = np.zeros((self.capacity, obs_size))
        self._a = np.zeros(self.capacity, dtype=np.int64)
        self._r = np.zeros(self.capacity)
        self._done = np.zeros(self.capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, t):
        i = self.cursor
        self._s[i] = t.s
        self._a[i] = t.a
        self._r[i] = t.r
        self._s2[i] = t.s2
        self._done[i] = t.done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _batch(self, idx):
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._done[idx])

    def sample(self, n, rng):
        if self.size < n or n < 1:
            raise StateError(f"cannot sample {n} from a buffer holding {self.size}")
        return self._batch(rng.integers(self.size, size=n))

    def transitions(self):
        """Stored transitions, oldest first."""
        start = self.cursor if self.size == self.capacity else 0
        order = [(start + k) % self.capacity for k in range(self.size)]
        return [Transition(self._s[i].copy(), int(self._a[i]), float(self._r[i]),
                           self._s2[i].copy(), bool(self._done[i])) for i in order]


def push(buffer, t):
    buffer.push(t)


def sample(buffer, n, rng):
    return buffer.sample(n, rng)


def greedy_index(q):
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return int(np.argmax(q))


def select_action(q_params, obs, epsilon, rng, normalizer=None):
    """Epsilon-greedy action index. ``obs`` is normalized first if a normalizer is given."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidArgument(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    x = obs if normalizer is None else normalizer.apply(obs)
    return greedy_index(nn.forward(q_params, x))


def td_targets(batch, target_params, gamma):
    """``r + gamma * max Q_target(s')``, or just ``r`` for terminal transitions."""
    r = np.asarray(batch.r, dtype=np.float64)
    done = np.asarray(batch.done, dtype=bool)
    live = ~done
    y = r.copy()
    if live.any():
        q2 = nn.forward(target_params, batch.s2[live])
        y[live] = r[live] + gamma * q2.max(axis=1)
    return y


def sync_target(online):
    return online.copy()


@dataclass
class DQNConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-5
    batch_size: int = 640
    replay_capacity: int = 100_000
    target_sync: int = 2000  # gradient steps
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.6  # of the episodes
    episodes: int = 2000
    seed: int = 0
    reward: str = "RF1"
    hidden: tuple = (256, 256, 256)
    reward_scale: float = 0.01  # rewards are multiplied by this before TD regression
    normalizer_episodes: int = 1000
    fixed_weather: bool = False
    dtype: str = "float32"  # compute precision of the training matmuls

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgument("gamma must be in [0, 1]")
        if not (0.0 <= self.eps_start <= 1.0 and 0.0 <= self.eps_end <= 1.0):
            raise InvalidArgument("epsilon bounds must be in [0, 1]")
        if not 0.0 < self.eps_decay_fraction <= 1.0:
            raise InvalidArgument("eps_decay_fraction must be in (0, 1]")
        if self.batch_size < 1 or self.batch_size > self.replay_capacity:
            raise InvalidArgument("need 1 <= batch_size <= replay_capacity")
        if self.target_sync < 1:
            raise InvalidArgument("target_sync must be >= 1")
        if self.episodes < 0 or self.normalizer_episodes < 0:
            raise InvalidArgument("episode counts must be >= 0")
        if not (self.learning_rate > 0 and self.reward_scale > 0):
            raise InvalidArgument("learning_rate and reward_scale must be > 0")
        if not self.hidden or min(self.hidden) < 1:
            raise InvalidArgument("hidden layer sizes must be positive")
        if self.dtype not in _DTYPES:
            raise InvalidArgument(f"dtype must be one of {sorted(_DTYPES)}")
        resolve(self.reward)

    def epsilon(self, episode):
        """Linear decay from ``eps_start`` to ``eps_end`` over the first part of training."""
        horizon = self.eps_decay_fraction * self.episodes
        if horizon <= 0 or episode >= horizon:
            return self.eps_end
        frac = episode / horizon
        return self.eps_start + (self.eps_end - self.eps_start) * frac

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainResult:
    params: nn.MLPParams  # float64 copy of the online network
    normalizer: nn.Normalizer
    curve: list  # undiscounted season return per episode
    epsilons: list
    gradient_steps: int = 0
    seconds: float = 0.0
    config: Optional[DQNConfig] = field(default=None, repr=False)

    def metadata(self):
        return {
            "kind": "dqn",
            "config": self.config.to_dict() if self.config else None,
            "episodes": len(self.curve),
            "gradient_steps": self.gradient_steps,
        }


def fit_normalizer(factory, n_episodes, seed):
    """Feature scaling from full observations visited under uniform random actions.

    Random actions do not depend on the state, so each season is drawn up
    front and simulated in a single kernel call.
    """
    if n_episodes == 0:
        return nn.Normalizer.identity(N_FULL)
    table = action_table()
    rng = seeding.make_rng(seed, seeding.NORMALIZER)
    rows = []
    for ep in range(n_episodes):
        env = factory(seeding.derive_seed(seed, seeding.NORMALIZER, ep))
        env.reset()
        idx = rng.integers(N_ACTIONS, size=env.config.max_season_days)
        obs, _, _ = env.run_open_loop(table[idx])
        rows.append(obs)
    return nn.Normalizer.fit(np.concatenate(rows))


def gradient_step(online, target, opt, batch, gamma):
    """One TD regression step on the taken actions. Returns the loss."""
    y = td_targets(batch, target, gamma)
    n = len(batch)
    targets = np.zeros((n, N_ACTIONS), dtype=online.dtype)
    mask = np.zeros((n, N_ACTIONS), dtype=online.dtype)
    rows = np.arange(n)
    targets[rows, batch.a] = y
    mask[rows, batch.a] = 1.0
    loss, grads = nn.loss_and_grad(online, batch.s, targets, mask)
    nn.adam_update_(online, grads, opt)
    return loss


def train(factory, cfg, progress=None):
    """Train a Q-network; returns a :class:`TrainResult`.

    ``factory(seed)`` must return a fresh environment. Each episode uses a
    new seed-derived weather series unless ``cfg.fixed_weather`` is set.
    """
    cfg.validate()
    started = time.perf_counter()
    dtype = _DTYPES[cfg.dtype]
    reward_cfg = resolve(cfg.reward)
    sizes = [N_FULL, *cfg.hidden, N_ACTIONS]
    online = nn.init(sizes, nn.HEAD_LINEAR, seeding.derive_seed(cfg.seed, seeding.NETWORK_INIT), dtype)
    if cfg.episodes == 0:
        return TrainResult(online.astype(np.float64), nn.Normalizer.identity(N_FULL), [], [], 0,
                           time.perf_counter() - started, cfg)
    norm = fit_normalizer(factory, cfg.normalizer_episodes, cfg.seed)
    target = sync_target(online)
    opt = nn.AdamState.for_params(online, lr=cfg.learning_rate)
    buf = ReplayBuffer(cfg.replay_capacity)
    explore = seeding.make_rng(cfg.seed, seeding.EXPLORATION)
    replay_rng = seeding.make_rng(cfg.seed, seeding.REPLAY)
    fixed_seed = seeding.derive_seed(cfg.seed, seeding.WEATHER, 0)
    curve, epsilons = [], []
    steps = 0
    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        wseed = fixed_seed if cfg.fixed_weather else seeding.derive_seed(cfg.seed, seeding.WEATHER, ep)
        env = factory(wseed)
        s = norm.apply(env.reset())
        rewards = []
        done = False
        while not done:
            a = select_action(online, s, eps, explore)
            res = env.step(decode_action(a))
            r = daily_reward(res.yield_kg is not None, res.yield_kg, res.n_applied,
                             res.water_applied, res.leaching, reward_cfg)
            rewards.append(r)
            s2 = norm.apply(res.observation)
            done = res.done
            buf.push(Transition(s, a, r * cfg.reward_scale, s2, done))
            s = s2
            if len(buf) >= cfg.batch_size:
                gradient_step(online, target, opt, buf.sample(cfg.batch_size, replay_rng), cfg.gamma)
                steps += 1
                if steps % cfg.target_sync == 0:
                    target = sync_target(online)
        curve.append(math.fsum(rewards))
        epsilons.append(eps)
        if progress is not None:
            progress(ep, curve[-1], eps)
    return TrainResult(online.astype(np.float64), norm, curve, epsilons, steps,
                       time.perf_counter() - started, cfg)


class GreedyPolicy(Policy):
    """Full-observation policy taking the argmax of a Q-network."""

    observation = FULL

    def __init__(self, params, normalizer=None, name="dqn"):
        if params.head != nn.HEAD_LINEAR:
            raise FormatError("greedy policy needs a Q-network (linear head)")
        if params.n_outputs != N_ACTIONS:
            raise FormatError(f"Q-network must have {N_ACTIONS} outputs, has {params.n_outputs}")
        self.params = params
        self.normalizer = normalizer
        self.name = name

    def action_index(self, obs):
        x = obs if self.normalizer is None else self.normalizer.apply(obs)
        return greedy_index(nn.forward(self.params, x))

    def act(self, obs):
        return decode_action(self.action_index(obs))


def greedy_policy(q_params, normalizer=None):
    return GreedyPolicy(q_params, normalizer)


def load_greedy_policy(path):
    params, norm, _ = nn.load_checkpoint(path, expect_head=nn.HEAD_LINEAR)
    return GreedyPolicy(params, norm)


def save_result(result, path):
    nn.save_checkpoint(result.params, result.normalizer, result.metadata(), path)


def rollout_indices(policy, env):
    """Greedy action indices over one season (for inspection)."""
    obs = env.reset()
    out = []
    done = False
    while not done:
        a = policy.action_index(observation_for(policy, obs))
        out.append(a)
        res = env.step(decode_action(a))
        obs, done = res.observation, res.done
    return out
