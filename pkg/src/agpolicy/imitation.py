"""Behavior cloning from expert demonstrations onto the partial observation."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import neuralnet as nn
from . import seeding
from ._layout import CUMSUMFERT, ISTAGE, SW, VSTAGE
from .actions import GRID_SIZE, MAX_N, MAX_WATER, N_STEP, WATER_STEP, ActionAmounts
from .crop_env import N_PARTIAL, project_partial
from .errors import InvalidArgument, ParseError
from .policies import FULL, PARTIAL, Policy, observation_for

ACTION_SCALE = np.array([MAX_N, MAX_WATER])
DEMO_HEADER = ("ep", "dap", *(f"obs_{i}" for i in range(N_PARTIAL)), "n_fert", "water")


@dataclass(frozen=True)
class Demonstration:
    obs: np.ndarray  # partial observation
    action: ActionAmounts


@dataclass
class DemoDataset:
    obs: np.ndarray  # (n, 12)
    actions: np.ndarray  # (n, 2) kg/ha, mm
    episode: np.ndarray  # (n,) episode number
    dap: np.ndarray  # (n,) day of the decision
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.obs = np.asarray(self.obs, dtype=np.float64).reshape(-1, N_PARTIAL)
        self.actions = np.asarray(self.actions, dtype=np.float64).reshape(-1, 2)
        self.episode = np.asarray(self.episode, dtype=np.int64)
        self.dap = np.asarray(self.dap, dtype=np.int64)
        n = len(self.obs)
        if not (len(self.actions) == len(self.episode) == len(self.dap) == n):
            raise InvalidArgument("dataset columns have different lengths")
        if n and (np.any(self.actions < 0) or np.any(self.actions > ACTION_SCALE)):
            raise InvalidArgument("demonstrated actions must lie in [0, 160] x [0, 24]")

    def __len__(self):
        return len(self.obs)

    def __getitem__(self, i):
        return Demonstration(self.obs[i].copy(), ActionAmounts(*self.actions[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def collect_demos(expert, factory, n_episodes, seed=0):
    """Roll out ``expert`` for ``n_episodes`` seasons and record every decision."""
    if n_episodes < 1:
        raise InvalidArgument("n_episodes must be >= 1")
    obs, acts, eps, daps, seeds = [], [], [], [], []
    for ep in range(n_episodes):
        wseed = seeding.derive_seed(seed, seeding.DEMOS, ep)
        seeds.append(wseed)
        env = factory(wseed)
        full = env.reset()
        expert.reset()
        done = False
        while not done:
            a = expert.act(observation_for(expert, full))
            obs.append(project_partial(full))
            acts.append((a.n_fert, a.water))
            eps.append(ep)
            daps.append(env.dap)
            res = env.step(a)
            full, done = res.observation, res.done
    meta = {"expert": expert.name, "episodes": n_episodes, "seed": seed, "weather_seeds": seeds}
    return DemoDataset(np.array(obs), np.array(acts), np.array(eps), np.array(daps), meta)


@dataclass
class BCConfig:
    batch_size: int = 64
    learning_rate: float = 1e-4
    epochs: int = 60
    seed: int = 0
    hidden: tuple = (256, 256, 256)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.epochs < 1:
            raise InvalidArgument("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidArgument("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidArgument("learning_rate must be > 0")
        if not self.hidden or min(self.hidden) < 1:
            raise InvalidArgument("hidden layer sizes must be positive")

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class BCResult:
    params: nn.MLPParams
    normalizer: nn.Normalizer
    losses: list  # mean training loss per epoch, in units of the action range
    config: BCConfig = None

    def metadata(self):
        return {"kind": "bc", "config": self.config.to_dict() if self.config else None,
                "epochs": len(self.losses)}


def train_bc(dataset, cfg=None):
    """Fit a squashed-head network to the demonstrations by mini-batch Adam.

    Targets are the actions divided by the range maxima so both outputs live
    in [0, 1], matching the logistic head. Inputs are standardized with
    constants fitted on the dataset and stored alongside the weights.
    """
    cfg = cfg or BCConfig()
    n = len(dataset)
    if n == 0:
        raise InvalidArgument("cannot train on an empty dataset")
    if cfg.batch_size > n:
        raise InvalidArgument(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    norm = nn.Normalizer.fit(dataset.obs)
    x = norm.apply(dataset.obs)
    y = dataset.actions / ACTION_SCALE
    params = nn.init([N_PARTIAL, *cfg.hidden, 2], nn.HEAD_SQUASHED,
                     seeding.derive_seed(cfg.seed, seeding.NETWORK_INIT))
    opt = nn.AdamState.for_params(params, lr=cfg.learning_rate)
    rng = seeding.make_rng(cfg.seed, seeding.MINIBATCH)
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = nn.loss_and_grad(params, x[idx], y[idx])
            nn.adam_update_(params, grads, opt)
            total += loss * len(idx)
        losses.append(total / n)
    return BCResult(params, norm, losses, cfg)


def _check_bc(params):
    if params.head != nn.HEAD_SQUASHED or params.n_outputs != 2:
        raise InvalidArgument("expected a behavior-cloning network (squashed head, 2 outputs)")


def bc_action(params, obs, normalizer=None):
    """Continuous action: logistic outputs scaled to (0..160 kg/ha, 0..24 mm)."""
    _check_bc(params)
    x = np.asarray(obs, dtype=np.float64)
    if x.shape != (params.n_inputs,):
        raise InvalidArgument(f"expected an observation of length {params.n_inputs}, got shape {x.shape}")
    if normalizer is not None:
        x = normalizer.apply(x)
    out = nn.forward(params, x) * ACTION_SCALE
    # guard against the last ulp of the logistic pushing past the box
    return ActionAmounts(float(min(max(out[0], 0.0), MAX_N)), float(min(max(out[1], 0.0), MAX_WATER)))


def _snap(x, step):
    # nearest multiple of step, ties toward the smaller value
    idx = math.ceil(x / step - 0.5)
    return step * min(max(idx, 0), GRID_SIZE - 1)


def round_to_grid(action):
    n, w = action
    return ActionAmounts(_snap(float(n), N_STEP), _snap(float(w), WATER_STEP))


class BCPolicy(Policy):
    """Partial-observation policy from a cloned network; rounded to the grid by default."""

    observation = PARTIAL

    def __init__(self, params, normalizer=None, rounded=True, name=None):
        _check_bc(params)
        self.params = params
        self.normalizer = normalizer
        self.rounded = rounded
        self.name = name or ("bc_rounded" if rounded else "bc")

    def act(self, obs):
        a = bc_action(self.params, obs, self.normalizer)
        return round_to_grid(a) if self.rounded else a


def load_bc_policy(path, rounded=True):
    params, norm, _ = nn.load_checkpoint(path, expect_head=nn.HEAD_SQUASHED)
    return BCPolicy(params, norm, rounded)


def save_result(result, path):
    nn.save_checkpoint(result.params, result.normalizer, result.metadata(), path)


def agreement_rate(policy_a, policy_b, factory, n_episodes, seed=0):
    """Fraction of days on which both policies pick the same grid action.

    Episodes follow ``policy_a``; ``policy_b`` is queried on the same states.
    """
    if n_episodes < 1:
        raise InvalidArgument("n_episodes must be >= 1")
    same = total = 0
    for ep in range(n_episodes):
        env = factory(seeding.derive_seed(seed, seeding.HELDOUT, ep))
        full = env.reset()
        policy_a.reset()
        policy_b.reset()
        done = False
        while not done:
            a = policy_a.act(observation_for(policy_a, full))
            b = policy_b.act(observation_for(policy_b, full))
            same += round_to_grid(a) == round_to_grid(b)
            total += 1
            res = env.step(a)
            full, done = res.observation, res.done
    return same / total


class ScriptedExpert(Policy):
    """Stage-triggered expert with three 80 kg/ha splits and dry-soil irrigation.

    Splits go on at emergence, at leaf 8 and at flowering; each is keyed on
    the fertilizer already applied, so the schedule needs no memory. Water
    is 24 mm on any pre-maturity day with reported soil water below 0.35.
    """

    observation = FULL

    def __init__(self, split=80.0, leaf_trigger=8.0, dry_trigger=0.35, water=24.0, name="scripted"):
        self.split = split
        self.leaf_trigger = leaf_trigger
        self.dry_trigger = dry_trigger
        self.water = water
        self.name = name

    def act(self, obs):
        stage, applied = obs[ISTAGE], obs[CUMSUMFERT]
        n = 0.0
        if stage >= 1 and applied < self.split:
            n = self.split
        elif obs[VSTAGE] >= self.leaf_trigger and applied < 2 * self.split:
            n = self.split
        elif stage >= 2 and applied < 3 * self.split:
            n = self.split
        w = self.water if obs[SW] < self.dry_trigger and stage < 4 else 0.0
        return ActionAmounts(n, w)


def scripted_expert():
    return ScriptedExpert()


def write_demos_csv(dataset, path):
    """CSV rows plus a ``<path>.meta.json`` sidecar. Floats use round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEMO_HEADER)
        for e, d, o, a in zip(dataset.episode, dataset.dap, dataset.obs, dataset.actions):
            w.writerow([int(e), int(d), *(repr(float(v)) for v in o), repr(float(a[0])), repr(float(a[1]))])
    meta = dict(dataset.metadata)
    meta["sha256"] = hashlib.sha256(path.read_bytes()).hexdigest()
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_demos_csv(path):
    path = Path(path)
    obs, acts, eps, daps = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != DEMO_HEADER:
            raise ParseError("unexpected demonstration header", line=1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(DEMO_HEADER):
                raise ParseError(f"expected {len(DEMO_HEADER)} fields, got {len(row)}", line=lineno)
            try:
                eps.append(int(row[0]))
                daps.append(int(row[1]))
                obs.append([float(v) for v in row[2:2 + N_PARTIAL]])
                acts.append([float(row[-2]), float(row[-1])])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return DemoDataset(np.array(obs).reshape(-1, N_PARTIAL), np.array(acts).reshape(-1, 2),
                       np.array(eps), np.array(daps), meta)
