"""Policy interface and the reference policies (guideline baseline, zero, random)."""

from __future__ import annotations

from dataclasses import dataclass

from . import seeding
from ._layout import DTT, ISTAGE, SW
from .actions import MAX_N, MAX_WATER, N_ACTIONS, ZERO_ACTION, ActionAmounts, decode_action
from .crop_env import project_partial
from .errors import InvalidArgument

FULL = "full"
PARTIAL = "partial"
MATURITY_STAGE = 4


class Policy:
    """Maps an observation to an :class:`ActionAmounts`.

    ``observation`` says which vector the policy expects: the 28-variable
    full observation or the 12-variable partial one. Stateful policies
    clear their per-season memory in ``reset``.
    """

    name = "policy"
    observation = PARTIAL

    def reset(self):
        pass

    def act(self, obs):
        raise NotImplementedError

    def __call__(self, obs):
        return self.act(obs)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} ({self.observation})>"


class FunctionPolicy(Policy):
    """Wrap a stateless ``obs -> ActionAmounts`` callable."""

    def __init__(self, fn, name, observation=PARTIAL):
        if observation not in (FULL, PARTIAL):
            raise InvalidArgument(f"observation must be {FULL!r} or {PARTIAL!r}")
        self._fn = fn
        self.name = name
        self.observation = observation

    def act(self, obs):
        a = self._fn(obs)
        return a if isinstance(a, ActionAmounts) else ActionAmounts(*a)


@dataclass(frozen=True)
class BaselineSchedule:
    # (cumulative GDD trigger, kg/ha)
    applications: tuple = ((0.0, 90.0), (200.0, 90.0), (500.0, 90.0), (800.0, 90.0))
    irrigation_trigger: float = 0.5  # fraction of capacity
    refill_target: float = 0.9
    daily_cap_mm: float = 24.0
    capacity_mm: float = 150.0  # must match the soil bucket to convert fractions to mm

    def __post_init__(self):
        apps = tuple((float(t), float(a)) for t, a in self.applications)
        object.__setattr__(self, "applications", apps)
        triggers = [t for t, _ in apps]
        if any(b <= a for a, b in zip(triggers, triggers[1:])):
            raise InvalidArgument("baseline GDD triggers must be strictly increasing")
        if any(t < 0 for t in triggers):
            raise InvalidArgument("baseline GDD triggers must be >= 0")
        if any(not 0 <= a <= MAX_N for _, a in apps):
            raise InvalidArgument(f"each application must be within [0, {MAX_N:g}] kg/ha")
        for k in ("irrigation_trigger", "refill_target"):
            if not 0.0 <= getattr(self, k) <= 1.0:
                raise InvalidArgument(f"{k} must be in [0, 1]")
        if not 0.0 <= self.daily_cap_mm <= MAX_WATER:
            raise InvalidArgument(f"daily_cap_mm must be in [0, {MAX_WATER:g}]")
        if self.capacity_mm <= 0:
            raise InvalidArgument("capacity_mm must be > 0")

    @property
    def total_n(self):
        return sum(a for _, a in self.applications)


class BaselinePolicy(Policy):
    """Guideline schedule: split N by thermal time, refill irrigation on dry soil.

    Cumulative GDD is tracked by summing the ``dtt`` field of every
    observation seen since ``reset``. If several triggers are passed on the
    same day the applications are served one per day, in order.
    """

    observation = PARTIAL

    def __init__(self, schedule=None, name="baseline"):
        self.schedule = schedule or BaselineSchedule()
        self.name = name
        self.reset()

    def reset(self):
        self._gdd = 0.0
        self._next = 0

    def act(self, obs):
        s = self.schedule
        self._gdd += float(obs[DTT])
        n = 0.0
        if self._next < len(s.applications) and self._gdd >= s.applications[self._next][0]:
            n = s.applications[self._next][1]
            self._next += 1
        w = 0.0
        sw = float(obs[SW])
        if sw < s.irrigation_trigger and obs[ISTAGE] < MATURITY_STAGE:
            w = min(s.daily_cap_mm, max(0.0, (s.refill_target - sw) * s.capacity_mm))
        return ActionAmounts(n, w)


def baseline_policy(schedule=None):
    return BaselinePolicy(schedule)


def zero_policy():
    return FunctionPolicy(lambda obs: ZERO_ACTION, "zero", PARTIAL)


class RandomPolicy(Policy):
    """Uniform over the 25 grid actions; the stream continues across seasons."""

    observation = PARTIAL

    def __init__(self, seed=0, name="random"):
        self.seed = seed
        self.name = name
        self._rng = seeding.make_rng(seed, seeding.POLICY)

    def act(self, obs):
        return decode_action(self._rng.integers(N_ACTIONS))

    def action_indices(self, n):
        """Draw ``n`` indices from the stream (used for bulk statistics)."""
        return self._rng.integers(N_ACTIONS, size=n)


def random_policy(seed=0):
    return RandomPolicy(seed)


def observation_for(policy, full_obs):
    """Slice a full observation down to what ``policy`` expects."""
    if policy.observation == FULL:
        return full_obs
    return project_partial(full_obs)

