"""Daily economic reward, season returns and the five weight presets.

A day's reward is ``w1*Y - w2*N - w3*W - w4*N_leached`` where the yield term
only appears on the harvest day. Because the reward is linear in the daily
quantities, an undiscounted season return depends only on season totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument


@dataclass(frozen=True)
class RewardConfig:
    name: str
    w1: float  # $/kg grain
    w2: float  # $/kg N
    w3: float  # $/mm water
    w4: float = 0.0  # $/kg leached N

    def __post_init__(self):
        for k in ("w1", "w2", "w3", "w4"):
            if not math.isfinite(getattr(self, k)):
                raise InvalidArgument(f"{self.name}: {k} must be finite")
        if self.w1 <= 0:
            raise InvalidArgument(f"{self.name}: w1 must be > 0, got {self.w1}")
        if min(self.w2, self.w3, self.w4) < 0:
            raise InvalidArgument(f"{self.name}: cost weights must be >= 0")

    @property
    def weights(self):
        return (self.w1, self.w2, self.w3, self.w4)


PRESETS = {
    "RF1": RewardConfig("RF1", 0.158, 0.79, 1.1, 0.0),
    "RF2": RewardConfig("RF2", 0.158, 0.79, 0.0, 0.0),
    "RF3": RewardConfig("RF3", 0.158, 0.79, 0.55, 0.0),
    "RF4": RewardConfig("RF4", 0.158, 1.58, 1.1, 0.0),
    "RF5": RewardConfig("RF5", 0.2, 1.0, 1.0, 5.0),
}
PRESET_NAMES = tuple(PRESETS)


def preset(name):
    try:
        return PRESETS[str(name).upper()]
    except KeyError:
        raise InvalidArgument(f"unknown reward preset {name!r}; choose from {', '.join(PRESETS)}") from None


def resolve(cfg):
    """Accept a preset name or a ``RewardConfig``."""
    return cfg if isinstance(cfg, RewardConfig) else preset(cfg)


def daily_reward(is_harvest, yield_kg, n_applied, water_applied, leaching, cfg):
    cfg = resolve(cfg)
    if is_harvest and yield_kg is None:
        raise InvalidArgument("harvest day needs a yield")
    if not is_harvest and yield_kg not in (None, 0, 0.0):
        raise InvalidArgument("yield given on a non-harvest day")
    y = float(yield_kg) if is_harvest else 0.0
    for label, v in (("yield", y), ("N", n_applied), ("water", water_applied), ("leaching", leaching)):
        if not v >= 0:
            raise InvalidArgument(f"{label} must be >= 0, got {v}")
    r = -cfg.w2 * n_applied - cfg.w3 * water_applied - cfg.w4 * leaching
    if is_harvest:
        r += cfg.w1 * y
    return r


def discounted_return(rewards, gamma):
    """``sum(gamma**t * r_t)`` from the first element, accumulated backwards."""
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgument(f"gamma must be in [0, 1], got {gamma}")
    g = 0.0
    for r in reversed(list(rewards)):
        g = r + gamma * g
    return g


@dataclass(frozen=True)
class SeasonTotals:
    n_input: float  # kg/ha
    water_input: float  # mm
    n_leach: float  # kg/ha
    yield_kg: float  # kg/ha

    def __post_init__(self):
        for k in ("n_input", "water_input", "n_leach", "yield_kg"):
            v = getattr(self, k)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidArgument(f"{k} must be finite and >= 0, got {v}")


def season_return_from_totals(totals, cfg):
    cfg = resolve(cfg)
    return (cfg.w1 * totals.yield_kg - cfg.w2 * totals.n_input
            - cfg.w3 * totals.water_input - cfg.w4 * totals.n_leach)
