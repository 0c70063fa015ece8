"""Management actions: continuous amounts and the 25-point discrete grid."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

MAX_N = 160.0  # kg/ha per day
MAX_WATER = 24.0  # mm per day
N_STEP = 40.0
WATER_STEP = 6.0
GRID_SIZE = 5
N_ACTIONS = GRID_SIZE * GRID_SIZE
N_LEVELS = tuple(N_STEP * i for i in range(GRID_SIZE))
WATER_LEVELS = tuple(WATER_STEP * j for j in range(GRID_SIZE))


@dataclass(frozen=True)
class ActionAmounts:
    n_fert: float  # kg/ha
    water: float  # mm

    def __post_init__(self):
        if not (math.isfinite(self.n_fert) and math.isfinite(self.water)):
            raise InvalidArgument(f"non-finite action ({self.n_fert}, {self.water})")
        if not (0.0 <= self.n_fert <= MAX_N and 0.0 <= self.water <= MAX_WATER):
            raise InvalidArgument(
                f"action ({self.n_fert}, {self.water}) outside [0, {MAX_N:g}] x [0, {MAX_WATER:g}]"
            )

    def __iter__(self):
        yield self.n_fert
        yield self.water


ZERO_ACTION = ActionAmounts(0.0, 0.0)


def decode_action(index):
    """Grid index -> amounts, row-major: ``index = 5*i + j`` gives (40*i, 6*j)."""
    index = int(index)
    if not 0 <= index < N_ACTIONS:
        raise InvalidArgument(f"action index {index} not in 0..{N_ACTIONS - 1}")
    i, j = divmod(index, GRID_SIZE)
    return ActionAmounts(N_LEVELS[i], WATER_LEVELS[j])


def action_table():
    """``(25, 2)`` array whose row ``k`` is ``decode_action(k)``."""
    return np.array([[N_LEVELS[k // GRID_SIZE], WATER_LEVELS[k % GRID_SIZE]] for k in range(N_ACTIONS)])


def encode_action(action):
    """Inverse of :func:`decode_action`; the amounts must lie exactly on the grid."""
    n, w = action
    i, j = n / N_STEP, w / WATER_STEP
    if i != int(i) or j != int(j) or not (0 <= i < GRID_SIZE and 0 <= j < GRID_SIZE):
        raise InvalidArgument(f"({n}, {w}) is not a grid action")
    return int(i) * GRID_SIZE + int(j)
