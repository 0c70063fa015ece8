"""Daily maize surrogate with a reset/step interface.

One step is one day. Within a step the model runs, in this order:
phenology (degree days, stage, leaves, canopy), a single-bucket water
balance, a mineral-nitrogen balance, and radiation-use-efficiency growth.
Every step returns an audit of the water and nitrogen fluxes that closes
both balances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _layout as L
from .actions import MAX_N, MAX_WATER, ActionAmounts
from .errors import InvalidArgument, StateError
from .kernels import get_backend, get_season_runner

FULL_FIELDS = L.FULL_FIELDS
PARTIAL_FIELDS = L.PARTIAL_FIELDS
PARTIAL_INDICES = np.array(L.PARTIAL_INDICES)
N_FULL = len(FULL_FIELDS)
N_PARTIAL = len(PARTIAL_FIELDS)
STAGE_NAMES = ("sown", "vegetative", "flowering", "grain_fill", "maturity")
MATURITY_STAGE = 4


@dataclass(frozen=True)
class SoilParams:
    taw_mm: float = 150.0  # bucket capacity; overflow above it runs off
    initial_fraction: float = 0.7
    field_capacity_fraction: float = 0.75  # storage above this fraction drains
    drainage_coef: float = 0.5  # fraction of the excess over field capacity drained per day
    initial_mineral_n: float = 25.0  # kg/ha
    mineralization: float = 0.5  # kg/ha/day
    volatilization_fraction: float = 0.05  # of each application, spread over the next 5 days
    denitrification_rate: float = 0.02  # per day while wetter than field capacity


@dataclass(frozen=True)
class PhenologyParams:
    tbase: float = 8.0
    gdd_emergence: float = 60.0
    gdd_flowering: float = 800.0
    gdd_grain_fill: float = 900.0
    gdd_maturity: float = 1600.0
    phyllochron: float = 50.0  # GDD per leaf
    max_leaves: float = 20.0


@dataclass(frozen=True)
class CanopyParams:
    k: float = 0.6
    rue: float = 3.0  # g/MJ
    max_lai: float = 5.0
    grain_partition: float = 0.8  # fraction of daily growth sent to grain during grain fill
    max_harvest_index: float = 0.5  # grain never exceeds this fraction of top weight
    senescence_floor: float = 0.2  # LAI at maturity as a fraction of LAI at flowering
    n_demand_early: float = 0.015  # kg N per kg potential growth before flowering
    n_demand_late: float = 0.010  # ... reached at maturity


@dataclass(frozen=True)
class SimConfig:
    planting_day_of_year: int = 60
    max_season_days: int = 160
    soil: SoilParams = field(default_factory=SoilParams)
    phenology: PhenologyParams = field(default_factory=PhenologyParams)
    canopy: CanopyParams = field(default_factory=CanopyParams)
    plant_population: float = 7.0  # plants/m2
    water_table_depth: float = 200.0  # cm
    rng_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 1 <= self.planting_day_of_year <= 366:
            raise InvalidArgument("planting_day_of_year must be in 1..366")
        if self.max_season_days < 1:
            raise InvalidArgument("max_season_days must be >= 1")
        soil, ph, cn = self.soil, self.phenology, self.canopy
        nonneg = {
            "soil.initial_mineral_n": soil.initial_mineral_n,
            "soil.mineralization": soil.mineralization,
            "soil.denitrification_rate": soil.denitrification_rate,
            "phenology.tbase": ph.tbase,
            "phenology.gdd_emergence": ph.gdd_emergence,
            "canopy.k": cn.k,
            "canopy.rue": cn.rue,
            "canopy.max_lai": cn.max_lai,
            "canopy.n_demand_early": cn.n_demand_early,
            "canopy.n_demand_late": cn.n_demand_late,
            "plant_population": self.plant_population,
            "water_table_depth": self.water_table_depth,
        }
        for name, v in nonneg.items():
            if not v >= 0:
                raise InvalidArgument(f"{name} must be >= 0, got {v}")
        if not soil.taw_mm > 0:
            raise InvalidArgument("soil.taw_mm must be > 0")
        if not ph.phyllochron > 0 or not ph.max_leaves > 0:
            raise InvalidArgument("phyllochron and max_leaves must be > 0")
        unit = {
            "soil.initial_fraction": soil.initial_fraction,
            "soil.field_capacity_fraction": soil.field_capacity_fraction,
            "soil.drainage_coef": soil.drainage_coef,
            "soil.volatilization_fraction": soil.volatilization_fraction,
            "soil.denitrification_rate": soil.denitrification_rate,
            "canopy.grain_partition": cn.grain_partition,
            "canopy.max_harvest_index": cn.max_harvest_index,
            "canopy.senescence_floor": cn.senescence_floor,
        }
        for name, v in unit.items():
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must be in [0, 1], got {v}")
        thresholds = (ph.gdd_emergence, ph.gdd_flowering, ph.gdd_grain_fill, ph.gdd_maturity)
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise InvalidArgument(f"GDD stage thresholds must be strictly increasing: {thresholds}")

    def kernel_params(self):
        p = np.zeros(L.PARAM_SIZE)
        ph, cn, soil = self.phenology, self.canopy, self.soil
        p[L.P_TBASE] = ph.tbase
        p[L.P_GDD_EMERGE] = ph.gdd_emergence
        p[L.P_GDD_FLOWER] = ph.gdd_flowering
        p[L.P_GDD_FILL] = ph.gdd_grain_fill
        p[L.P_GDD_MATURITY] = ph.gdd_maturity
        p[L.P_PHYLLOCHRON] = ph.phyllochron
        p[L.P_MAX_LEAVES] = ph.max_leaves
        p[L.P_K] = cn.k
        p[L.P_RUE] = cn.rue
        p[L.P_MAX_LAI] = cn.max_lai
        p[L.P_GRAIN_FRAC] = cn.max_harvest_index
        p[L.P_TAW] = soil.taw_mm
        p[L.P_FC_FRAC] = soil.field_capacity_fraction
        p[L.P_DRAIN_COEF] = soil.drainage_coef
        p[L.P_MINERALIZATION] = soil.mineralization
        p[L.P_VOLAT_FRAC] = soil.volatilization_fraction
        p[L.P_DEMAND_EARLY] = cn.n_demand_early
        p[L.P_DEMAND_LATE] = cn.n_demand_late
        p[L.P_DENIT_RATE] = soil.denitrification_rate
        p[L.P_SENESCENCE_FLOOR] = cn.senescence_floor
        p[L.P_PCN_EPS] = 1.0
        p[L.P_ROOT_MAX] = 60.0
        p[L.P_ROOT_INIT] = 5.0
        p[L.P_ROOT_GDD] = 30.0
        p[L.P_GRAIN_PART] = cn.grain_partition
        return p


def gdd(tmax, tmin, tbase=8.0):
    """Growing degree days of one day: ``max(0, (tmax + tmin)/2 - tbase)``."""
    if tmin > tmax:
        raise InvalidArgument(f"tmin {tmin} exceeds tmax {tmax}")
    return max(0.0, (tmax + tmin) / 2.0 - tbase)


@dataclass(frozen=True)
class StepAudit:
    """Fluxes of one day. Water in mm, nitrogen in kg/ha."""

    rain: float
    irrigation: float
    runoff: float
    drainage: float
    es: float
    transpiration: float
    storage_before: float
    storage_after: float
    fertilizer: float
    mineralization: float
    uptake: float
    leaching: float
    denitrification: float
    volatilization: float
    soil_n_before: float
    soil_n_after: float
    growth: float

    @property
    def water_in(self):
        return self.rain + self.irrigation

    @property
    def water_out(self):
        return self.runoff + self.drainage + self.es + self.transpiration

    @property
    def storage_change(self):
        return self.storage_after - self.storage_before

    @property
    def n_in(self):
        return self.fertilizer + self.mineralization

    @property
    def n_out(self):
        return self.uptake + self.leaching + self.denitrification + self.volatilization

    @property
    def soil_n_change(self):
        return self.soil_n_after - self.soil_n_before

    def water_residual(self):
        return _relative(self.water_in - self.water_out - self.storage_change,
                         self.water_in, self.water_out, self.storage_change)

    def n_residual(self):
        return _relative(self.n_in - self.n_out - self.soil_n_change,
                         self.n_in, self.n_out, self.soil_n_change)


def _relative(residual, *terms):
    """Residual relative to the summed magnitude of the balance terms (floored at 1)."""
    scale = max(1.0, sum(abs(t) for t in terms))
    return abs(residual) / scale


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    n_applied: float
    water_applied: float
    leaching: float
    yield_kg: Optional[float]
    done: bool
    done_reason: Optional[str]
    audit: StepAudit


@dataclass(frozen=True)
class BalanceReport:
    water_in: float
    water_out: float
    storage_change: float
    water_residual: float
    water_relative: float
    n_in: float
    n_out: float
    soil_n_change: float
    n_residual: float
    n_relative: float


def audit_episode(results):
    """Season water and nitrogen balances from a sequence of step results.

    The storage changes are taken end-to-end (last ``after`` minus first
    ``before``) rather than as a sum of daily changes, so the report checks
    the per-day bookkeeping as well as the totals.
    """
    audits = [r.audit if isinstance(r, StepResult) else r for r in results]
    if not audits:
        raise InvalidArgument("empty episode")
    w_in = sum(a.water_in for a in audits)
    w_out = sum(a.runoff for a in audits) + sum(a.drainage for a in audits) \
        + sum(a.es for a in audits) + sum(a.transpiration for a in audits)
    d_s = audits[-1].storage_after - audits[0].storage_before
    n_in = sum(a.n_in for a in audits)
    n_out = sum(a.uptake for a in audits) + sum(a.leaching for a in audits) \
        + sum(a.denitrification for a in audits) + sum(a.volatilization for a in audits)
    d_n = audits[-1].soil_n_after - audits[0].soil_n_before
    w_res = w_in - w_out - d_s
    n_res = n_in - n_out - d_n
    return BalanceReport(
        water_in=w_in, water_out=w_out, storage_change=d_s, water_residual=w_res,
        water_relative=_relative(w_res, w_in, w_out, d_s),
        n_in=n_in, n_out=n_out, soil_n_change=d_n, n_residual=n_res,
        n_relative=_relative(n_res, n_in, n_out, d_n),
    )


class CropEnv:
    """Surrogate crop environment bound to one configuration and weather series.

    ``reset()`` starts a season on the planting day; ``step(action)``
    simulates one day. Observations are read-only float64 arrays in the
    order of ``FULL_FIELDS``. Weather fields in an observation refer to the
    most recently simulated day (zero right after reset).
    """

    def __init__(self, config, weather, backend=None):
        self.config = config
        self.weather = weather
        self.backend, self._advance = get_backend(backend)
        _, self._run_season = get_season_runner(self.backend)
        offset = config.planting_day_of_year - weather.start_day_of_year
        if offset < 0:
            offset += 365
        if offset + config.max_season_days > len(weather):
            raise InvalidArgument(
                f"weather has {len(weather)} days from day {weather.start_day_of_year}; "
                f"need {config.max_season_days} from planting day {config.planting_day_of_year}"
            )
        self._offset = offset
        self._wx = weather.as_array()
        self._params = config.kernel_params()
        self._state = np.zeros(L.STATE_SIZE)
        self._flux = np.zeros(L.FLUX_SIZE)
        self._done = True
        self._reset_called = False

    def reset(self):
        cfg = self.config
        s = np.zeros(L.STATE_SIZE)
        s[L.STORAGE] = cfg.soil.initial_fraction * cfg.soil.taw_mm
        s[L.SOIL_N] = cfg.soil.initial_mineral_n
        s[L.SW] = s[L.STORAGE] / cfg.soil.taw_mm
        s[L.SWFAC] = min(1.0, max(0.0, s[L.STORAGE] / (0.5 * cfg.soil.taw_mm)))
        s[L.NSTRES] = 1.0
        s[L.PLTPOP] = cfg.plant_population
        s[L.WTDEP] = cfg.water_table_depth
        s[L.RTDEP] = self._params[L.P_ROOT_INIT]
        s[L.STRESS_MEM] = 1.0
        s[L.LAI_FLOWER] = -1.0
        self._state = s
        self._done = False
        self._reset_called = True
        return self.observe_full()

    @property
    def done(self):
        return self._done

    @property
    def dap(self):
        return int(self._state[L.DAP])

    @property
    def day_of_year(self):
        """Day of year of the next day to be simulated."""
        return self.weather.day_of_year(self._offset + self.dap)

    @property
    def soil_water_mm(self):
        return float(self._state[L.STORAGE])

    @property
    def soil_mineral_n(self):
        return float(self._state[L.SOIL_N])

    @property
    def cumulative_gdd(self):
        return float(self._state[L.CUM_GDD])

    def state_dict(self):
        """Reported variables by name plus the internal pools."""
        d = {name: float(self._state[i]) for i, name in enumerate(FULL_FIELDS)}
        d.update(cumulative_gdd=self.cumulative_gdd, soil_water_mm=self.soil_water_mm,
                 soil_mineral_n=self.soil_mineral_n)
        return d

    def observe_full(self):
        obs = self._state[:N_FULL].copy()
        obs.flags.writeable = False
        return obs

    def observe_partial(self):
        return project_partial(self._state[:N_FULL])

    def step(self, action):
        if not self._reset_called or self._done:
            raise StateError("step() called on a finished or un-reset episode; call reset()")
        if not isinstance(action, ActionAmounts):
            action = ActionAmounts(*action)
        n, w = float(action.n_fert), float(action.water)
        srad, tmax, tmin, rain = self._wx[self._offset + self.dap]
        self._advance(self._state, self._params, float(srad), float(tmax), float(tmin),
                      float(rain), n, w, self._flux)
        s = self._state
        reason = None
        if s[L.ISTAGE] >= MATURITY_STAGE:
            reason = "maturity"
        elif s[L.DAP] >= self.config.max_season_days:
            reason = "season_limit"
        self._done = reason is not None
        yield_kg = float(s[L.GRNWT]) if reason == "maturity" else None
        return StepResult(
            observation=self.observe_full(),
            n_applied=n,
            water_applied=w,
            leaching=float(s[L.TLEACHD]),
            yield_kg=yield_kg,
            done=self._done,
            done_reason=reason,
            audit=StepAudit(*self._flux.tolist()),
        )


    def run_open_loop(self, actions):
        """Apply a pre-set sequence of ``(kg/ha, mm)`` rows in one kernel call.

        Stops at the end of the season or of ``actions``, whichever comes
        first. Returns ``(observations, fluxes, done_reason)`` with one row
        per simulated day; ``done_reason`` is None if the season continues.
        Equivalent to calling :meth:`step` for each row.
        """
        if not self._reset_called or self._done:
            raise StateError("run_open_loop() called on a finished or un-reset episode; call reset()")
        acts = np.ascontiguousarray(actions, dtype=np.float64).reshape(-1, 2)
        if len(acts) and (np.any(~np.isfinite(acts)) or np.any(acts < 0)
                          or np.any(acts[:, 0] > MAX_N) or np.any(acts[:, 1] > MAX_WATER)):
            raise InvalidArgument(f"actions must lie in [0, {MAX_N:g}] x [0, {MAX_WATER:g}]")
        obs = np.zeros((len(acts), N_FULL))
        flux = np.zeros((len(acts), L.FLUX_SIZE))
        n = self._run_season(self._state, self._params, self._wx, self._offset, acts,
                             float(self.config.max_season_days), obs, flux)
        s = self._state
        reason = None
        if s[L.ISTAGE] >= MATURITY_STAGE:
            reason = "maturity"
        elif s[L.DAP] >= self.config.max_season_days:
            reason = "season_limit"
        self._done = reason is not None
        return obs[:n], flux[:n], reason


def project_partial(full_obs):
    obs = np.asarray(full_obs, dtype=np.float64)
    if obs.shape[-1] != N_FULL:
        raise InvalidArgument(f"expected {N_FULL} features, got {obs.shape[-1]}")
    part = obs[..., PARTIAL_INDICES].copy()
    part.flags.writeable = False
    return part


def observe_full(env):
    return env.observe_full()


def observe_partial(env):
    return env.observe_partial()
