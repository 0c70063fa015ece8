"""Episode runner, multi-preset evaluation and CSV exports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import seeding
from ._layout import GRNWT, ISTAGE, NSTRES, RAIN, SW, SWFAC, TOPWT, XLAI
from .crop_env import CropEnv, SimConfig, audit_episode
from .errors import InvalidArgument, ParseError
from .policies import observation_for
from .reward import (
    PRESET_NAMES, SeasonTotals, daily_reward, resolve, season_return_from_totals,
)
from .weather import generate_synthetic

LOG_HEADER = ("dap", "doy", "istage", "n_applied", "water_applied", "rain", "sw", "swfac",
              "nstres", "xlai", "topwt", "grnwt", "tleachd", "reward")
CURVE_HEADER = ("episode", "return", "epsilon")
MATRIX_HEADER = ("policy", "rf", "return")
SUMMARY_HEADER = ("policy", "rf", "return", "std")
FIXTURE_HEADER = ("name", "n_input", "water_input", "n_leach", "yield")


def season_weather(seed, config, climate=None):
    """Synthetic weather covering exactly one season from the planting day."""
    return generate_synthetic(seed, config.max_season_days, climate,
                              start_day_of_year=config.planting_day_of_year)


@dataclass
class EnvFactory:
    """Builds a fresh environment for a weather seed.

    With ``fixed_weather`` set every seed maps to that one series.
    """

    config: SimConfig = field(default_factory=SimConfig)
    climate: Optional[object] = None
    fixed_weather: Optional[object] = None
    backend: Optional[str] = None

    def weather(self, seed):
        if self.fixed_weather is not None:
            return self.fixed_weather
        return season_weather(seed, self.config, self.climate)

    def __call__(self, seed):
        return CropEnv(self.config, self.weather(seed), backend=self.backend)


@dataclass(frozen=True)
class DayRecord:
    dap: int
    doy: int
    istage: float
    n_applied: float
    water_applied: float
    rain: float
    sw: float
    swfac: float
    nstres: float
    xlai: float
    topwt: float
    grnwt: float
    tleachd: float
    reward: float


@dataclass
class EpisodeLog:
    policy: str
    records: list
    totals: SeasonTotals
    yield_kg: Optional[float]
    done_reason: str
    results: list = field(repr=False, default_factory=list)

    @property
    def rewards(self):
        return [r.reward for r in self.records]

    @property
    def total_reward(self):
        return math.fsum(self.rewards)

    def __len__(self):
        return len(self.records)

    def balance(self):
        return audit_episode(self.results)


def totals_from_results(results):
    last = results[-1]
    return SeasonTotals(
        n_input=math.fsum(r.n_applied for r in results),
        water_input=math.fsum(r.water_applied for r in results),
        n_leach=math.fsum(r.leaching for r in results),
        yield_kg=last.yield_kg if last.yield_kg is not None else 0.0,
    )


def run_episode(config, weather, policy, reward_cfg="RF1", env=None):
    """Play one season with ``policy`` and score every day with ``reward_cfg``."""
    cfg = resolve(reward_cfg)
    env = env or CropEnv(config, weather)
    full = env.reset()
    policy.reset()
    records, results = [], []
    while True:
        doy = env.day_of_year
        action = policy.act(observation_for(policy, full))
        res = env.step(action)
        harvest = res.yield_kg is not None
        r = daily_reward(harvest, res.yield_kg, res.n_applied, res.water_applied, res.leaching, cfg)
        o = res.observation
        records.append(DayRecord(
            int(o[1]), doy, float(o[ISTAGE]), res.n_applied, res.water_applied, float(o[RAIN]),
            float(o[SW]), float(o[SWFAC]), float(o[NSTRES]), float(o[XLAI]), float(o[TOPWT]),
            float(o[GRNWT]), res.leaching, r,
        ))
        results.append(res)
        full = res.observation
        if res.done:
            break
    return EpisodeLog(policy.name, records, totals_from_results(results), results[-1].yield_kg,
                      results[-1].done_reason, results)


@dataclass
class EvalSummary:
    policy: str
    rf_names: tuple
    returns: dict  # rf -> per-seed returns
    totals: list  # per-seed SeasonTotals
    seeds: tuple

    @property
    def n_seeds(self):
        return len(self.seeds)

    def mean(self, rf):
        return float(np.mean(self.returns[rf]))

    def std(self, rf):
        return float(np.std(self.returns[rf]))

    @property
    def mean_totals(self):
        return SeasonTotals(*(float(np.mean([getattr(t, k) for t in self.totals]))
                              for k in ("n_input", "water_input", "n_leach", "yield_kg")))


def heldout_seeds(base_seed, n):
    return tuple(seeding.derive_seed(base_seed, seeding.HELDOUT, i) for i in range(n))


def evaluate(policy, rf_names=PRESET_NAMES, n_seeds=20, base_seed=0, factory=None):
    """Run ``n_seeds`` seasons once each and score the totals under every preset."""
    if n_seeds < 1:
        raise InvalidArgument("n_seeds must be >= 1")
    factory = factory or EnvFactory()
    rf_names = tuple(rf_names)
    cfgs = [resolve(rf) for rf in rf_names]
    seeds = heldout_seeds(base_seed, n_seeds)
    totals = []
    for s in seeds:
        env = factory(s)
        log = run_episode(env.config, env.weather, policy, cfgs[0], env=env)
        totals.append(log.totals)
    returns = {rf: [season_return_from_totals(t, c) for t in totals] for rf, c in zip(rf_names, cfgs)}
    return EvalSummary(policy.name, rf_names, returns, totals, seeds)


def eval_matrix_from_totals(rows, rf_names=PRESET_NAMES):
    """``{name: {rf: return}}`` for named season totals."""
    return {name: {rf: season_return_from_totals(t, rf) for rf in rf_names} for name, t in rows}


def load_totals_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(h.strip() for h in header or ()) != FIXTURE_HEADER:
            raise ParseError(f"expected header {','.join(FIXTURE_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FIXTURE_HEADER):
                raise ParseError(f"expected {len(FIXTURE_HEADER)} fields, got {len(row)}", line=lineno)
            try:
                rows.append((row[0].strip(), SeasonTotals(*(float(v) for v in row[1:]))))
            except (ValueError, InvalidArgument) as exc:
                raise ParseError(str(exc), line=lineno) from None
    return rows


def _fmt(v):
    return f"{v:.4f}"


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def export_application_history(log, path):
    rows = []
    for r in log.records:
        rows.append([r.dap, r.doy] + [_fmt(getattr(r, k)) for k in LOG_HEADER[2:]])
    _write_csv(path, LOG_HEADER, rows)


def export_training_curve(curve, path, epsilons=None):
    eps = epsilons if epsilons is not None else [0.0] * len(curve)
    if len(eps) != len(curve):
        raise InvalidArgument("one epsilon per episode required")
    _write_csv(path, CURVE_HEADER, [[i, _fmt(r), _fmt(e)] for i, (r, e) in enumerate(zip(curve, eps))])


def export_eval(result, path):
    """Write an :class:`EvalSummary` (with std) or an eval matrix dict."""
    if isinstance(result, EvalSummary):
        rows = [[result.policy, rf, _fmt(result.mean(rf)), _fmt(result.std(rf))] for rf in result.rf_names]
        _write_csv(path, SUMMARY_HEADER, rows)
    else:
        rows = [[name, rf, _fmt(v)] for name, cells in result.items() for rf, v in cells.items()]
        _write_csv(path, MATRIX_HEADER, rows)


def read_csv_rows(path):
    """Header and rows of an exported CSV, for round-trip checks."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return tuple(rows[0]), rows[1:]
