"""Run configuration loaded from a TOML file.

Sections mirror the module configs::

    [run]        seed, out_dir, eval_seeds, eval_base_seed
    [sim]        SimConfig scalars, with [sim.soil] [sim.phenology] [sim.canopy]
    [weather]    path = "..." or ClimateParams fields
    [reward]     preset = "RF1", or name + w1..w4 for custom weights
    [dqn]        DQNConfig fields
    [bc]         BCConfig fields plus demo_episodes
    [baseline]   BaselineSchedule fields

Unknown keys are rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .crop_env import CanopyParams, PhenologyParams, SimConfig, SoilParams
from .dqn import DQNConfig
from .errors import InvalidArgument, ParseError
from .imitation import BCConfig
from .policies import BaselineSchedule
from .reward import PRESETS, RewardConfig, preset
from .weather import ClimateParams

OUT_DIR_ENV = "AGPL_OUT_DIR"


def _build(cls, table, section):
    if not isinstance(table, dict):
        raise InvalidArgument(f"[{section}] must be a table")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - names)
    if unknown:
        raise InvalidArgument(f"[{section}] unknown keys: {', '.join(unknown)}")
    return cls(**table)


@dataclass
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    climate: ClimateParams = field(default_factory=ClimateParams)
    weather_path: Optional[str] = None
    reward: RewardConfig = field(default_factory=lambda: preset("RF1"))
    dqn: DQNConfig = field(default_factory=DQNConfig)
    bc: BCConfig = field(default_factory=BCConfig)
    demo_episodes: int = 200
    baseline: BaselineSchedule = field(default_factory=BaselineSchedule)
    out_dir: str = "out"
    seed: int = 0
    eval_seeds: int = 20
    eval_base_seed: int = 1

    def validate(self):
        if self.demo_episodes < 1:
            raise InvalidArgument("bc.demo_episodes must be >= 1")
        if self.eval_seeds < 1:
            raise InvalidArgument("run.eval_seeds must be >= 1")
        if abs(self.baseline.capacity_mm - self.sim.soil.taw_mm) > 1e-9:
            raise InvalidArgument("baseline.capacity_mm must equal sim.soil.taw_mm")
        return self


def default_out_dir():
    return os.environ.get(OUT_DIR_ENV, "out")


def from_dict(data):
    data = dict(data)
    known = {"run", "sim", "weather", "reward", "dqn", "bc", "baseline"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidArgument(f"unknown sections: {', '.join(unknown)}")
    kw = {"out_dir": default_out_dir()}

    run = dict(data.get("run", {}))
    for key in ("seed", "out_dir", "eval_seeds", "eval_base_seed"):
        if key in run:
            kw[key] = run.pop(key)
    if run:
        raise InvalidArgument(f"[run] unknown keys: {', '.join(sorted(run))}")

    sim = dict(data.get("sim", {}))
    nested = {
        "soil": (SoilParams, sim.pop("soil", {})),
        "phenology": (PhenologyParams, sim.pop("phenology", {})),
        "canopy": (CanopyParams, sim.pop("canopy", {})),
    }
    parts = {k: _build(cls, t, f"sim.{k}") for k, (cls, t) in nested.items()}
    kw["sim"] = _build(SimConfig, {**sim, **parts}, "sim")

    weather = dict(data.get("weather", {}))
    kw["weather_path"] = weather.pop("path", None)
    kw["climate"] = _build(ClimateParams, weather, "weather")

    rw = dict(data.get("reward", {}))
    if "preset" in rw:
        if set(rw) != {"preset"}:
            raise InvalidArgument("[reward] give either preset or custom weights, not both")
        kw["reward"] = preset(rw["preset"])
    elif rw:
        rw.setdefault("name", "custom")
        kw["reward"] = _build(RewardConfig, rw, "reward")

    dq = dict(data.get("dqn", {}))
    if "reward" not in dq and "reward" in kw:
        r = kw["reward"]
        dq["reward"] = r.name if PRESETS.get(r.name) == r else r
    dq.setdefault("seed", kw.get("seed", 0))
    kw["dqn"] = _build(DQNConfig, dq, "dqn")

    bc = dict(data.get("bc", {}))
    if "demo_episodes" in bc:
        kw["demo_episodes"] = bc.pop("demo_episodes")
    bc.setdefault("seed", kw.get("seed", 0))
    kw["bc"] = _build(BCConfig, bc, "bc")

    bl = dict(data.get("baseline", {}))
    bl.setdefault("capacity_mm", kw["sim"].soil.taw_mm)
    kw["baseline"] = _build(BaselineSchedule, bl, "baseline")
    return RunConfig(**kw).validate()


def load(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        return from_dict(data)
    except TypeError as exc:
        raise InvalidArgument(f"{path}: {exc}") from None
