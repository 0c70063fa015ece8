"""Daily weather series: synthetic generation, CSV input/output and slicing.

The synthetic generator is a stand-in for a station record. Temperature
follows an annual sinusoid with bounded uniform noise, rain comes from a
two-state (wet/dry) Markov chain with exponential wet-day amounts, and
solar radiation is a clear-sky sinusoid dimmed on wet days.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError

CSV_HEADER = ("day", "srad", "tmax", "tmin", "rain")
DECIMALS = 2
WET_DAY_SRAD_FACTOR = 0.4
TEMPERATURE_NOISE_C = 2.0


@dataclass(frozen=True)
class WeatherDay:
    srad: float  # MJ/m2/day
    tmax: float  # degC
    tmin: float  # degC
    rain: float  # mm/day

    def __post_init__(self):
        vals = (self.srad, self.tmax, self.tmin, self.rain)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgument(f"non-finite weather value in {vals}")
        if self.tmin > self.tmax:
            raise InvalidArgument(f"tmin {self.tmin} exceeds tmax {self.tmax}")
        if self.srad < 0 or self.rain < 0:
            raise InvalidArgument("srad and rain must be non-negative")


@dataclass(frozen=True)
class WeatherSeries:
    start_day_of_year: int
    days: tuple[WeatherDay, ...]

    def __post_init__(self):
        if not 1 <= self.start_day_of_year <= 366:
            raise InvalidArgument(f"start_day_of_year {self.start_day_of_year} not in 1..366")
        object.__setattr__(self, "days", tuple(self.days))

    def __len__(self):
        return len(self.days)

    def __getitem__(self, i):
        return self.days[i]

    def day_of_year(self, index):
        """Day of year of element ``index`` (wraps after 365, or 366 for a series starting on 366)."""
        year = 366 if self.start_day_of_year == 366 else 365
        return (self.start_day_of_year - 1 + index) % year + 1

    def as_array(self):
        """(n, 4) array with columns srad, tmax, tmin, rain."""
        return np.array([(d.srad, d.tmax, d.tmin, d.rain) for d in self.days], dtype=np.float64)


@dataclass(frozen=True)
class ClimateParams:
    """Parameters of the synthetic generator.

    ``wet_day_prob`` is the long-run fraction of wet days; ``wet_persistence``
    is the probability that a wet day follows a wet day.
    """

    mean_temp: float = 23.0
    temp_amplitude: float = 6.0
    diurnal_range: float = 11.0
    wet_day_prob: float = 0.3
    wet_persistence: float = 0.5
    mean_wet_rain: float = 9.0
    srad_peak: float = 26.0

    def __post_init__(self):
        for name in ("wet_day_prob", "wet_persistence"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name}={v} outside [0, 1]")
        for name in ("temp_amplitude", "diurnal_range", "mean_wet_rain", "srad_peak"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be >= 0")
        if self.wet_day_prob < 1.0 and self.dry_to_wet_prob > 1.0:
            raise InvalidArgument(
                "wet_day_prob too high for the given wet_persistence "
                "(implied dry-to-wet transition probability exceeds 1)"
            )

    @property
    def dry_to_wet_prob(self):
        # stationary wet fraction p of the chain equals p01 / (1 - q + p01)
        p, q = self.wet_day_prob, self.wet_persistence
        if p >= 1.0:
            return 1.0
        return p * (1.0 - q) / (1.0 - p)


def generate_synthetic(seed, n_days, params=None, start_day_of_year=1):
    """Generate a reproducible synthetic series of ``n_days`` days.

    Values are rounded to two decimals so a CSV round trip is exact.
    """
    if n_days < 1:
        raise InvalidArgument("n_days must be >= 1")
    params = params or ClimateParams()
    rng = np.random.default_rng(seed)
    year = 366 if start_day_of_year == 366 else 365
    doy = (start_day_of_year - 1 + np.arange(n_days)) % year + 1

    tavg = params.mean_temp + params.temp_amplitude * np.sin(2 * np.pi * (doy - 100) / 365.0)
    half = params.diurnal_range / 2.0
    noise = rng.uniform(-TEMPERATURE_NOISE_C, TEMPERATURE_NOISE_C, size=(n_days, 2))
    tmax = tavg + half + noise[:, 0]
    tmin = np.minimum(tavg - half + noise[:, 1], tmax)

    u = rng.random(n_days)
    amounts = rng.exponential(params.mean_wet_rain, size=n_days) if params.mean_wet_rain > 0 else np.zeros(n_days)
    p01 = params.dry_to_wet_prob
    wet = np.empty(n_days, dtype=bool)
    wet[0] = u[0] < params.wet_day_prob
    for i in range(1, n_days):
        wet[i] = u[i] < (params.wet_persistence if wet[i - 1] else p01)
    rain = np.where(wet, amounts, 0.0)

    clear = params.srad_peak * (0.7 + 0.3 * np.sin(2 * np.pi * (doy - 80) / 365.0))
    srad = np.where(wet, WET_DAY_SRAD_FACTOR * clear, clear)

    srad, tmax, tmin, rain = (np.round(a, DECIMALS) for a in (srad, tmax, tmin, rain))
    days = tuple(
        WeatherDay(float(s), float(hi), float(lo), float(r))
        for s, hi, lo, r in zip(srad, tmax, tmin, rain)
    )
    return WeatherSeries(int(doy[0]), days)


def write_weather_csv(series, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, d in enumerate(series.days):
            w.writerow([series.day_of_year(i)] + [f"{v:.{DECIMALS}f}" for v in (d.srad, d.tmax, d.tmin, d.rain)])


def load_weather_csv(path):
    """Read a weather CSV. Raises ``ParseError`` naming the offending line."""
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}", line=1)
    days = []
    start = None
    prev = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=lineno)
        try:
            doy = int(row[0])
            srad, tmax, tmin, rain = (float(c) for c in row[1:])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not 1 <= doy <= 366:
            raise ParseError(f"day {doy} outside 1..366", line=lineno)
        if prev is not None and doy != prev + 1 and not (doy == 1 and prev >= 365):
            raise ParseError(f"day {doy} does not follow day {prev}", line=lineno)
        try:
            days.append(WeatherDay(srad, tmax, tmin, rain))
        except InvalidArgument as exc:
            raise ParseError(str(exc), line=lineno) from None
        if start is None:
            start = doy
        prev = doy
    if not days:
        raise ParseError("no data rows", line=len(rows))
    return WeatherSeries(start, tuple(days))


def slice_series(series, start, length):
    """Contiguous sub-series ``[start, start + length)``."""
    if length < 1 or start < 0 or start + length > len(series):
        raise InvalidArgument(f"slice [{start}, {start + length}) out of range for length {len(series)}")
    return WeatherSeries(series.day_of_year(start), series.days[start:start + length])
