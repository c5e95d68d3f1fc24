"""Hourly demand and renewable availability profiles.

Profiles are read from comma-separated text with a header row, one row per
hour. Timestamps are kept as opaque labels; everything downstream indexes
by hour position only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

HOURS_PER_YEAR = 8760


class ProfileError(ValueError):
    """Raised when a profile file or series violates the profile contract."""


@dataclass(frozen=True)
class ProfileSchema:
    """Column names used in a profile file.

    ``availability`` maps a VRE profile id to the column holding its
    capacity factors.
    """

    load: str = "load"
    availability: Mapping[str, str] = field(default_factory=dict)
    timestamp: str | None = "timestamp"


@dataclass(frozen=True, eq=False)
class ProfileSet:
    """Validated hourly demand (MW) and capacity factors for one horizon."""

    demand: np.ndarray
    availability: Mapping[str, np.ndarray]
    label: str = ""
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        demand = np.array(self.demand, dtype=float)
        availability = {k: np.array(v, dtype=float) for k, v in self.availability.items()}
        _validate(demand, availability)
        demand.setflags(write=False)
        for arr in availability.values():
            arr.setflags(write=False)
        if self.timestamps is not None and len(self.timestamps) != demand.size:
            raise ProfileError("timestamp count does not match series length")
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "availability", availability)

    @property
    def hours(self) -> int:
        return int(self.demand.size)

    @property
    def technologies(self) -> list[str]:
        return list(self.availability)

    def __eq__(self, other):
        if not isinstance(other, ProfileSet):
            return NotImplemented
        return (
            self.label == other.label
            and np.array_equal(self.demand, other.demand)
            and self.availability.keys() == other.availability.keys()
            and all(np.array_equal(v, other.availability[k]) for k, v in self.availability.items())
        )

    def digest(self) -> str:
        """SHA-256 over the numeric content, independent of label and timestamps."""
        import hashlib

        h = hashlib.sha256()
        h.update(self.demand.tobytes())
        for key in sorted(self.availability):
            h.update(key.encode())
            h.update(self.availability[key].tobytes())
        return h.hexdigest()


def _validate(demand: np.ndarray, availability: Mapping[str, np.ndarray]) -> None:
    if demand.ndim != 1:
        raise ProfileError("demand must be one-dimensional")
    n = demand.size
    if n < 2:
        raise ProfileError(f"need at least 2 hours, got {n}")
    if not np.all(np.isfinite(demand)):
        raise ProfileError("demand contains missing or non-finite values")
    bad = np.flatnonzero(demand < 0)
    if bad.size:
        raise ProfileError(f"negative demand at hour {bad[0]}")
    if not np.any(demand > 0):
        raise ProfileError("demand is zero in every hour")
    for tech, cf in availability.items():
        if cf.shape != (n,):
            raise ProfileError(f"profile {tech!r} has length {cf.size}, expected {n}")
        if not np.all(np.isfinite(cf)):
            raise ProfileError(f"profile {tech!r} contains missing or non-finite values")
        bad = np.flatnonzero((cf < 0) | (cf > 1))
        if bad.size:
            raise ProfileError(
                f"capacity factor out of range in {tech!r} at hour {bad[0]}: {cf[bad[0]]}"
            )


def load_profiles(path, schema: ProfileSchema | None = None, *,
                  truncate_to_year: bool = False, label: str | None = None) -> ProfileSet:
    """Read and validate a profile file.

    With ``truncate_to_year`` the first 8760 rows are kept (leap-year files
    lose their last day). Otherwise the row count is taken as-is.
    Missing cells are an error; nothing is interpolated.
    """
    path = Path(path)
    if schema is None:
        schema = ProfileSchema()
    if not path.is_file():
        raise FileNotFoundError(f"profile file not found: {path}")

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise ProfileError(f"{path}: empty file") from None
        rows = list(reader)

    dupes = sorted({c for c in header if header.count(c) > 1})
    if dupes:
        raise ProfileError(f"{path}: duplicate columns {dupes}")
    wanted = [schema.load, *schema.availability.values()]
    if schema.timestamp is not None:
        wanted.append(schema.timestamp)
    missing = [c for c in wanted if c not in header]
    if missing:
        raise ProfileError(f"{path}: missing columns {missing}")
    col = {name: i for i, name in enumerate(header)}

    def numeric(name: str) -> np.ndarray:
        j = col[name]
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            cell = row[j].strip() if j < len(row) else ""
            try:
                value = float(cell)
            except ValueError:
                raise ProfileError(
                    f"{path}: non-numeric value {cell!r} in row {i + 2}, column {name!r}"
                ) from None
            if not math.isfinite(value):
                raise ProfileError(f"{path}: missing value in row {i + 2}, column {name!r}")
            out[i] = value
        return out

    demand = numeric(schema.load)
    availability = {}
    for tech, name in schema.availability.items():
        cf = numeric(name)
        bad = np.flatnonzero((cf < 0) | (cf > 1))
        if bad.size:
            raise ProfileError(
                f"{path}: capacity factor out of range in row {bad[0] + 2}, "
                f"column {name!r}: {cf[bad[0]]}"
            )
        availability[tech] = cf
    bad = np.flatnonzero(demand < 0)
    if bad.size:
        raise ProfileError(f"{path}: negative demand in row {bad[0] + 2}, column {schema.load!r}")
    stamps = None
    if schema.timestamp is not None:
        stamps = tuple(r[col[schema.timestamp]] for r in rows)

    if truncate_to_year and demand.size > HOURS_PER_YEAR:
        demand = demand[:HOURS_PER_YEAR]
        availability = {k: v[:HOURS_PER_YEAR] for k, v in availability.items()}
        if stamps is not None:
            stamps = stamps[:HOURS_PER_YEAR]

    return ProfileSet(demand, availability, label=label or path.name, timestamps=stamps)


def write_profiles(p: ProfileSet, path, schema: ProfileSchema | None = None) -> None:
    """Write ``p`` in the format read by :func:`load_profiles`.

    Values are written with ``repr`` precision so a reload is bit-identical.
    """
    if schema is None:
        schema = ProfileSchema(availability={k: k for k in p.availability})
    techs = list(schema.availability)
    header = []
    if schema.timestamp is not None:
        header.append(schema.timestamp)
    header.append(schema.load)
    header += [schema.availability[t] for t in techs]
    stamps = p.timestamps or tuple(str(h) for h in range(p.hours))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for h in range(p.hours):
            row = [stamps[h]] if schema.timestamp is not None else []
            row.append(repr(float(p.demand[h])))
            row += [repr(float(p.availability[t][h])) for t in techs]
            w.writerow(row)


def slice_hours(p: ProfileSet, start: int, length: int) -> ProfileSet:
    """Contiguous window ``[start, start + length)`` of ``p``."""
    if start < 0 or length < 2 or start + length > p.hours:
        raise ProfileError(
            f"window [{start}, {start + length}) outside 0..{p.hours} or shorter than 2 hours"
        )
    sl = slice(start, start + length)
    stamps = p.timestamps[sl] if p.timestamps is not None else None
    return ProfileSet(
        p.demand[sl],
        {k: v[sl] for k, v in p.availability.items()},
        label=p.label,
        timestamps=stamps,
    )


def peak_load(p: ProfileSet) -> float:
    return float(np.max(p.demand))


def annual_demand(p: ProfileSet) -> float:
    return float(np.sum(p.demand))


def synthetic_profiles(hours: int = HOURS_PER_YEAR, seed: int = 2016,
                       mean_load: float = 60_000.0) -> ProfileSet:
    """Stylized central-European year: demand, ``solar`` and ``wind`` factors.

    Demand has daily, weekly and seasonal cycles (winter peak). Solar follows
    the sun elevation for a latitude of 51 deg with AR(1) cloudiness. Wind is a
    clipped power curve applied to a persistent AR(1) wind-speed process,
    stronger in winter and slightly stronger at night.
    """
    rng = np.random.default_rng(seed)
    h = np.arange(hours, dtype=float)
    hour_of_day = h % 24
    day = h / 24.0
    season = np.cos(2 * np.pi * (day - 15) / 365.0)  # +1 mid-January

    daily = (0.80 + 0.16 * np.sin(np.pi * np.clip(hour_of_day - 6, 0, 16) / 16)
             + 0.05 * np.exp(-0.5 * ((hour_of_day - 19) / 1.5) ** 2))
    weekday = (day // 1) % 7
    weekly = np.where(weekday >= 5, 0.86, 1.0)
    noise = _ar1(rng, hours, 0.95, 0.015)
    demand = mean_load * daily * weekly * (1 + 0.10 * season) * (1 + noise)
    demand *= mean_load / demand.mean()

    lat = np.deg2rad(51.0)
    decl = np.deg2rad(23.44) * np.sin(2 * np.pi * (day - 81) / 365.0)
    hour_angle = np.deg2rad(15.0 * (hour_of_day + 0.5 - 12.0))
    elev = np.arcsin(np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle))
    clear_sky = np.clip(np.sin(elev), 0, None) ** 1.15
    clouds = np.clip(0.62 + 0.10 * season * -1 + _ar1(rng, hours, 0.97, 0.06), 0.05, 1.0)
    solar = np.clip(0.90 * clear_sky * clouds, 0, 1)

    speed = 6.7 + 1.0 * season + 0.4 * np.cos(2 * np.pi * hour_of_day / 24) \
        + _ar1(rng, hours, 0.985, 0.45)
    speed = np.clip(speed, 0, None)
    wind = np.clip((speed - 3.0) / (12.5 - 3.0), 0, 1) ** 1.6
    wind = np.where(speed > 25, 0.0, wind) * 0.95

    stamps = tuple(f"h{k:04d}" for k in range(hours))
    return ProfileSet(np.round(demand, 3), {"solar": np.round(solar, 5), "wind": np.round(wind, 5)},
                      label=f"synthetic seed={seed}", timestamps=stamps)


def _ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    eps = rng.normal(0.0, sigma * math.sqrt(1 - rho * rho), n)
    out = np.empty(n)
    out[0] = rng.normal(0.0, sigma)
    for k in range(1, n):
        out[k] = rho * out[k - 1] + eps[k]
    return out
