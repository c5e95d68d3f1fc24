"""Technology and economic parameters, and the cost coefficients derived from them.

Configs are TOML files with a ``schema_version`` key. Parsing is strict:
unknown keys, missing required keys and out-of-range values all raise
:class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .timeseries import ProfileSchema

SCHEMA_VERSION = 1
SHARE_MODES = ("equality", "at_least")


class ConfigError(ValueError):
    pass


def annuity(overnight: float, rate: float, lifetime: float) -> float:
    """Annualize an overnight cost with the standard capital recovery factor."""
    if lifetime <= 0:
        raise ValueError(f"lifetime must be positive, got {lifetime}")
    if rate < 0:
        raise ValueError(f"interest rate must be non-negative, got {rate}")
    if rate == 0:
        return overnight / lifetime
    return overnight * rate / (1.0 - (1.0 + rate) ** (-lifetime))


@dataclass(frozen=True)
class DispatchableTech:
    id: str
    overnight_cost: float          # EUR/MW
    lifetime: float                # years
    fixed_om: float                # EUR/MW/yr
    fuel_price: float              # EUR/MWh thermal
    efficiency: float
    carbon_intensity: float        # tCO2/MWh thermal
    other_variable_cost: float = 0.0  # EUR/MWh electric

    def __post_init__(self):
        _check_nonneg(self, "overnight_cost", "fixed_om", "fuel_price",
                      "carbon_intensity", "other_variable_cost")
        _check_lifetime(self)
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"{self.id}: efficiency must be in (0, 1], got {self.efficiency}")

    def annualized_cost(self, rate: float) -> float:
        return annuity(self.overnight_cost, rate, self.lifetime) + self.fixed_om


@dataclass(frozen=True)
class VreTech:
    id: str
    overnight_cost: float
    lifetime: float
    fixed_om: float
    profile: str

    def __post_init__(self):
        _check_nonneg(self, "overnight_cost", "fixed_om")
        _check_lifetime(self)

    def annualized_cost(self, rate: float) -> float:
        return annuity(self.overnight_cost, rate, self.lifetime) + self.fixed_om


@dataclass(frozen=True)
class StorageTech:
    id: str
    power_overnight_cost: float    # EUR/MW
    energy_overnight_cost: float   # EUR/MWh
    lifetime: float
    fixed_om: float                # EUR/MW/yr, charged on power capacity
    charge_efficiency: float
    discharge_efficiency: float
    variable_cost: float = 0.0     # EUR/MWh discharged

    def __post_init__(self):
        _check_nonneg(self, "power_overnight_cost", "energy_overnight_cost",
                      "fixed_om", "variable_cost")
        _check_lifetime(self)
        for name in ("charge_efficiency", "discharge_efficiency"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{self.id}: {name} must be in (0, 1], got {v}")

    @property
    def round_trip_efficiency(self) -> float:
        return self.charge_efficiency * self.discharge_efficiency

    def annualized_power_cost(self, rate: float) -> float:
        return annuity(self.power_overnight_cost, rate, self.lifetime) + self.fixed_om

    def annualized_energy_cost(self, rate: float) -> float:
        return annuity(self.energy_overnight_cost, rate, self.lifetime)


@dataclass(frozen=True)
class SolverSettings:
    backend: str = "highs"
    feas_tol: float = 1e-6
    gap_tol: float = 1e-6


@dataclass(frozen=True)
class SystemConfig:
    dispatchables: tuple[DispatchableTech, ...]
    vres: tuple[VreTech, ...]
    storage: StorageTech | None = None
    interest_rate: float = 0.07
    co2_price: float = 0.0
    value_of_lost_load: float | None = None
    share_constraint: str = "equality"
    profiles: ProfileSchema = field(default_factory=ProfileSchema)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "dispatchables", tuple(self.dispatchables))
        object.__setattr__(self, "vres", tuple(self.vres))
        if not self.dispatchables and not self.vres and self.storage is None:
            raise ConfigError("configuration defines no technology")
        if self.interest_rate < 0:
            raise ConfigError("interest_rate must be non-negative")
        if self.co2_price < 0:
            raise ConfigError("co2_price must be non-negative")
        if self.value_of_lost_load is not None and self.value_of_lost_load <= 0:
            raise ConfigError("value_of_lost_load must be positive when given")
        if self.share_constraint not in SHARE_MODES:
            raise ConfigError(f"share_constraint must be one of {SHARE_MODES}")
        ids = [t.id for t in self.technologies]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ConfigError(f"duplicate technology ids {dupes}")

    @property
    def technologies(self) -> list:
        out = [*self.dispatchables, *self.vres]
        if self.storage is not None:
            out.append(self.storage)
        return out

    def without_storage(self) -> "SystemConfig":
        return dataclasses.replace(self, storage=None)

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def marginal_cost(t: DispatchableTech, co2_price: float) -> float:
    """Short-run cost per MWh of electricity, fuel and carbon included."""
    return (t.fuel_price + co2_price * t.carbon_intensity) / t.efficiency + t.other_variable_cost


def _check_nonneg(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not v >= 0:
            raise ConfigError(f"{obj.id}: {name} must be non-negative, got {v}")


def _check_lifetime(obj):
    if not obj.lifetime >= 1:
        raise ConfigError(f"{obj.id}: lifetime must be at least 1 year, got {obj.lifetime}")


# -- parsing -----------------------------------------------------------------

_TOP_KEYS = {"schema_version", "economics", "profiles", "dispatchable", "vre", "storage", "solver"}
_ECON_KEYS = {"interest_rate", "co2_price", "value_of_lost_load", "share_constraint"}
_PROFILE_KEYS = {"load", "timestamp", "columns"}


def _take(table: dict, cls, where: str, extra: dict | None = None):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = dict(table)
    if extra:
        kwargs.update(extra)
    required = {f.name for f in dataclasses.fields(cls)
                if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING}
    missing = required - set(kwargs)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    for k, v in kwargs.items():
        if k != "id" and k != "profile" and k != "backend" and not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: {k} must be numeric, got {v!r}")
    return cls(**kwargs)


def _check_keys(table: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return table


def parse_config(data: dict) -> SystemConfig:
    """Build a :class:`SystemConfig` from an already-parsed TOML document."""
    _check_keys(data, _TOP_KEYS, "config")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    econ = _check_keys(data.get("economics", {}), _ECON_KEYS, "[economics]")

    dispatchables = [
        _take(dict(t), DispatchableTech, f"[[dispatchable]] #{i}")
        for i, t in enumerate(data.get("dispatchable", []))
    ]
    vres = [_take(dict(t), VreTech, f"[[vre]] #{i}") for i, t in enumerate(data.get("vre", []))]
    storage = None
    if "storage" in data:
        storage = _take(dict(data["storage"]), StorageTech, "[storage]")

    prof = _check_keys(data.get("profiles", {}), _PROFILE_KEYS, "[profiles]")
    columns = dict(prof.get("columns", {}))
    for v in vres:
        if v.profile not in columns:
            raise ConfigError(
                f"VRE technology {v.id!r} references profile {v.profile!r}, "
                f"which has no column in [profiles.columns]"
            )
    timestamp = prof.get("timestamp", "timestamp")
    schema = ProfileSchema(load=prof.get("load", "load"), availability=columns,
                           timestamp=timestamp or None)
    solver = _take(dict(data.get("solver", {})), SolverSettings, "[solver]")

    return SystemConfig(
        dispatchables=tuple(dispatchables),
        vres=tuple(vres),
        storage=storage,
        interest_rate=float(econ.get("interest_rate", 0.07)),
        co2_price=float(econ.get("co2_price", 0.0)),
        value_of_lost_load=econ.get("value_of_lost_load"),
        share_constraint=econ.get("share_constraint", "equality"),
        profiles=schema,
        solver=solver,
    )


def load_config(path) -> SystemConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
