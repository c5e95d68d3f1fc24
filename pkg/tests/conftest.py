import numpy as np
import pytest

from vrelab.cli import reference_config_path, reference_data_path
from vrelab.techconfig import (DispatchableTech, StorageTech, SystemConfig, VreTech,
                               load_config)
from vrelab.timeseries import ProfileSchema, ProfileSet, load_profiles, slice_hours


@pytest.fixture(scope="session")
def ref_cfg():
    return load_config(reference_config_path())


@pytest.fixture(scope="session")
def ref_profiles(ref_cfg):
    return load_profiles(reference_data_path(), ref_cfg.profiles)


@pytest.fixture(scope="session")
def week(ref_profiles):
    """First 336 hours of the reference year."""
    return slice_hours(ref_profiles, 0, 336)


def random_system(rng: np.random.Generator, hours: int, n_disp: int, n_vre: int,
                  storage: bool) -> tuple[SystemConfig, ProfileSet]:
    """A small random system with plausible cost ranges."""
    disp = tuple(
        DispatchableTech(f"d{i}", overnight_cost=rng.uniform(3e5, 2e6), lifetime=30,
                         fixed_om=rng.uniform(0, 3e4), fuel_price=rng.uniform(2, 40),
                         efficiency=rng.uniform(0.3, 0.6), carbon_intensity=rng.uniform(0, 0.4),
                         other_variable_cost=rng.uniform(0, 3))
        for i in range(n_disp))
    vres = tuple(VreTech(f"v{i}", overnight_cost=rng.uniform(4e5, 1.5e6), lifetime=25,
                         fixed_om=rng.uniform(0, 3e4), profile=f"p{i}") for i in range(n_vre))
    sto = None
    if storage:
        sto = StorageTech("sto", power_overnight_cost=rng.uniform(3e5, 1e6),
                          energy_overnight_cost=rng.uniform(5e3, 5e4), lifetime=50,
                          fixed_om=1e4, charge_efficiency=rng.uniform(0.8, 0.95),
                          discharge_efficiency=rng.uniform(0.8, 0.95), variable_cost=0.5)
    h = np.arange(hours)
    demand = 100 + 30 * np.sin(2 * np.pi * h / 24) + rng.uniform(0, 20, hours)
    avail = {}
    for i in range(n_vre):
        if i % 2 == 0:
            avail[f"p{i}"] = np.clip(np.sin(2 * np.pi * (h % 24 - 6) / 24), 0, None) \
                * rng.uniform(0.5, 1.0, hours)
        else:
            avail[f"p{i}"] = rng.uniform(0.05, 0.9, hours)
    schema = ProfileSchema(availability={k: k for k in avail})
    cfg = SystemConfig(dispatchables=disp, vres=vres, storage=sto, interest_rate=0.05,
                       co2_price=float(rng.uniform(0, 60)), profiles=schema)
    return cfg, ProfileSet(demand, avail, label="random")


@pytest.fixture(scope="session")
def summer(ref_profiles):
    """Two summer weeks; solar, peakers and storage are all built here."""
    return slice_hours(ref_profiles, 3600, 336)


# -- acceptance verdicts ---------------------------------------------------------

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def verdict(key: str, checks) -> None:
    """Record and assert a list of ``(description, ok)`` checks for one criterion."""
    checks = list(checks)
    failed = [d for d, ok in checks if not ok]
    detail = "; ".join(failed) if failed else "; ".join(d for d, _ in checks)
    ACCEPTANCE[key] = (not failed, detail)
    print(f"criterion {key}: {'PASS' if not failed else 'FAIL'} - {detail}")
    assert not failed, detail


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
        ok, detail = ACCEPTANCE[key]
        label = "PASS" if ok is True else ("FAIL" if ok is False else ok)
        terminalreporter.write_line(f"criterion {key}: {label} - {detail}")
