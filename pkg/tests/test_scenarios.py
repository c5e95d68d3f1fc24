from dataclasses import replace

import numpy as np
import pytest

from vrelab.model import InfeasibleError, Scenario
from vrelab.scenarios import (FailedPoint, SweepGrid, compare_storage, run_scenario, sweep)
from vrelab.techconfig import VreTech
from vrelab.timeseries import slice_hours

GRID = (0.2, 0.4, 0.6, 0.8, 0.9)


@pytest.fixture(scope="module")
def fortnight(summer):
    return slice_hours(summer, 0, 168)


@pytest.fixture(scope="module")
def pair(ref_cfg, fortnight):
    with_s = sweep(SweepGrid("vre_share", GRID, True), ref_cfg, fortnight)
    without = sweep(SweepGrid("vre_share", GRID, False), ref_cfg, fortnight)
    return with_s, without


def test_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid("vre_share", (0.4, 0.2))
    with pytest.raises(ValueError):
        SweepGrid("vre_share", ())
    with pytest.raises(ValueError):
        SweepGrid("vre_share", (0.5, 1.5))
    g = SweepGrid.from_values("vre_share", [0.6, 0.2, 0.6])
    assert g.values == (0.2, 0.6)


def test_sweep_entries_in_grid_order(pair):
    with_s, _ = pair
    assert [e.scenario.value for e in with_s.entries] == list(GRID)
    assert all(e.status == "ok" for e in with_s.entries)
    m = with_s.manifest
    assert m["values"] == list(GRID) and len(m["config_sha256"]) == 64


def test_objective_convex_in_phi(pair):
    for res in pair:
        obj = res.objectives()
        second = obj[2:] - 2 * obj[1:-1] + obj[:-2]
        # grid is not evenly spaced; use slopes instead
        x = np.array(GRID)
        slopes = np.diff(obj) / np.diff(x)
        assert np.all(np.diff(slopes) >= -1e-6 * np.abs(obj[1:-1]))
        assert second.size == 3


def test_storage_never_hurts(pair):
    delta = compare_storage(*pair)
    assert np.all(delta.storage_values() >= -1e-6 * pair[1].objectives())


def test_single_point_grid_equals_run(ref_cfg, fortnight):
    res = sweep(SweepGrid("vre_share", (0.5,)), ref_cfg, fortnight)
    one = run_scenario(ref_cfg, fortnight, Scenario.share(0.5))
    assert res.entries[0].objective == one.objective
    assert np.array_equal(res.entries[0].solution.price, one.solution.price)


def test_parallel_equals_serial(ref_cfg, fortnight):
    grid = SweepGrid("vre_share", (0.3, 0.6, 0.9))
    a = sweep(grid, ref_cfg, fortnight, workers=1)
    b = sweep(grid, ref_cfg, fortnight, workers=3)
    for x, y in zip(a.entries, b.entries):
        assert x.objective == y.objective
        assert x.solution.price.tobytes() == y.solution.price.tobytes()
        assert x.rldc.values.tobytes() == y.rldc.values.tobytes()
    strip = lambda m: {k: v for k, v in m.items() if k != "wall_time"}  # noqa: E731
    assert strip(a.manifest) == strip(b.manifest)


def test_workers_env(monkeypatch):
    from vrelab.scenarios import WORKERS_ENV, default_workers
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.setenv(WORKERS_ENV, "junk")
    assert default_workers() == 1


def test_relaxation_ordering(ref_cfg, fortnight):
    relaxed = replace(ref_cfg, share_constraint="at_least")
    grid = SweepGrid("vre_share", (0.0, 0.2, 0.5, 0.8))
    eq = sweep(grid, ref_cfg, fortnight).objectives()
    ge = sweep(grid, relaxed, fortnight).objectives()
    assert np.all(ge <= eq + 1e-6 * np.abs(eq))


def test_co2_sweep_vre_share_monotone(ref_cfg, fortnight):
    res = sweep(SweepGrid("co2_price", (0.0, 50.0, 100.0, 200.0)), ref_cfg, fortnight)
    shares = [e.solution.vre_share_realized() for e in res.entries]
    assert np.all(np.diff(shares) >= -1e-6)
    assert all(e.solution.vre_support == 0.0 for e in res.entries)


def test_phi_zero_expensive_vre_builds_nothing(ref_cfg, fortnight):
    costly = replace(ref_cfg, vres=tuple(replace(v, overnight_cost=v.overnight_cost * 20)
                                         for v in ref_cfg.vres))
    res = run_scenario(costly, fortnight, Scenario.share(0.0))
    caps = res.solution.capacities
    assert all(caps[v.id] < 1e-6 for v in ref_cfg.vres)
    assert caps[ref_cfg.storage.id] < 1e-6


def test_infeasible_full_share_is_diagnosed(ref_cfg, fortnight):
    only_solar = replace(ref_cfg, vres=ref_cfg.vres[:1], storage=None)
    with pytest.raises(InfeasibleError, match="no VRE availability"):
        run_scenario(only_solar, fortnight, Scenario.share(1.0, storage=False))
    res = sweep(SweepGrid("vre_share", (0.5, 1.0), False), only_solar, fortnight)
    assert res.entries[0].status == "ok"
    assert isinstance(res.entries[1], FailedPoint) and res.entries[1].status == "infeasible"
    assert res.manifest["points"][1]["status"] == "infeasible"


def test_lost_load_restores_feasibility(ref_cfg, fortnight):
    cfg = replace(ref_cfg, vres=ref_cfg.vres[:1], storage=None, value_of_lost_load=10_000.0)
    res = run_scenario(cfg, fortnight, Scenario.share(1.0, storage=False))
    sol = res.solution
    assert sol.shed.sum() > 0
    served = fortnight.demand.sum() - sol.shed.sum()
    assert sol.generation["solar"].sum() == pytest.approx(served, rel=1e-6)


def test_inactive_storage_gives_zero_deltas(ref_cfg, fortnight):
    pricey = replace(ref_cfg, storage=replace(ref_cfg.storage, power_overnight_cost=1e9))
    grid = SweepGrid("vre_share", (0.3, 0.6))
    a = sweep(grid, pricey, fortnight)
    b = sweep(SweepGrid("vre_share", (0.3, 0.6), False), pricey, fortnight)
    for pt, ea, eb in zip(compare_storage(a, b).points, a.entries, b.entries):
        assert abs(pt.storage_value) <= 1e-6 * abs(eb.objective)
        assert np.allclose(pt.rldc, 0, atol=1e-3)
        assert np.allclose(pt.pdc, 0, atol=1e-6 * np.abs(eb.pdc.values).max())
        assert ea.solution.vre_support == pytest.approx(eb.solution.vre_support, rel=1e-6)
        # curtailment is split pro rata, so per-technology values are unique too
        for tech, dmv in pt.market_value.items():
            if not np.isnan(dmv):
                assert abs(dmv) <= 1e-6 * abs(ea.values[tech].market_value)
                assert abs(pt.lcoe[tech]) <= 1e-6 * abs(ea.values[tech].lcoe)
    assert all(e.solution.capacities["storage"] < 1e-6 for e in a.entries)


def test_compare_storage_grid_mismatch(pair, ref_cfg, fortnight):
    other = sweep(SweepGrid("vre_share", (0.2, 0.4), False), ref_cfg, fortnight)
    with pytest.raises(ValueError, match="grid mismatch"):
        compare_storage(pair[0], other)


def test_unknown_profile_column_in_new_vre(ref_cfg, fortnight):
    bad = replace(ref_cfg, vres=ref_cfg.vres + (VreTech("offshore", 1e6, 25, 0, "offshore"),))
    with pytest.raises(Exception, match="offshore"):
        run_scenario(bad, fortnight, Scenario.share(0.5))
