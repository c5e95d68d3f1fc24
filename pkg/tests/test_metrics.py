import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispatch_lp import dispatch_lp
from vrelab.metrics import (SCARCITY, UndefinedMetricError, base_price, duration_curve, lcoe,
                            market_value, merit_order_price, mv_dispatchable, mv_vre_covariance,
                            residual_load, storage_report, tech_values, value_factor)
from vrelab.model import Scenario
from vrelab.scenarios import run_scenario
from vrelab.solver import solve
from vrelab.timeseries import ProfileSet


def test_duration_curve_examples():
    dc = duration_curve([1, 3, 2])
    assert dc.values.tolist() == [3, 2, 1]
    assert dc.order.tolist() == [1, 2, 0]
    const = duration_curve([4.0] * 6, "price")
    assert const.order.tolist() == list(range(6))
    assert const.kind == "price"
    with pytest.raises(ValueError):
        duration_curve([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_duration_curve_property(xs):
    dc = duration_curve(xs)
    assert np.all(np.diff(dc.values) <= 0)
    assert sorted(dc.values.tolist()) == sorted(xs)
    assert sorted(dc.order.tolist()) == list(range(len(xs)))
    assert np.array_equal(np.asarray(xs)[dc.order], dc.values)


def test_residual_load_examples():
    p = ProfileSet([2.0, 2.0], {"r": [0.0, 1.0]})
    assert residual_load(p, {"r": 3.0}).tolist() == [2.0, -1.0]
    assert residual_load(p, {"r": 0.0}).tolist() == [2.0, 2.0]
    with pytest.raises(KeyError):
        residual_load(p, {})


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1e3), st.floats(0, 1), st.floats(0, 1)),
                min_size=2, max_size=50),
       st.floats(0, 100), st.floats(0, 100))
def test_residual_load_monotone(rows, k1, k2):
    d, a, b = (list(x) for x in zip(*rows))
    if not any(v > 0 for v in d):
        d[0] = 1.0
    p = ProfileSet(d, {"a": a, "b": b})
    base = residual_load(p, {"a": k1, "b": k2})
    double = residual_load(p, {"a": 2 * k1, "b": 2 * k2})
    assert np.all(double <= base + 1e-9)


def test_market_value_examples():
    assert market_value([10.0, 30.0], [1.0, 0.0]) == 10.0
    assert market_value([7.0] * 5, [0.1, 0.4, 0.0, 2.0, 1.0]) == pytest.approx(7.0)
    with pytest.raises(UndefinedMetricError):
        market_value([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        market_value([1.0], [1.0, 2.0])


def test_value_factor_examples():
    lam = np.array([10.0, 50.0, 20.0])
    d = np.array([1.0, 2.0, 1.0])
    bp = base_price(lam, d)
    assert bp == pytest.approx((10 + 100 + 20) / 4)
    assert value_factor(bp, lam, d) == pytest.approx(1.0)
    # generation proportional to demand
    assert value_factor(market_value(lam, 3 * d), lam, d) == pytest.approx(1.0)
    assert base_price(lam, d, weighted=False) == pytest.approx(80 / 3)
    with pytest.raises(UndefinedMetricError):
        value_factor(5.0, [0.0, 0.0], [1.0, 1.0])


def test_lcoe_examples():
    assert lcoe(100.0, 0.0, 10.0) == 10.0
    assert lcoe(100.0, 0.0, 5.0) == 2 * lcoe(100.0, 0.0, 10.0)
    with pytest.raises(UndefinedMetricError):
        lcoe(100.0, 0.0, 0.0)


def test_mv_dispatchable_examples():
    assert mv_dispatchable([30.0] * 4, 30.0) == 0.0
    assert mv_dispatchable([40.0, 40.0, 10.0, 29.0], 30.0) == 20.0


def test_mv_vre_covariance_examples():
    cf = np.array([0.1, 0.5, 0.3, 0.0])
    assert mv_vre_covariance(np.full(4, 20.0), cf) == pytest.approx(20 * cf.mean() * 4)
    assert mv_vre_covariance([5.0, 1.0, 3.0, 9.0], np.zeros(4)) == 0.0
    rng = np.random.default_rng(7)
    lam, f = rng.normal(50, 30, 500), rng.uniform(0, 1, 500)
    assert mv_vre_covariance(lam, f) == pytest.approx(float(lam @ f), rel=1e-10)


def test_merit_order_examples():
    steps = [(10, 5), (10, 20), (10, 50)]
    assert merit_order_price(steps, 15) == 20
    assert merit_order_price(steps, 0) == 0
    assert merit_order_price(steps, -5) == 0
    assert merit_order_price(steps, 35) == SCARCITY
    assert merit_order_price(steps, 10) == 5  # boundary: lower step
    with pytest.raises(ValueError):
        merit_order_price([(10, 20), (10, 5)], 3)
    with pytest.raises(ValueError):
        merit_order_price([(0, 5)], 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1, 100), min_size=1, max_size=5), st.floats(-50, 400),
       st.floats(0, 200))
def test_merit_order_effect(caps, load, extra_vre):
    steps = [(c, 10.0 * (i + 1)) for i, c in enumerate(caps)]
    p0 = merit_order_price(steps, load)
    p1 = merit_order_price(steps, load - extra_vre)
    assert p1 <= p0


def test_merit_order_matches_dispatch_lp():
    rng = np.random.default_rng(11)
    steps = [(40.0, 12.0), (30.0, 35.0), (30.0, 80.0)]
    T = 60
    d = rng.uniform(20, 95, T)
    avail = rng.uniform(0, 60, T)
    lp = dispatch_lp(steps, d, avail)
    pd = solve(lp)
    lam = lp.rows["balance"].view(pd.dual)
    net = d - avail
    edges = np.concatenate([[0.0], np.cumsum([s[0] for s in steps])])
    checked = 0
    for h in range(T):
        if np.min(np.abs(net[h] - edges)) < 1e-6:
            continue
        assert lam[h] == pytest.approx(merit_order_price(steps, net[h]), abs=1e-6)
        checked += 1
    assert checked > 50


@pytest.fixture(scope="module")
def week_run(ref_cfg, summer):
    return run_scenario(ref_cfg, summer, Scenario.share(0.6))


def test_zero_profit_dispatchables(week_run):
    for v in week_run.values.values():
        if v.kind == "dispatchable" and v.capacity > 1e-3:
            assert v.operating_rent == pytest.approx(v.annualized_cost, rel=1e-4)


def test_zero_profit_vre(week_run):
    mu = week_run.solution.vre_support
    for v in week_run.values.values():
        if v.kind == "vre" and v.capacity > 1e-3:
            assert v.market_value + mu == pytest.approx(v.lcoe, rel=1e-4)
            assert v.operating_rent == pytest.approx(v.annualized_cost, rel=1e-4)
            assert v.support == pytest.approx(mu, rel=1e-4)


def test_storage_report(week_run, ref_cfg, summer):
    st_ = week_run.storage
    assert st_.power > 0
    assert st_.ep_ratio == pytest.approx(st_.energy / st_.power)
    assert st_.power_share_of_peak == pytest.approx(st_.power / summer.demand.max())
    assert st_.revenue == pytest.approx(st_.cost, rel=1e-4)
    assert st_.energy_share_of_demand == pytest.approx(st_.energy / summer.demand.sum())


def test_storage_report_requires_storage(ref_cfg, week):
    res = run_scenario(ref_cfg, week, Scenario.share(0.3, storage=False))
    assert res.storage is None
    with pytest.raises(UndefinedMetricError):
        storage_report(res.solution, ref_cfg, week)


def test_storage_share_ratio_example():
    from types import SimpleNamespace
    from vrelab.techconfig import StorageTech, SystemConfig, VreTech
    sto = StorageTech("s", 1.0, 1.0, 10, 0.0, 0.9, 0.9)
    cfg = SystemConfig(dispatchables=(), vres=(VreTech("v", 1, 10, 0, "v"),), storage=sto)
    p = ProfileSet([50.0, 100.0], {"v": [0.5, 0.5]})
    sol = SimpleNamespace(capacities={"s": 9.0}, storage_energy=20.0,
                          charge=np.zeros(2), discharge=np.array([1.0, 2.0]),
                          price=np.zeros(2), vre_support=0.0, simultaneous_hours=0)
    rep = storage_report(sol, cfg, p)
    assert rep.power_share_of_peak == pytest.approx(0.09)
    assert rep.full_cycles == pytest.approx(3 / 20)


def test_tech_values_value_factor_consistent(week_run, summer):
    bp = base_price(week_run.solution.price, summer.demand)
    for v in week_run.values.values():
        if not math.isnan(v.market_value):
            assert v.value_factor == pytest.approx(v.market_value / bp)
        assert 0.0 <= v.curtailment_share <= 1.0


def test_unweighted_base_price_flag(week_run, ref_cfg, summer):
    vals = tech_values(week_run.solution, ref_cfg, summer, weighted_base=False)
    bp = float(np.mean(week_run.solution.price))
    solar = vals["solar"]
    assert solar.value_factor == pytest.approx(solar.market_value / bp)
