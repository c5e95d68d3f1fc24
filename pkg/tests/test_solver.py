import numpy as np
import pytest

from conftest import random_system
from vrelab.model import Scenario, assemble_lp, build_lp, extract_solution
from vrelab.solver import (SolverError, check_optimality, equilibrate, solve,
                           solve_reference)
from vrelab.techconfig import DispatchableTech, SystemConfig, VreTech
from vrelab.timeseries import slice_hours


def _toy():
    t = DispatchableTech("base", 5.0, 1, 0.0, 10.0, 1.0, 0.0)
    return SystemConfig(dispatchables=(t,), vres=(), interest_rate=0.0)


@pytest.fixture(scope="module")
def small_lp(ref_cfg, week):
    return build_lp(ref_cfg, slice_hours(week, 24, 96), Scenario.share(0.6))


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_reference_toy(rule):
    lp = assemble_lp(_toy(), [1.0], {}, Scenario.co2(0))
    pd = solve_reference(lp, rule=rule)
    assert pd.optimal
    assert pd.objective == pytest.approx(15.0)
    assert pd.dual[lp.rows["balance"].start] == pytest.approx(15.0)
    assert check_optimality(lp, pd).passed


@pytest.mark.parametrize("backend", ["reference", "highs", "highs-ds", "highs-ipm"])
def test_infeasible_reported_as_status(backend):
    # demand but the only technology never produces
    v = VreTech("pv", 1e5, 25, 0.0, "pv")
    cfg = SystemConfig(dispatchables=(), vres=(v,))
    lp = assemble_lp(cfg, [5.0, 5.0, 5.0], {"pv": [0.0, 0.0, 0.0]}, Scenario.co2(0))
    assert solve(lp, backend).status == "infeasible"


def test_zero_demand_null_system(ref_cfg):
    T = 12
    av = {v.id: np.full(T, 0.3) for v in ref_cfg.vres}
    lp = assemble_lp(ref_cfg, np.zeros(T), av, Scenario.co2(30))
    for backend in ("highs", "reference"):
        pd = solve(lp, backend)
        assert pd.optimal and pd.objective == pytest.approx(0.0, abs=1e-9)
        sol = extract_solution(lp, pd.primal, pd.dual)
        assert all(abs(k) < 1e-9 for k in sol.capacities.values())


def test_size_guard(ref_cfg, week):
    lp = build_lp(ref_cfg, week, Scenario.share(0.5))
    assert lp.num_cols > 3000
    with pytest.raises(SolverError, match="limited"):
        solve_reference(lp, max_cols=3000)


def test_unknown_backend(small_lp):
    with pytest.raises(SolverError, match="unknown"):
        solve(small_lp, "cplex")


def test_reference_matches_highs_336(ref_cfg, week):
    lp = build_lp(ref_cfg, week, Scenario.share(0.7))
    ref = solve(lp, "reference")
    prod = solve(lp, "highs")
    assert ref.optimal and prod.optimal
    assert ref.objective == pytest.approx(prod.objective, rel=1e-6)
    assert check_optimality(lp, ref).passed
    assert check_optimality(lp, prod).passed


def test_check_optimality_detects_primal_perturbation(small_lp):
    pd = solve(small_lp)
    assert check_optimality(small_lp, pd).passed
    g = small_lp.columns["gen"]
    pd.primal = pd.primal.copy()
    pd.primal[g.index("ccgt", 10)] += 1.0
    rep = check_optimality(small_lp, pd)
    assert not rep.passed
    assert any("primal" in f for f in rep.failures)
    assert rep.worst_row in range(small_lp.rows["balance"].start, small_lp.rows["balance"].stop) \
        or rep.worst_row in range(small_lp.rows["cap_limit"].start,
                                  small_lp.rows["cap_limit"].stop)


def test_check_optimality_detects_zeroed_duals(small_lp):
    pd = solve(small_lp)
    pd.dual = np.zeros_like(pd.dual)
    rep = check_optimality(small_lp, pd)
    assert not rep.passed
    assert any("gap" in f for f in rep.failures)


def test_scaling_invariance(small_lp):
    pd = solve(small_lp)
    s = 37.5
    scaled = small_lp.scaled_costs(s)
    pds = solve(scaled)
    assert pds.objective == pytest.approx(s * pd.objective, rel=1e-7)
    assert pds.dual_objective(scaled) == pytest.approx(s * pd.dual_objective(small_lp), rel=1e-7)
    # the unscaled primal with scaled duals certifies optimality of the scaled LP
    pd.dual = pd.dual * s
    pd.objective *= s
    pd.reduced_costs = scaled.c - scaled.A.T @ pd.dual
    assert check_optimality(scaled, pd).passed


def test_reference_deterministic(small_lp):
    a = solve_reference(small_lp, max_cols=10_000)
    b = solve_reference(small_lp, max_cols=10_000)
    assert a.primal.tobytes() == b.primal.tobytes()
    assert a.dual.tobytes() == b.dual.tobytes()
    assert a.iterations == b.iterations


def test_equilibrate_powers_of_two(small_lp):
    r, s = equilibrate(small_lp.A.tocsr())
    for v in (r, s):
        assert np.all(np.log2(v) == np.round(np.log2(v)))


def test_solver_log(small_lp, tmp_path):
    log = tmp_path / "solver.log"
    solve(small_lp, "highs", log_path=log)
    text = log.read_text()
    assert "HiGHS" in text and "status=Optimal" in text


@pytest.mark.parametrize("seed", range(6))
def test_random_oracle_agreement(seed):
    rng = np.random.default_rng(100 + seed)
    cfg, p = random_system(rng, int(rng.integers(24, 97)), int(rng.integers(1, 4)),
                           int(rng.integers(0, 3)), bool(rng.integers(0, 2)))
    s = Scenario.share(float(rng.uniform(0.1, 0.7))) if cfg.vres else Scenario.co2(20.0)
    lp = build_lp(cfg, p, s)
    ref = solve(lp, "reference")
    prod = solve(lp, "highs")
    assert ref.objective == pytest.approx(prod.objective, rel=1e-6)
    a = extract_solution(lp, ref.primal, ref.dual)
    b = extract_solution(lp, prod.primal, prod.dual)
    cost_caps = lp.c[:lp.num_cols] * (ref.primal - prod.primal)
    assert abs(cost_caps.sum()) <= 1e-5 * abs(prod.objective)
    assert sum(a.capacities.values()) > 0 and sum(b.capacities.values()) > 0
