"""Single runs, sweeps over VRE shares or CO2 prices, and storage comparisons."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .metrics import (DurationCurve, StorageReport, TechValue, base_price, duration_curve,
                      residual_load, storage_report, tech_values)
from .model import InfeasibleError, Scenario, SolveResult, build_lp, extract_solution
from .solver import DualityReport, SolverError, check_optimality, solve
from .techconfig import SystemConfig
from .timeseries import ProfileSet

log = logging.getLogger(__name__)

WORKERS_ENV = "VRELAB_WORKERS"


class OptimalityError(RuntimeError):
    """The solver claimed optimality but the duality check failed."""


@dataclass
class ScenarioResult:
    scenario: Scenario
    solution: SolveResult
    values: dict[str, TechValue]
    storage: StorageReport | None
    duality: DualityReport
    rldc: DurationCurve
    pdc: DurationCurve
    residual_load: np.ndarray
    base_price: float
    backend: str
    wall_time: float
    status: str = "ok"

    @property
    def objective(self) -> float:
        return self.solution.objective


@dataclass
class FailedPoint:
    scenario: Scenario
    status: str  # infeasible | failed
    message: str

    objective = math.nan


def diagnose_infeasibility(cfg: SystemConfig, p: ProfileSet, s: Scenario) -> str:
    parts = [f"scenario {s.label}"]
    storage = cfg.storage is not None and s.storage_enabled
    parts.append("storage " + ("enabled" if storage else "disabled"))
    parts.append("lost load " + ("allowed" if cfg.value_of_lost_load is not None else "disabled"))
    if s.driver == "vre_share" and cfg.vres:
        total_cf = sum(p.availability[v.profile] for v in cfg.vres)
        dark = int(np.sum((total_cf <= 0) & (p.demand > 0)))
        if dark and s.value >= 1.0 and not storage:
            parts.append(f"{dark} hours with demand but no VRE availability make a 100% "
                         "share impossible without storage")
        elif dark:
            parts.append(f"{dark} hours with demand but no VRE availability")
    if not cfg.dispatchables and not storage and cfg.value_of_lost_load is None:
        parts.append("no dispatchable capacity can be built")
    return "; ".join(parts)


def run_scenario(cfg: SystemConfig, p: ProfileSet, s: Scenario, *, backend: str | None = None,
                 feas_tol: float | None = None, gap_tol: float | None = None,
                 check: bool = True, log_path=None) -> ScenarioResult:
    """Build, solve, verify and evaluate one scenario.

    Raises :class:`InfeasibleError` for infeasible or unbounded LPs and
    :class:`OptimalityError` when the duality report fails its tolerances.
    """
    backend = backend or cfg.solver.backend
    feas_tol = feas_tol if feas_tol is not None else cfg.solver.feas_tol
    gap_tol = gap_tol if gap_tol is not None else cfg.solver.gap_tol
    t0 = time.perf_counter()
    lp = build_lp(cfg, p, s)
    pd = solve(lp, backend, feas_tol=feas_tol, log_path=log_path)
    if pd.status in ("infeasible", "unbounded"):
        raise InfeasibleError(f"{pd.status}: {diagnose_infeasibility(cfg, p, s)}", pd.status)
    if not pd.optimal:
        raise SolverError(f"{s.label}: solver stopped with status {pd.status}")
    report = check_optimality(lp, pd, feas_tol=feas_tol, gap_tol=gap_tol)
    if check and not report.passed:
        raise OptimalityError(f"{s.label}: {report}")
    sol = extract_solution(lp, pd.primal, pd.dual, pd.status, duality_gap=report.duality_gap)

    caps = {v.id: sol.capacities[v.id] for v in cfg.vres}
    rl = residual_load(p, caps, {v.id: v.profile for v in cfg.vres})
    storage = storage_report(sol, cfg, p) if sol.charge is not None else None
    return ScenarioResult(
        scenario=s,
        solution=sol,
        values=tech_values(sol, cfg, p),
        storage=storage,
        duality=report,
        rldc=duration_curve(rl, "residual_load"),
        pdc=duration_curve(sol.price, "price"),
        residual_load=rl,
        base_price=base_price(sol.price, p.demand),
        backend=backend,
        wall_time=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class SweepGrid:
    driver: str
    values: tuple[float, ...]
    storage_enabled: bool = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("sweep grid needs at least one point")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly ascending")
        object.__setattr__(self, "values", vals)
        self.scenarios()  # raises on out-of-domain values

    @classmethod
    def from_values(cls, driver: str, values, storage_enabled: bool = True) -> "SweepGrid":
        return cls(driver, tuple(sorted(set(float(v) for v in values))), storage_enabled)

    def scenarios(self) -> list[Scenario]:
        return [Scenario(self.driver, v, self.storage_enabled) for v in self.values]


@dataclass
class SweepResult:
    grid: SweepGrid
    entries: list  # ScenarioResult | FailedPoint, in grid order
    manifest: dict = field(default_factory=dict)

    def ok(self) -> list[ScenarioResult]:
        return [e for e in self.entries if isinstance(e, ScenarioResult)]

    def objectives(self) -> np.ndarray:
        return np.array([e.objective for e in self.entries])


def _run_point(args):
    cfg, p, s, backend, feas_tol, gap_tol, log_path = args
    try:
        return run_scenario(cfg, p, s, backend=backend, feas_tol=feas_tol, gap_tol=gap_tol,
                            log_path=log_path)
    except InfeasibleError as exc:
        return FailedPoint(s, "infeasible", str(exc))
    except (SolverError, OptimalityError) as exc:
        return FailedPoint(s, "failed", str(exc))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def sweep(grid: SweepGrid, cfg: SystemConfig, p: ProfileSet, *, backend: str | None = None,
          feas_tol: float | None = None, gap_tol: float | None = None,
          workers: int | None = None, log_path=None) -> SweepResult:
    """Solve every grid point independently; failures are recorded, not raised.

    ``workers`` defaults to the ``VRELAB_WORKERS`` environment variable (1 if unset).
    """
    workers = workers or default_workers()
    backend = backend or cfg.solver.backend
    feas_tol = feas_tol if feas_tol is not None else cfg.solver.feas_tol
    gap_tol = gap_tol if gap_tol is not None else cfg.solver.gap_tol
    t0 = time.perf_counter()
    jobs = [(cfg, p, s, backend, feas_tol, gap_tol, log_path) for s in grid.scenarios()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            entries = list(pool.map(_run_point, jobs))
    else:
        entries = [_run_point(j) for j in jobs]
    manifest = sweep_manifest(grid, cfg, p, backend, feas_tol, gap_tol, entries)
    manifest["wall_time"] = time.perf_counter() - t0
    return SweepResult(grid, entries, manifest)


def sweep_manifest(grid, cfg, p, backend, feas_tol, gap_tol, entries) -> dict:
    return {
        "tool_version": __version__,
        "config_sha256": cfg.digest(),
        "data_sha256": p.digest(),
        "data_label": p.label,
        "hours": p.hours,
        "driver": grid.driver,
        "values": list(grid.values),
        "storage_enabled": grid.storage_enabled,
        "backend": backend,
        "feas_tol": feas_tol,
        "gap_tol": gap_tol,
        "points": [{"label": e.scenario.label, "status": e.status} for e in entries],
    }


@dataclass
class PointDelta:
    """With-storage minus without-storage values at one grid point."""

    scenario: Scenario
    rldc: np.ndarray
    pdc: np.ndarray
    market_value: dict[str, float]
    value_factor: dict[str, float]
    lcoe: dict[str, float]
    system_cost: float
    storage_value: float  # cost without storage minus cost with storage


@dataclass
class DeltaResult:
    grid: SweepGrid
    points: list  # PointDelta | None for points failed on either side

    def storage_values(self) -> np.ndarray:
        return np.array([pt.storage_value if pt is not None else np.nan for pt in self.points])


def compare_storage(with_storage: SweepResult, without_storage: SweepResult) -> DeltaResult:
    g1, g0 = with_storage.grid, without_storage.grid
    if g1.driver != g0.driver or g1.values != g0.values:
        raise ValueError(f"grid mismatch: {g1.driver} {g1.values} vs {g0.driver} {g0.values}")
    points = []
    for a, b in zip(with_storage.entries, without_storage.entries):
        if not (isinstance(a, ScenarioResult) and isinstance(b, ScenarioResult)):
            points.append(None)
            continue
        techs = [t for t, v in a.values.items() if v.kind == "vre"]
        points.append(PointDelta(
            scenario=a.scenario,
            rldc=a.rldc.values - b.rldc.values,
            pdc=a.pdc.values - b.pdc.values,
            market_value={t: a.values[t].market_value - b.values[t].market_value for t in techs},
            value_factor={t: a.values[t].value_factor - b.values[t].value_factor for t in techs},
            lcoe={t: a.values[t].lcoe - b.values[t].lcoe for t in techs},
            system_cost=a.objective - b.objective,
            storage_value=b.objective - a.objective,
        ))
    return DeltaResult(g1, points)
