"""Flat-file persistence of scenario and sweep results.

All tables are comma-separated with a header row; numbers carry 6
significant digits. A sweep directory looks like::

    <out>/manifest.json
    <out>/aggregate.csv
    <out>/points/000_share_0.2/{manifest.json, summary.csv, capacities.csv,
                               dispatch.csv, metrics.csv, storage.csv,
                               rldc.csv, pdc.csv}

``manifest.json`` carries wall times, so it differs between reruns; the
``results_sha256`` it records covers only the result tables and is
reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
import shutil
from pathlib import Path

import numpy as np

from . import __version__
from .scenarios import FailedPoint, ScenarioResult, SweepResult

RESULT_FILES = ("summary.csv", "capacities.csv", "dispatch.csv", "metrics.csv",
                "storage.csv", "rldc.csv", "pdc.csv")

METRIC_COLUMNS = ("tech", "kind", "capacity_mw", "generation_mwh", "market_value_eur_mwh",
                  "value_factor", "lcoe_eur_mwh", "support_eur_mwh", "curtailment_share",
                  "market_value_available_eur_mwh", "operating_rent_eur_mw",
                  "annualized_cost_eur_mw")


class OutputExistsError(FileExistsError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.6g}"


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[dict]]:
    """Read a table written by :func:`write_table`; numeric cells become floats."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            rec = {}
            for k, v in zip(header, raw):
                try:
                    rec[k] = float(v)
                except ValueError:
                    rec[k] = v
            rows.append(rec)
    return header, rows


def read_column(path, name: str) -> np.ndarray:
    _, rows = read_table(path)
    return np.array([r[name] for r in rows], dtype=float)


def prepare_dir(path, force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not force:
            raise OutputExistsError(f"output directory {path} is not empty (use --force)")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def results_digest(directory: Path, names) -> str:
    h = hashlib.sha256()
    for name in sorted(names):
        f = directory / name
        if f.exists():
            h.update(name.encode())
            h.update(_sha256(f).encode())
    return h.hexdigest()


def write_point(directory, res: ScenarioResult | FailedPoint, *, config_sha256: str = "",
                data_sha256: str = "", tolerances: dict | None = None) -> Path:
    """Write one scenario's tables and manifest into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    s = res.scenario
    manifest = {
        "tool_version": __version__,
        "config_sha256": config_sha256,
        "data_sha256": data_sha256,
        "scenario": {"driver": s.driver, "value": s.value,
                     "storage_enabled": s.storage_enabled, "label": s.label},
        "tolerances": tolerances or {},
    }
    if isinstance(res, FailedPoint):
        manifest.update(status=res.status, message=res.message, backend="", wall_time=0.0)
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return d

    sol = res.solution
    techs = list(sol.capacities)
    storage_id = sol.storage_id

    write_table(d / "summary.csv", ("key", "value"), [
        ("objective_eur", sol.objective),
        ("vre_support_eur_mwh", sol.vre_support),
        ("vre_share_realized", sol.vre_share_realized()),
        ("base_price_eur_mwh", res.base_price),
        ("mean_price_eur_mwh", float(np.mean(sol.price))),
        ("min_price_eur_mwh", float(np.min(sol.price))),
        ("max_price_eur_mwh", float(np.max(sol.price))),
        ("negative_price_hours", int(np.sum(sol.price < -1e-6))),
        ("negative_residual_load_hours", int(np.sum(res.residual_load < 0))),
        ("duality_gap", res.duality.duality_gap),
        ("primal_residual", res.duality.primal_residual),
        ("dual_residual", res.duality.dual_residual),
    ])
    write_table(d / "capacities.csv", ("tech", "power_mw", "energy_mwh"),
                [(t, sol.capacities[t], sol.storage_energy if t == storage_id else 0.0)
                 for t in techs])

    gen_t = list(sol.generation)
    vre_t = list(sol.curtailment)
    header = ["hour", "demand_mw", "price_eur_mwh"]
    header += [f"gen_{t}_mw" for t in gen_t] + [f"curt_{t}_mw" for t in vre_t]
    cols = [np.arange(sol.hours), sol.demand, sol.price]
    cols += [sol.generation[t] for t in gen_t] + [sol.curtailment[t] for t in vre_t]
    if sol.charge is not None:
        header += ["charge_mw", "discharge_mw", "soc_mwh"]
        cols += [sol.charge, sol.discharge, sol.soc]
    if sol.shed is not None:
        header.append("shed_mw")
        cols.append(sol.shed)
    rows = zip(*[[int(h) for h in cols[0]], *cols[1:]])
    write_table(d / "dispatch.csv", header, rows)

    write_table(d / "metrics.csv", METRIC_COLUMNS, [
        (v.tech, v.kind, v.capacity, v.generation, v.market_value, v.value_factor, v.lcoe,
         v.support, v.curtailment_share, v.market_value_available, v.operating_rent,
         v.annualized_cost)
        for v in res.values.values()])
    if res.storage is not None:
        st = res.storage
        write_table(d / "storage.csv", ("metric", "value"), [
            ("power_mw", st.power), ("energy_mwh", st.energy), ("ep_ratio_h", st.ep_ratio),
            ("power_share_of_peak", st.power_share_of_peak),
            ("energy_share_of_demand", st.energy_share_of_demand),
            ("annual_discharge_mwh", st.annual_discharge), ("full_cycles", st.full_cycles),
            ("simultaneous_hours", st.simultaneous_hours), ("revenue_eur", st.revenue),
            ("cost_eur", st.cost)])
    write_table(d / "rldc.csv", ("rank", "hour", "residual_load_mw"),
                zip(range(len(res.rldc)), res.rldc.order.tolist(), res.rldc.values))
    write_table(d / "pdc.csv", ("rank", "hour", "price_eur_mwh"),
                zip(range(len(res.pdc)), res.pdc.order.tolist(), res.pdc.values))

    manifest.update(status="ok", backend=res.backend, wall_time=res.wall_time,
                    results_sha256=results_digest(d, RESULT_FILES))
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return d


def point_dirname(index: int, label: str) -> str:
    return f"{index:03d}_" + re.sub(r"[^A-Za-z0-9.]+", "_", label)


def aggregate_rows(sweep: SweepResult) -> tuple[list[str], list[list]]:
    ok = sweep.ok()
    techs = list(ok[0].solution.capacities) if ok else []
    vres = [t for t, v in ok[0].values.items() if v.kind == "vre"] if ok else []
    has_storage = bool(ok) and ok[0].storage is not None
    header = ["point", "label", "driver", "value", "status", "objective_eur",
              "vre_support_eur_mwh", "vre_share_realized", "base_price_eur_mwh"]
    header += [f"cap_{t}_mw" for t in techs]
    for t in vres:
        header += [f"mv_{t}", f"vf_{t}", f"lcoe_{t}", f"curt_share_{t}"]
    if has_storage:
        header += ["storage_energy_mwh", "storage_power_share_of_peak",
                   "storage_energy_share_of_demand"]
    rows = []
    for i, e in enumerate(sweep.entries):
        s = e.scenario
        row = [i, s.label, s.driver, s.value, e.status]
        if isinstance(e, FailedPoint):
            rows.append(row + [math.nan] * (len(header) - len(row)))
            continue
        sol = e.solution
        row += [sol.objective, sol.vre_support, sol.vre_share_realized(), e.base_price]
        row += [sol.capacities[t] for t in techs]
        for t in vres:
            v = e.values[t]
            row += [v.market_value, v.value_factor, v.lcoe, v.curtailment_share]
        if has_storage:
            row += [e.storage.energy, e.storage.power_share_of_peak,
                    e.storage.energy_share_of_demand]
        rows.append(row)
    return header, rows


def write_sweep(directory, sweep: SweepResult, *, force: bool = False) -> Path:
    out = prepare_dir(directory, force)
    man = sweep.manifest
    tolerances = {"feas_tol": man.get("feas_tol"), "gap_tol": man.get("gap_tol")}
    names = []
    for i, e in enumerate(sweep.entries):
        name = point_dirname(i, e.scenario.label)
        write_point(out / "points" / name, e, config_sha256=man.get("config_sha256", ""),
                    data_sha256=man.get("data_sha256", ""), tolerances=tolerances)
        names.append(name)
    header, rows = aggregate_rows(sweep)
    write_table(out / "aggregate.csv", header, rows)
    h = hashlib.sha256()
    h.update(_sha256(out / "aggregate.csv").encode())
    for name in names:
        f = out / "points" / name / "manifest.json"
        h.update(json.loads(f.read_text()).get("results_sha256", "").encode())
    manifest = dict(man)
    manifest["point_dirs"] = names
    manifest["results_sha256"] = h.hexdigest()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def read_sweep(directory) -> dict:
    """Load a sweep directory: manifest, aggregate rows and point directories."""
    d = Path(directory)
    mf = d / "manifest.json"
    if not mf.is_file():
        raise FileNotFoundError(f"{d}: missing manifest.json")
    manifest = json.loads(mf.read_text())
    agg = d / "aggregate.csv"
    if not agg.is_file():
        raise FileNotFoundError(f"{d}: missing aggregate.csv")
    header, rows = read_table(agg)
    points = [d / "points" / name for name in manifest.get("point_dirs", [])]
    return {"manifest": manifest, "aggregate": rows, "header": header, "points": points}
