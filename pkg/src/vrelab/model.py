"""Capacity-expansion and dispatch LP for a single node.

Capacities of dispatchable, VRE and storage technologies are chosen together
with their hourly operation. The hourly energy-balance duals are the
wholesale prices; in VRE-share runs the dual of the share row is the
per-MWh support VRE needs on top of market revenues.

Column and row layout is recorded in named blocks so every variable and
constraint can be addressed as ``(kind, tech, hour)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .techconfig import SystemConfig, marginal_cost
from .timeseries import ProfileSet

EQ, LE, GE = "=", "<", ">"


class ModelError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """The solver reported the scenario LP infeasible or unbounded."""

    def __init__(self, message: str, status: str = "infeasible"):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Scenario:
    """One model run: a VRE-share target or a CO2 price, storage on or off."""

    driver: Literal["vre_share", "co2_price"] = "vre_share"
    value: float = 0.0
    storage_enabled: bool = True
    label: str = ""

    def __post_init__(self):
        if self.driver == "vre_share":
            if not 0.0 <= self.value <= 1.0:
                raise ModelError(f"VRE share must lie in [0, 1], got {self.value}")
        elif self.driver == "co2_price":
            if self.value < 0:
                raise ModelError(f"CO2 price must be non-negative, got {self.value}")
        else:
            raise ModelError(f"unknown driver {self.driver!r}")
        if not self.label:
            tag = "share" if self.driver == "vre_share" else "co2"
            object.__setattr__(self, "label", f"{tag}={self.value:g}")

    @classmethod
    def share(cls, phi: float, storage: bool = True) -> "Scenario":
        return cls("vre_share", phi, storage)

    @classmethod
    def co2(cls, price: float, storage: bool = True) -> "Scenario":
        return cls("co2_price", price, storage)


@dataclass(frozen=True)
class Block:
    """Contiguous index range; ``techs`` empty for per-hour-only blocks."""

    name: str
    start: int
    techs: tuple[str, ...]
    hours: int | None  # None for scalar-per-tech blocks

    @property
    def size(self) -> int:
        return max(len(self.techs), 1) * (self.hours if self.hours is not None else 1)

    @property
    def stop(self) -> int:
        return self.start + self.size

    def index(self, tech: str | None = None, hour: int | None = None) -> int:
        k = self.techs.index(tech) if self.techs else 0
        if self.hours is None:
            return self.start + k
        return self.start + k * self.hours + hour

    def view(self, vec: np.ndarray) -> np.ndarray:
        """Slice of ``vec`` shaped ``(tech, hour)``, ``(tech,)`` or ``(hour,)``."""
        part = vec[self.start:self.stop]
        if self.hours is None:
            return part
        if self.techs:
            return part.reshape(len(self.techs), self.hours)
        return part

    def labels(self) -> list[str]:
        if self.hours is None:
            return [f"{self.name}[{t}]" for t in self.techs] or [self.name]
        if self.techs:
            return [f"{self.name}[{t},{h}]" for t in self.techs for h in range(self.hours)]
        return [f"{self.name}[{h}]" for h in range(self.hours)]


@dataclass
class LpProblem:
    """``min c x  s.t.  A x (sense) b,  x >= 0``, with named blocks."""

    c: np.ndarray
    A: sp.coo_matrix
    senses: np.ndarray
    b: np.ndarray
    columns: dict[str, Block]
    rows: dict[str, Block]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m, n = self.A.shape
        if self.c.shape != (n,) or self.b.shape != (m,) or self.senses.shape != (m,):
            raise ModelError("inconsistent LP dimensions")
        for name, blocks, total in (("column", self.columns, n), ("row", self.rows, m)):
            covered = np.zeros(total, dtype=int)
            for blk in blocks.values():
                covered[blk.start:blk.stop] += 1
            if not np.all(covered == 1):
                raise ModelError(f"every {name} must belong to exactly one block")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.A.data))):
            raise ModelError("LP contains NaN or infinite coefficients")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def column_names(self) -> list[str]:
        return [s for blk in sorted(self.columns.values(), key=lambda b: b.start) for s in blk.labels()]

    def row_names(self) -> list[str]:
        return [s for blk in sorted(self.rows.values(), key=lambda b: b.start) for s in blk.labels()]

    def scaled_costs(self, factor: float) -> "LpProblem":
        return LpProblem(self.c * factor, self.A, self.senses, self.b,
                         self.columns, self.rows, dict(self.meta))


class _Builder:
    def __init__(self):
        self.ncols = 0
        self.nrows = 0
        self.columns: dict[str, Block] = {}
        self.rows: dict[str, Block] = {}
        self.r, self.k, self.v = [], [], []
        self.b_parts, self.sense_parts = [], []

    def col(self, name, techs=(), hours=None) -> Block:
        blk = Block(name, self.ncols, tuple(techs), hours)
        self.columns[name] = blk
        self.ncols = blk.stop
        return blk

    def row(self, name, sense, rhs, techs=(), hours=None) -> Block:
        blk = Block(name, self.nrows, tuple(techs), hours)
        self.rows[name] = blk
        self.nrows = blk.stop
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (blk.size,))
        self.b_parts.append(rhs)
        self.sense_parts.append(np.full(blk.size, sense))
        return blk

    def add(self, rows, cols, vals):
        rows = np.asarray(rows).ravel()
        cols = np.asarray(cols).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        self.r.append(rows)
        self.k.append(cols)
        self.v.append(vals)


def build_lp(cfg: SystemConfig, p: ProfileSet, s: Scenario) -> LpProblem:
    """Assemble the scenario LP for ``cfg`` over the hours of ``p``."""
    for v in cfg.vres:
        if v.profile not in p.availability:
            raise ModelError(f"VRE technology {v.id!r}: profile {v.profile!r} not in profile set")
    if p.hours < 2:
        raise ModelError("need at least 2 hours")
    availability = {v.id: p.availability[v.profile] for v in cfg.vres}
    return assemble_lp(cfg, p.demand, availability, s)


def assemble_lp(cfg: SystemConfig, demand, availability: dict, s: Scenario) -> LpProblem:
    """Lower-level :func:`build_lp` on raw arrays (no minimum horizon).

    ``availability`` is keyed by VRE technology id.
    """
    d = np.asarray(demand, dtype=float)
    T = d.size
    disp = [t.id for t in cfg.dispatchables]
    vres = [t.id for t in cfg.vres]
    storage = cfg.storage if s.storage_enabled else None
    shed = cfg.value_of_lost_load is not None
    if not disp and not vres and storage is None and not shed:
        raise ModelError("no technology available to serve demand")
    if s.driver == "vre_share" and not vres:
        raise ModelError("VRE-share scenario needs at least one VRE technology")
    cf = np.array([np.asarray(availability[r], dtype=float) for r in vres]).reshape(len(vres), T)
    co2 = s.value if s.driver == "co2_price" else cfg.co2_price
    rate = cfg.interest_rate
    hours = np.arange(T)

    bld = _Builder()
    k_disp = bld.col("cap", disp) if disp else None
    k_vre = bld.col("cap_vre", vres) if vres else None
    if storage is not None:
        k_sp = bld.col("sto_power")
        k_se = bld.col("sto_energy")
    g_disp = bld.col("gen", disp, T) if disp else None
    g_vre = bld.col("gen_vre", vres, T) if vres else None
    cu = bld.col("curt", vres, T) if vres else None
    if storage is not None:
        st_in = bld.col("charge", (), T)
        st_out = bld.col("discharge", (), T)
        soc = bld.col("soc", (), T)
    g_shed = bld.col("shed", (), T) if shed else None

    c = np.zeros(bld.ncols)
    if disp:
        c[k_disp.start:k_disp.stop] = [t.annualized_cost(rate) for t in cfg.dispatchables]
        vc = np.array([marginal_cost(t, co2) for t in cfg.dispatchables])
        c[g_disp.start:g_disp.stop] = np.repeat(vc, T)
    if vres:
        c[k_vre.start:k_vre.stop] = [t.annualized_cost(rate) for t in cfg.vres]
    if storage is not None:
        c[k_sp.start] = storage.annualized_power_cost(rate)
        c[k_se.start] = storage.annualized_energy_cost(rate)
        c[st_out.start:st_out.stop] = storage.variable_cost
    if shed:
        c[g_shed.start:g_shed.stop] = cfg.value_of_lost_load

    # energy balance
    bal = bld.row("balance", EQ, d, (), T)
    for i in range(len(disp)):
        bld.add(bal.start + hours, g_disp.start + i * T + hours, 1.0)
    for i in range(len(vres)):
        bld.add(bal.start + hours, g_vre.start + i * T + hours, 1.0)
    if storage is not None:
        bld.add(bal.start + hours, st_out.start + hours, 1.0)
        bld.add(bal.start + hours, st_in.start + hours, -1.0)
    if shed:
        bld.add(bal.start + hours, g_shed.start + hours, 1.0)

    if disp:
        lim = bld.row("cap_limit", LE, 0.0, disp, T)
        for i in range(len(disp)):
            bld.add(lim.start + i * T + hours, g_disp.start + i * T + hours, 1.0)
            bld.add(lim.start + i * T + hours, np.full(T, k_disp.start + i), -1.0)
    if vres:
        av = bld.row("availability", EQ, 0.0, vres, T)
        for i in range(len(vres)):
            rows = av.start + i * T + hours
            bld.add(rows, g_vre.start + i * T + hours, 1.0)
            bld.add(rows, cu.start + i * T + hours, 1.0)
            bld.add(rows, np.full(T, k_vre.start + i), -cf[i])

    if storage is not None:
        eta_in = storage.charge_efficiency
        eta_out = storage.discharge_efficiency
        r_in = bld.row("charge_limit", LE, 0.0, (), T)
        bld.add(r_in.start + hours, st_in.start + hours, 1.0)
        bld.add(r_in.start + hours, np.full(T, k_sp.start), -1.0)
        r_out = bld.row("discharge_limit", LE, 0.0, (), T)
        bld.add(r_out.start + hours, st_out.start + hours, 1.0)
        bld.add(r_out.start + hours, np.full(T, k_sp.start), -1.0)
        r_soc = bld.row("soc_limit", LE, 0.0, (), T)
        bld.add(r_soc.start + hours, soc.start + hours, 1.0)
        bld.add(r_soc.start + hours, np.full(T, k_se.start), -1.0)
        # soc[h] - soc[h-1] - eta_in*in[h] + out[h]/eta_out = 0, soc[-1] is soc[T-1]
        dyn = bld.row("soc_dynamics", EQ, 0.0, (), T)
        bld.add(dyn.start + hours, soc.start + hours, 1.0)
        bld.add(dyn.start + hours, soc.start + (hours - 1) % T, -1.0)
        bld.add(dyn.start + hours, st_in.start + hours, -eta_in)
        bld.add(dyn.start + hours, st_out.start + hours, 1.0 / eta_out)

    if s.driver == "vre_share":
        sense = EQ if cfg.share_constraint == "equality" else GE
        share = bld.row("vre_share", sense, s.value * d.sum())
        for i in range(len(vres)):
            bld.add(np.full(T, share.start), g_vre.start + i * T + hours, 1.0)
        if storage is not None:
            bld.add(np.full(T, share.start), st_in.start + hours, -1.0)
            bld.add(np.full(T, share.start), st_out.start + hours, 1.0)
        if shed:
            # the share applies to served demand: VRE = phi * (D - shed)
            bld.add(np.full(T, share.start), g_shed.start + hours, s.value)

    A = sp.coo_matrix(
        (np.concatenate(bld.v), (np.concatenate(bld.r), np.concatenate(bld.k))),
        shape=(bld.nrows, bld.ncols),
    )
    A.sum_duplicates()
    A.eliminate_zeros()
    meta = {
        "scenario": s,
        "hours": T,
        "demand": d,
        "availability": cf,
        "dispatchables": disp,
        "vres": vres,
        "storage": storage.id if storage is not None else None,
        "marginal_costs": {t.id: marginal_cost(t, co2) for t in cfg.dispatchables},
        "co2_price": co2,
    }
    return LpProblem(c, A, np.concatenate(bld.sense_parts), np.concatenate(bld.b_parts),
                     bld.columns, bld.rows, meta)


@dataclass
class SolveResult:
    """Primal and dual solution of a scenario LP in domain terms.

    ``price`` is the energy-balance dual in EUR/MWh. ``vre_support`` is the
    dual of the share row (EUR per MWh of required VRE), zero when the row
    is absent.
    """

    scenario: Scenario
    objective: float
    capacities: dict[str, float]
    storage_energy: float
    generation: dict[str, np.ndarray]
    curtailment: dict[str, np.ndarray]
    charge: np.ndarray | None
    discharge: np.ndarray | None
    soc: np.ndarray | None
    shed: np.ndarray | None
    price: np.ndarray
    vre_support: float
    status: str
    duality_gap: float = 0.0
    demand: np.ndarray | None = None
    simultaneous_hours: int = 0
    storage_id: str | None = None

    @property
    def hours(self) -> int:
        return int(self.price.size)

    def vre_share_realized(self) -> float:
        """VRE generation net of storage losses over total demand."""
        vre = sum(self.generation[r].sum() for r in self.curtailment)
        if self.charge is not None:
            vre -= self.charge.sum() - self.discharge.sum()
        return float(vre / self.demand.sum())


def _pro_rata(gen: dict, curt: dict) -> None:
    """Spread each hour's curtailment over VRE technologies in proportion to availability.

    Which technology absorbs curtailment is not determined by the LP: any
    split with the same hourly total is optimal (all curtailing and
    generating VRE columns have zero availability dual in such an hour).
    A fixed rule makes market values and LCOE reproducible across solvers.
    """
    techs = list(curt)
    avail = np.array([gen[t] + curt[t] for t in techs])
    total_avail = avail.sum(axis=0)
    total_curt = sum(curt[t] for t in techs)
    hours = (total_curt > 0) & (total_avail > 0)
    frac = np.where(hours, total_curt / np.where(hours, total_avail, 1.0), 0.0)
    for t, a in zip(techs, avail):
        curt[t] = np.where(hours, a * frac, curt[t])
        gen[t] = a - curt[t]


def extract_solution(lp: LpProblem, primal, duals, status: str = "optimal", *,
                     duality_gap: float = 0.0, tol: float = 1e-7,
                     pro_rata_curtailment: bool = True) -> SolveResult:
    """Route a primal/dual pair back to technologies and hours.

    Duals must follow the convention ``y_i = d(objective)/d(b_i)``;
    ``price[h]`` is then the system cost of one more MWh of demand in
    hour ``h``. With ``pro_rata_curtailment`` the hourly curtailment is
    re-split in proportion to availability (see :func:`_pro_rata`); totals
    per hour, the objective and all constraints are unchanged.
    """
    if status != "optimal":
        raise InfeasibleError(f"scenario {lp.meta.get('scenario')} not solved: {status}; "
                              f"{describe_blocks(lp)}", status)
    x = np.asarray(primal, dtype=float)
    y = np.asarray(duals, dtype=float)
    if x.shape != (lp.num_cols,) or y.shape != (lp.num_rows,):
        raise ModelError(f"solution vectors {x.shape}/{y.shape} do not match LP {lp.shape}")
    meta = lp.meta
    cols = lp.columns
    caps: dict[str, float] = {}
    gen: dict[str, np.ndarray] = {}
    curt: dict[str, np.ndarray] = {}
    if meta["dispatchables"]:
        for t, k in zip(meta["dispatchables"], cols["cap"].view(x)):
            caps[t] = float(k)
        for t, g in zip(meta["dispatchables"], cols["gen"].view(x)):
            gen[t] = g.copy()
    if meta["vres"]:
        for t, k in zip(meta["vres"], cols["cap_vre"].view(x)):
            caps[t] = float(k)
        for t, g, u in zip(meta["vres"], cols["gen_vre"].view(x), cols["curt"].view(x)):
            gen[t] = g.copy()
            curt[t] = u.copy()
        if pro_rata_curtailment and len(curt) > 1:
            _pro_rata(gen, curt)
    charge = discharge = soc = None
    energy = 0.0
    simultaneous = 0
    if meta["storage"] is not None:
        caps[meta["storage"]] = float(x[cols["sto_power"].start])
        energy = float(x[cols["sto_energy"].start])
        charge = cols["charge"].view(x).copy()
        discharge = cols["discharge"].view(x).copy()
        soc = cols["soc"].view(x).copy()
        simultaneous = int(np.sum((charge > tol) & (discharge > tol)))
    shed = cols["shed"].view(x).copy() if "shed" in cols else None
    mu = float(y[lp.rows["vre_share"].start]) if "vre_share" in lp.rows else 0.0
    return SolveResult(
        scenario=meta["scenario"],
        objective=float(lp.c @ x),
        capacities=caps,
        storage_energy=energy,
        generation=gen,
        curtailment=curt,
        charge=charge,
        discharge=discharge,
        soc=soc,
        shed=shed,
        price=lp.rows["balance"].view(y).copy(),
        vre_support=mu,
        status=status,
        duality_gap=duality_gap,
        demand=np.asarray(meta["demand"]),
        simultaneous_hours=simultaneous,
        storage_id=meta["storage"],
    )


def describe_blocks(lp: LpProblem) -> str:
    cols = ", ".join(f"{b.name}:{b.size}" for b in lp.columns.values())
    rows = ", ".join(f"{b.name}:{b.size}" for b in lp.rows.values())
    return f"columns [{cols}]; rows [{rows}]"


def write_mps(lp: LpProblem, path, name: str = "VRELAB") -> None:
    """Export ``lp`` in free MPS format.

    Column and row names follow the block labels, e.g. ``gen[coal,12]`` or
    ``balance[12]``. The objective row is ``COST``.
    """
    cols = lp.column_names()
    rows = lp.row_names()
    A = lp.A.tocsc()
    kind = {EQ: "E", LE: "L", GE: "G"}
    lines = [f"NAME {name}", "ROWS", " N COST"]
    lines += [f" {kind[s]} {r}" for s, r in zip(lp.senses, rows)]
    lines.append("COLUMNS")
    for j, cname in enumerate(cols):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        if lp.c[j] != 0 or lo == hi:
            lines.append(f" {cname} COST {float(lp.c[j])!r}")
        for i, v in zip(A.indices[lo:hi], A.data[lo:hi]):
            lines.append(f" {cname} {rows[i]} {float(v)!r}")
    lines.append("RHS")
    for i, v in enumerate(lp.b):
        if v != 0:
            lines.append(f" RHS {rows[i]} {float(v)!r}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
