"""Economic indicators computed from prices, dispatch and capacities.

Market values are generation-weighted prices, value factors divide them by
the demand-weighted base price, LCOE divides annualized cost by generation
net of curtailment. The two marginal-value formulas for dispatchable and
variable generators are provided in the forms used for zero-profit checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .techconfig import SystemConfig, marginal_cost
from .timeseries import ProfileSet, annual_demand, peak_load

#: Returned by :func:`merit_order_price` when net load exceeds the stack.
SCARCITY = math.inf


class UndefinedMetricError(ValueError):
    """A ratio metric has a zero (or near-zero) denominator."""


@dataclass(frozen=True)
class DurationCurve:
    values: np.ndarray
    order: np.ndarray  # values[k] == series[order[k]]
    kind: str

    def __len__(self):
        return self.values.size


def duration_curve(series, kind: str = "residual_load") -> DurationCurve:
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    order = np.argsort(-x, kind="stable")
    return DurationCurve(x[order], order, kind)


def residual_load(p: ProfileSet, capacities: Mapping[str, float],
                  profiles: Mapping[str, str] | None = None) -> np.ndarray:
    """Demand minus potential (pre-curtailment) VRE output, per hour.

    ``capacities`` is keyed by technology; ``profiles`` maps technology to
    profile id and defaults to the identity over ``p``'s profiles.
    """
    if profiles is None:
        profiles = {k: k for k in p.availability}
    rl = np.array(p.demand, dtype=float)
    for tech, prof in profiles.items():
        if tech not in capacities:
            raise KeyError(f"no capacity given for VRE technology {tech!r}")
        rl -= p.availability[prof] * capacities[tech]
    return rl


def market_value(prices, generation) -> float:
    lam = np.asarray(prices, dtype=float)
    g = np.asarray(generation, dtype=float)
    if lam.shape != g.shape:
        raise ValueError("price and generation series differ in length")
    total = g.sum()
    if not total > 0:
        raise UndefinedMetricError("market value undefined for zero generation")
    return float(lam @ g / total)


def base_price(prices, demand, weighted: bool = True) -> float:
    lam = np.asarray(prices, dtype=float)
    if not weighted:
        return float(lam.mean())
    d = np.asarray(demand, dtype=float)
    if not d.sum() > 0:
        raise UndefinedMetricError("base price undefined for zero demand")
    return float(lam @ d / d.sum())


def value_factor(mv: float, prices, demand, weighted: bool = True, eps: float = 1e-9) -> float:
    """``mv`` over the base price (demand-weighted unless ``weighted=False``)."""
    base = base_price(prices, demand, weighted)
    if abs(base) <= eps:
        raise UndefinedMetricError(f"base price {base!r} too close to zero for a value factor")
    return mv / base


def lcoe(capacity_cost: float, variable_cost: float, generation: float) -> float:
    if not generation > 0:
        raise UndefinedMetricError("LCOE undefined for zero generation")
    return (capacity_cost + variable_cost) / generation


def mv_dispatchable(prices, vc: float) -> float:
    """Annual margin per MW of a dispatchable unit running whenever price exceeds ``vc``."""
    lam = np.asarray(prices, dtype=float)
    return float(np.maximum(lam - vc, 0.0).sum())


def mv_vre_covariance(prices, cf) -> float:
    """Annual revenue per MW of a VRE unit: ``(mean(price) * mean(cf) + cov) * H``.

    Population covariance; algebraically equal to ``sum(price * cf)``.
    """
    lam = np.asarray(prices, dtype=float)
    f = np.asarray(cf, dtype=float)
    if lam.shape != f.shape or lam.size < 2:
        raise ValueError("need two equal-length series of at least 2 hours")
    lbar = lam.mean()
    fbar = f.mean()
    cov = np.mean((lam - lbar) * (f - fbar))
    return float((lbar * fbar + cov) * lam.size)


def merit_order_price(steps: Sequence[tuple[float, float]], net_load: float) -> float:
    """Price set by the supply step serving ``net_load``.

    ``steps`` are ``(capacity, variable_cost)`` pairs in strictly ascending
    cost order. A load exactly on a step boundary is priced at the lower
    step. Non-positive load clears at 0; load above the stack returns
    :data:`SCARCITY`.
    """
    caps = np.array([s[0] for s in steps], dtype=float)
    costs = np.array([s[1] for s in steps], dtype=float)
    if caps.size == 0 or np.any(caps <= 0):
        raise ValueError("merit-order steps need positive capacities")
    if np.any(np.diff(costs) <= 0):
        raise ValueError("merit-order steps must be strictly ascending in cost")
    if net_load <= 0:
        return 0.0
    cum = np.cumsum(caps)
    if net_load > cum[-1]:
        return SCARCITY
    return float(costs[np.searchsorted(cum, net_load, side="left")])


# -- solution reports ----------------------------------------------------------

@dataclass(frozen=True)
class TechValue:
    tech: str
    kind: str                      # dispatchable | vre
    capacity: float
    generation: float
    market_value: float            # NaN when undefined
    value_factor: float
    lcoe: float
    support: float                 # lcoe - market_value
    curtailment_share: float = 0.0
    market_value_available: float = math.nan  # weighted by pre-curtailment availability
    operating_rent: float = math.nan          # per MW and year, from prices
    annualized_cost: float = math.nan         # per MW and year


@dataclass(frozen=True)
class StorageReport:
    power: float
    energy: float
    ep_ratio: float
    power_share_of_peak: float
    energy_share_of_demand: float
    annual_discharge: float
    full_cycles: float
    simultaneous_hours: int
    revenue: float                  # sum of (price + support) * net discharge
    cost: float                     # annualized capacity cost + variable cost


def _safe(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except UndefinedMetricError:
        return math.nan


def tech_values(sol, cfg: SystemConfig, p: ProfileSet, *, weighted_base: bool = True,
                gen_tol: float = 1e-6) -> dict[str, TechValue]:
    """Market value, value factor, LCOE and rents per generation technology."""
    lam = sol.price
    d = p.demand
    rate = cfg.interest_rate
    mu = sol.vre_support
    out: dict[str, TechValue] = {}
    co2 = sol.scenario.value if sol.scenario.driver == "co2_price" else cfg.co2_price
    for t in cfg.dispatchables:
        g = sol.generation[t.id]
        total = float(g.sum())
        vc = marginal_cost(t, co2)
        cap = sol.capacities[t.id]
        fc = t.annualized_cost(rate)
        mv = _safe(market_value, lam, g) if total > gen_tol else math.nan
        cost = _safe(lcoe, fc * cap, vc * total, total) if total > gen_tol else math.nan
        out[t.id] = TechValue(
            t.id, "dispatchable", cap, total, mv,
            _safe(value_factor, mv, lam, d, weighted_base) if not math.isnan(mv) else math.nan,
            cost, cost - mv, 0.0, math.nan, mv_dispatchable(lam, vc), fc)
    for t in cfg.vres:
        g = sol.generation[t.id]
        cu = sol.curtailment[t.id]
        cf = p.availability[t.profile]
        total = float(g.sum())
        cap = sol.capacities[t.id]
        fc = t.annualized_cost(rate)
        mv = _safe(market_value, lam, g) if total > gen_tol else math.nan
        cost = _safe(lcoe, fc * cap, 0.0, total) if total > gen_tol else math.nan
        avail = total + float(cu.sum())
        out[t.id] = TechValue(
            t.id, "vre", cap, total, mv,
            _safe(value_factor, mv, lam, d, weighted_base) if not math.isnan(mv) else math.nan,
            cost, cost - mv,
            float(cu.sum() / avail) if avail > gen_tol else 0.0,
            _safe(market_value, lam, cf) if cf.sum() > 0 else math.nan,
            mv_vre_covariance(lam + mu, cf), fc)
    return out


def storage_report(sol, cfg: SystemConfig, p: ProfileSet) -> StorageReport:
    if sol.charge is None or cfg.storage is None:
        raise UndefinedMetricError("solution has no storage")
    st = cfg.storage
    power = sol.capacities[st.id]
    energy = sol.storage_energy
    discharge = float(sol.discharge.sum())
    net = sol.discharge - sol.charge
    rate = cfg.interest_rate
    cost = (st.annualized_power_cost(rate) * power + st.annualized_energy_cost(rate) * energy
            + st.variable_cost * discharge)
    return StorageReport(
        power=power,
        energy=energy,
        ep_ratio=energy / power if power > 1e-9 else math.nan,
        power_share_of_peak=power / peak_load(p),
        energy_share_of_demand=energy / annual_demand(p),
        annual_discharge=discharge,
        full_cycles=discharge / energy if energy > 1e-9 else 0.0,
        simultaneous_hours=sol.simultaneous_hours,
        revenue=float((sol.price + sol.vre_support) @ net),
        cost=cost,
    )
