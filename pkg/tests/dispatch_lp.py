"""Dispatch-only LP with fixed capacities, used as a price oracle in tests."""

import numpy as np
import scipy.sparse as sp

from vrelab.model import EQ, LE, Block, LpProblem


def dispatch_lp(steps, demand, vre_available) -> LpProblem:
    """min sum vc*g  s.t.  sum_i g[i,h] + v[h] = d[h],  g <= cap,  v <= avail."""
    n, T = len(steps), len(demand)
    hours = np.arange(T)
    rows, cols, vals = [], [], []
    for i in range(n):
        rows += [hours, T + i * T + hours]
        cols += [i * T + hours, i * T + hours]
        vals += [np.ones(T), np.ones(T)]
    v0 = n * T
    rows += [hours, T + n * T + hours]
    cols += [v0 + hours, v0 + hours]
    vals += [np.ones(T), np.ones(T)]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(T + n * T + T, n * T + T))
    techs = tuple(f"s{i}" for i in range(n))
    c = np.concatenate([np.full(T, vc) for _, vc in steps] + [np.zeros(T)])
    b = np.concatenate([demand] + [np.full(T, cap) for cap, _ in steps] + [vre_available])
    senses = np.array([EQ] * T + [LE] * (n * T + T))
    columns = {"gen": Block("gen", 0, techs, T), "vre": Block("vre", v0, (), T)}
    rws = {"balance": Block("balance", 0, (), T), "cap": Block("cap", T, techs, T),
           "avail": Block("avail", T + n * T, (), T)}
    return LpProblem(c, A, senses, b.astype(float), columns, rws)
