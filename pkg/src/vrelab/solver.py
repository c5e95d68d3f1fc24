"""LP solvers returning primal and dual solutions.

Two routes share one contract (:class:`PrimalDual`):

* :func:`solve_reference` -- a revised simplex method written here, with
  Bland's rule for anti-cycling. Slow but self-contained and deterministic;
  used as the oracle for desk-scale instances.
* :func:`solve` -- dispatches to a backend (HiGHS through ``highspy`` by
  default, or the reference solver).

Duals follow ``y_i = d(objective)/d(b_i)``: non-positive on ``<=`` rows and
non-negative on ``>=`` rows of a minimization.
"""

from __future__ import annotations

import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import EQ, GE, LE, LpProblem

log = logging.getLogger(__name__)

FEAS_TOL = 1e-6
GAP_TOL = 1e-6
PIVOT_TOL = 1e-9
REFERENCE_MAX_COLS = 5000
BACKENDS = ("highs", "highs-ds", "highs-ipm", "reference")


class SolverError(RuntimeError):
    pass


@dataclass
class PrimalDual:
    primal: np.ndarray
    dual: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded | iteration-limit
    iterations: int = 0
    backend: str = ""
    wall_time: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def dual_objective(self, lp: LpProblem) -> float:
        return float(lp.b @ self.dual)

    def duality_gap(self, lp: LpProblem) -> float:
        return abs(self.objective - self.dual_objective(lp)) / (1.0 + abs(self.objective))


@dataclass
class DualityReport:
    primal_residual: float
    dual_residual: float
    duality_gap: float
    row_complementarity: float
    col_complementarity: float
    feas_tol: float = FEAS_TOL
    gap_tol: float = GAP_TOL
    worst_row: int = -1
    worst_col: int = -1
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL: " + "; ".join(self.failures)
        return (f"primal residual {self.primal_residual:.3g}, dual residual "
                f"{self.dual_residual:.3g}, gap {self.duality_gap:.3g}, "
                f"complementarity {max(self.row_complementarity, self.col_complementarity):.3g}"
                f" -> {verdict}")


# -- scaling -----------------------------------------------------------------

def _pow2(x: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(x)))


def equilibrate(A: sp.csr_matrix, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors ``r``, ``s`` so that ``diag(r) A diag(s)`` is balanced.

    Geometric-mean passes followed by a max-norm pass; factors are powers of
    two, so scaling introduces no rounding.
    """
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    M = abs(A).tocsr()
    if M.nnz == 0:
        return r, s
    for _ in range(passes):
        S = sp.diags(r) @ M @ sp.diags(s)
        rmax = _rowwise(S, np.maximum)
        rmin = _rowwise(S, np.minimum)
        ok = rmax > 0
        r[ok] /= _pow2(np.sqrt(rmax[ok] * rmin[ok]))
        S = (sp.diags(r) @ M @ sp.diags(s)).tocsc()
        cmax = _colwise(S, np.maximum)
        cmin = _colwise(S, np.minimum)
        ok = cmax > 0
        s[ok] /= _pow2(np.sqrt(cmax[ok] * cmin[ok]))
    S = sp.diags(r) @ M @ sp.diags(s)
    rmax = _rowwise(S.tocsr(), np.maximum)
    r[rmax > 0] /= _pow2(rmax[rmax > 0])
    return r, s


def _rowwise(M: sp.csr_matrix, op) -> np.ndarray:
    M = M.tocsr()
    out = np.zeros(M.shape[0])
    nz = np.diff(M.indptr) > 0
    out[nz] = op.reduceat(M.data, M.indptr[:-1][nz])
    return out


def _colwise(M: sp.csc_matrix, op) -> np.ndarray:
    return _rowwise(M.T.tocsr(), op)


# -- reference revised simplex -----------------------------------------------

class _Basis:
    """Sparse LU of the basis matrix plus a product-form eta file."""

    def __init__(self, A: sp.csc_matrix, basis: np.ndarray, refactor_every: int = 64):
        self.A = A
        self.basis = basis
        self.refactor_every = refactor_every
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis].tocsc()
        self.lu = splu(B, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self.lu.solve(a)
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= xr * w
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        z = np.array(c, dtype=float)
        for r, w in reversed(self.etas):
            zr = z[r]
            z[r] = 0.0
            z[r] = (zr - z @ w) / w[r]
        return self.lu.solve(z, trans="T")

    def replace(self, r: int, q: int, w: np.ndarray) -> bool | None:
        """Swap column ``q`` into position ``r``.

        Returns True after a refactorization, False otherwise, and None if the
        new basis turned out singular; the swap is then undone.
        """
        old = self.basis[r]
        self.basis[r] = q
        self.etas.append((r, w))
        if len(self.etas) >= self.refactor_every:
            try:
                self.refactor()
            except RuntimeError:
                # the eta file hid a (near) zero pivot; go back to the old basis
                self.basis[r] = old
                self.refactor()
                return None
            return True
        return False


def _simplex(A: sp.csc_matrix, AT: sp.csr_matrix, b: np.ndarray, cost: np.ndarray,
             basis: np.ndarray, allowed: np.ndarray, *, rule: str, max_iter: int,
             opt_tol=1e-9, stall_limit: int = 50):
    """Primal simplex from a feasible basis. Returns (status, basis, x_B, n_iter).

    ``opt_tol`` may be a per-column array so that optimality is judged in the
    units of the unscaled problem.
    """
    fac = _Basis(A, basis)
    xb = fac.ftran(b)
    is_basic = np.zeros(A.shape[1], dtype=bool)
    is_basic[basis] = True
    degenerate_run = 0
    banned = np.zeros(A.shape[1], dtype=bool)  # entering columns rejected since the last pivot
    rescues = 0
    it = 0
    while True:
        if it >= max_iter:
            return "iteration-limit", fac.basis, xb, it
        y = fac.btran(cost[fac.basis])
        d = cost - AT @ y
        cand = allowed & ~is_basic & ~banned & (d < -opt_tol)
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            if not np.any(allowed & ~is_basic & banned & (d < -opt_tol)):
                return "optimal", fac.basis, xb, it
            # only rejected columns price out: retry them on a fresh factorization
            rescues += 1
            if rescues > 3:
                raise SolverError("reference simplex: no numerically stable pivot left")
            fac.refactor()
            xb = fac.ftran(b)
            banned[:] = False
            continue
        if rule == "bland" or degenerate_run >= stall_limit:
            q = int(idx[0])
        else:
            q = int(idx[np.argmin(d[idx])])
        a = A[:, q].toarray().ravel()
        w = fac.ftran(a)
        rows = np.flatnonzero(w > PIVOT_TOL * max(1.0, float(np.max(np.abs(w)))))
        if rows.size == 0:
            if np.any(w > PIVOT_TOL):
                banned[q] = True  # only tiny pivots: numerically unreliable direction
                continue
            return "unbounded", fac.basis, xb, it
        ratios = np.maximum(xb[rows], 0.0) / w[rows]
        theta = ratios.min()
        ties = rows[ratios <= theta + 1e-12 * (1.0 + theta)]
        bland = rule == "bland" or degenerate_run >= stall_limit
        if bland:
            r = int(ties[np.argmin(fac.basis[ties])])
        else:
            r = int(ties[np.argmax(w[ties])])  # largest pivot among ties
        theta = max(xb[r], 0.0) / w[r]
        leaving = fac.basis[r]
        done = fac.replace(r, q, w)
        if done is None:
            banned[q] = True
            xb = fac.ftran(b)
            continue
        banned[:] = False
        rescues = 0
        degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0
        xb = xb - theta * w
        xb[r] = theta
        is_basic[leaving] = False
        is_basic[q] = True
        if done:
            xb = fac.ftran(b)
        it += 1


def solve_reference(lp: LpProblem, *, max_cols: int = REFERENCE_MAX_COLS,
                    rule: str = "bland", max_iter: int | None = None,
                    feas_tol: float = FEAS_TOL) -> PrimalDual:
    """Two-phase revised simplex on the equilibrated LP.

    ``rule="bland"`` prices with Bland's smallest-index rule throughout;
    ``rule="dantzig"`` uses most-negative pricing and falls back to Bland's
    rule after a run of degenerate pivots. Under Bland's rule the leaving
    variable is the lowest-index basic variable among ratio-test ties, which
    rules out cycling; otherwise the tie with the largest pivot leaves.
    Infeasible and unbounded problems are reported via ``status``.
    """
    if lp.num_cols > max_cols:
        raise SolverError(f"reference solver limited to {max_cols} columns, LP has {lp.num_cols}")
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pricing rule {rule!r}")
    t0 = time.perf_counter()
    A0 = lp.A.tocsr()
    m, n = A0.shape
    r, s = equilibrate(A0)
    cscale = float(np.max(np.abs(lp.c * s))) or 1.0
    A = (sp.diags(r) @ A0 @ sp.diags(s)).tocsr()
    bs = lp.b * r
    cs = lp.c * s / cscale

    ineq = np.flatnonzero(lp.senses != EQ)
    sign = np.where(lp.senses[ineq] == LE, 1.0, -1.0)
    S = sp.csr_matrix((sign, (ineq, np.arange(ineq.size))), shape=(m, ineq.size))
    flip = np.where(bs < 0, -1.0, 1.0)
    F = sp.diags(flip)
    Afull = (F @ sp.hstack([A, S])).tocsc()
    bf = bs * flip
    nfull = Afull.shape[1]

    # slacks with coefficient +1 start basic, other rows get an artificial
    slack_coef = np.zeros(m)
    slack_coef[ineq] = sign * flip[ineq]
    start = np.full(m, -1)
    start[ineq[slack_coef[ineq] > 0]] = n + np.flatnonzero(slack_coef[ineq] > 0)
    need_art = np.flatnonzero(start < 0)
    Art = sp.csr_matrix((np.ones(need_art.size), (need_art, np.arange(need_art.size))),
                        shape=(m, need_art.size))
    Atot = sp.hstack([Afull, Art]).tocsc()
    ATt = Atot.T.tocsr()
    ntot = Atot.shape[1]
    start[need_art] = nfull + np.arange(need_art.size)
    basis = start.astype(np.int64)
    limit = max_iter if max_iter is not None else 50 * (m + ntot)
    iters = 0

    nonart = np.zeros(ntot, dtype=bool)
    nonart[:nfull] = True
    if need_art.size:
        c1 = np.zeros(ntot)
        c1[nfull:] = 1.0
        status, basis, xb, k = _simplex(Atot, ATt, bf, c1, basis, np.ones(ntot, dtype=bool),
                                        rule=rule, max_iter=limit)
        iters += k
        if status == "iteration-limit":
            return _failed(lp, status, iters, t0)
        infeas = float(c1[basis] @ xb)
        if infeas > feas_tol * (1.0 + np.max(np.abs(bf), initial=0.0)):
            return _failed(lp, "infeasible", iters, t0)
        basis = _drive_out_artificials(Atot, ATt, basis, nfull)

    c2 = np.zeros(ntot)
    c2[:n] = cs
    # a scaled reduced cost d_j is worth d_j * cscale / s_j euros on a structural
    # column and d * r_i * cscale on the slack of row i
    opt_tol = np.full(ntot, 1e-9)
    opt_tol[:n] = 1e-9 * np.maximum(1.0, np.abs(lp.c)) * s / cscale
    opt_tol[n:nfull] = 1e-9 / (r[ineq] * cscale)
    status, basis, xb, k = _simplex(Atot, ATt, bf, c2, basis, nonart,
                                    rule=rule, max_iter=limit - iters, opt_tol=opt_tol)
    iters += k
    if status != "optimal":
        return _failed(lp, status, iters, t0)

    fac = _Basis(Atot, basis)
    xb = fac.ftran(bf)
    y = fac.btran(c2[basis])
    xfull = np.zeros(ntot)
    xfull[basis] = xb
    x = xfull[:n] * s
    dual = y * flip * r * cscale
    rc = lp.c - lp.A.T @ dual
    return PrimalDual(x, dual, np.asarray(rc).ravel(), float(lp.c @ x), "optimal",
                      iters, "reference", time.perf_counter() - t0)


def _drive_out_artificials(A, AT, basis, nfull):
    """Pivot zero-level artificials out of the basis where a real column allows it."""
    fac = _Basis(A, basis)
    m = A.shape[0]
    for r in range(m):
        if fac.basis[r] < nfull:
            continue
        e = np.zeros(m)
        e[r] = 1.0
        row = AT[:nfull] @ fac.btran(e)
        row[fac.basis[fac.basis < nfull]] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-7)
        if cand.size == 0:
            continue  # redundant row; artificial stays basic at zero
        q = int(cand[np.argmax(np.abs(row[cand]))])
        w = fac.ftran(A[:, q].toarray().ravel())
        fac.replace(r, q, w)
    return fac.basis


def _failed(lp: LpProblem, status: str, iters: int, t0: float, backend: str = "reference"):
    nan_x = np.full(lp.num_cols, np.nan)
    return PrimalDual(nan_x, np.full(lp.num_rows, np.nan), nan_x.copy(), float("nan"),
                      status, iters, backend, time.perf_counter() - t0)


# -- production route ----------------------------------------------------------

_HIGHS_METHODS = {"highs": {}, "highs-ds": {"solver": "simplex"},
                  "highs-ipm": {"solver": "ipm", "run_crossover": "on"}}


def _solve_highs(lp: LpProblem, method: str, feas_tol: float, log_path=None,
                 scale: bool = False) -> PrimalDual:
    # HiGHS scales internally; pre-equilibrating on top of that loosens the
    # unscaled primal residual of full-year IPM solves past 1e-6
    try:
        import highspy
    except ImportError as exc:  # pragma: no cover
        raise SolverError("backend 'highs' needs the highspy package") from exc

    t0 = time.perf_counter()
    A0 = lp.A.tocsr()
    if scale:
        r, s = equilibrate(A0)
    else:
        r, s = np.ones(lp.num_rows), np.ones(lp.num_cols)
    cscale = float(np.max(np.abs(lp.c * s))) or 1.0
    A = (sp.diags(r) @ A0 @ sp.diags(s)).tocsc()
    b = lp.b * r
    inf = highspy.kHighsInf
    model = highspy.HighsLp()
    model.num_col_ = lp.num_cols
    model.num_row_ = lp.num_rows
    model.col_cost_ = lp.c * s / cscale
    model.col_lower_ = np.zeros(lp.num_cols)
    model.col_upper_ = np.full(lp.num_cols, inf)
    model.row_lower_ = np.where(lp.senses == LE, -inf, b)
    model.row_upper_ = np.where(lp.senses == GE, inf, b)
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = A.indptr
    model.a_matrix_.index_ = A.indices
    model.a_matrix_.value_ = A.data
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    tol = min(feas_tol, 1e-7)
    h.setOptionValue("primal_feasibility_tolerance", tol)
    h.setOptionValue("dual_feasibility_tolerance", tol)
    h.setOptionValue("ipm_optimality_tolerance", 1e-10)
    for key, value in _HIGHS_METHODS[method].items():
        h.setOptionValue(key, value)
    tmp_log = None
    if log_path is not None:
        fd, tmp_log = tempfile.mkstemp(suffix=".log")
        os.close(fd)
        h.setOptionValue("log_file", tmp_log)
        h.setOptionValue("log_to_console", False)
        h.setOptionValue("output_flag", True)
    h.passModel(model)
    h.run()
    wall = time.perf_counter() - t0
    ms = h.getModelStatus()
    info = h.getInfo()
    iters = int(info.simplex_iteration_count + max(info.ipm_iteration_count, 0))
    M = highspy.HighsModelStatus
    status = {M.kOptimal: "optimal", M.kInfeasible: "infeasible", M.kUnbounded: "unbounded",
              M.kUnboundedOrInfeasible: "infeasible", M.kIterationLimit: "iteration-limit",
              M.kTimeLimit: "iteration-limit"}.get(ms)
    if log_path is not None:
        h.setOptionValue("output_flag", False)
        h.setOptionValue("log_file", "")  # release the temporary log
        text = Path(tmp_log).read_text()
        os.unlink(tmp_log)
        with open(log_path, "a") as fh:
            fh.write(text + f"backend={method} status={h.modelStatusToString(ms)} "
                     f"iterations={iters} wall={wall:.3f}s\n")
    if status is None:
        lo, hi = np.min(np.abs(A0.data)), np.max(np.abs(A0.data))
        raise SolverError(f"HiGHS stopped with {h.modelStatusToString(ms)}; "
                          f"|A| range [{lo:.3g}, {hi:.3g}], |c| max {np.max(np.abs(lp.c)):.3g}")
    if status != "optimal":
        return _failed(lp, status, iters, t0, method)
    sol = h.getSolution()
    x = np.asarray(sol.col_value) * s
    dual = np.asarray(sol.row_dual) * r * cscale
    rc = lp.c - lp.A.T @ dual
    return PrimalDual(x, dual, np.asarray(rc).ravel(), float(lp.c @ x), "optimal",
                      iters, method, wall)


def solve(lp: LpProblem, backend: str = "highs", *, feas_tol: float = FEAS_TOL,
          log_path=None, **reference_opts) -> PrimalDual:
    """Solve ``lp`` with the selected backend.

    ``"highs"`` lets HiGHS pick its algorithm; ``"highs-ds"`` and
    ``"highs-ipm"`` force simplex or interior point with crossover;
    ``"reference"`` runs :func:`solve_reference` without its size guard.
    """
    if backend == "reference":
        reference_opts.setdefault("max_cols", np.inf)
        reference_opts.setdefault("rule", "dantzig")
        pd = solve_reference(lp, feas_tol=feas_tol, **reference_opts)
    elif backend in ("highs", "highs-ds", "highs-ipm"):
        pd = _solve_highs(lp, backend, feas_tol, log_path)
    else:
        raise SolverError(f"unknown solver backend {backend!r}; choose from {BACKENDS}")
    log.debug("%s: status=%s obj=%.9g iters=%d %.2fs", backend, pd.status, pd.objective,
              pd.iterations, pd.wall_time)
    return pd


def check_optimality(lp: LpProblem, sol: PrimalDual, *, feas_tol: float = FEAS_TOL,
                     gap_tol: float = GAP_TOL) -> DualityReport:
    """Primal/dual feasibility, duality gap and complementary slackness of ``sol``.

    Row residuals are measured after dividing each row by
    ``max(1, |b_i|, max_j |a_ij|)``; dual residuals on columns by
    ``max(1, |c_j|)``. Complementarity products and the gap are relative to
    ``1 + |objective|``.
    """
    A = lp.A.tocsr()
    x = sol.primal
    y = sol.dual
    ax = A @ x
    rowmax = _rowwise(abs(A), np.maximum)
    rscale = np.maximum.reduce([np.ones_like(lp.b), np.abs(lp.b), rowmax])
    slack = lp.b - ax
    viol = np.where(lp.senses == EQ, np.abs(slack),
                    np.where(lp.senses == LE, np.maximum(-slack, 0), np.maximum(slack, 0)))
    row_res = viol / rscale
    primal_res = max(float(np.max(row_res, initial=0.0)), float(np.max(-x, initial=0.0)))

    rc = lp.c - A.T @ y
    cscale = np.maximum(1.0, np.abs(lp.c))
    dual_col = np.maximum(-rc, 0) / cscale
    wrong_sign = np.where(lp.senses == LE, np.maximum(y, 0),
                          np.where(lp.senses == GE, np.maximum(-y, 0), 0.0))
    dual_res = max(float(np.max(dual_col, initial=0.0)),
                   float(np.max(wrong_sign / np.max(cscale), initial=0.0)))

    obj = float(lp.c @ x)
    denom = 1.0 + abs(obj)
    gap = abs(obj - float(lp.b @ y)) / denom
    row_cs = np.where(lp.senses == EQ, 0.0, np.abs(y * slack)) / denom
    col_cs = np.abs(rc * x) / denom

    rep = DualityReport(primal_res, dual_res, gap, float(np.max(row_cs, initial=0.0)),
                        float(np.max(col_cs, initial=0.0)), feas_tol, gap_tol,
                        int(np.argmax(row_res)) if row_res.size else -1,
                        int(np.argmax(col_cs)) if col_cs.size else -1)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        rep.failures.append("non-finite solution")
    if primal_res > feas_tol:
        rep.failures.append(f"primal residual {primal_res:.3g} > {feas_tol:g}")
    if dual_res > feas_tol:
        rep.failures.append(f"dual residual {dual_res:.3g} > {feas_tol:g}")
    if gap > gap_tol:
        rep.failures.append(f"duality gap {gap:.3g} > {gap_tol:g}")
    if max(rep.row_complementarity, rep.col_complementarity) > gap_tol:
        rep.failures.append("complementary slackness violated")
    return rep
