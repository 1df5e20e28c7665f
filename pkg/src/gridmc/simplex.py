"""Dense two-phase primal simplex with variable upper bounds.

Solves   min c.x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  0 <= x <= upper.

Entering columns follow Dantzig's largest-reduced-cost rule with
smallest-index tie-breaks; after a run of degenerate pivots the solver
switches to Bland's rule, which cannot cycle. Both choices are
deterministic, so identical input gives an identical vertex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

_DEGENERATE_RUN = 50


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    message: str = ""


class _Tableau:
    def __init__(self, T, xb, basis, upper, at_upper, tol):
        self.T = T  # m x n, B^-1 A
        self.xb = xb  # values of basic variables
        self.basis = basis  # column index per row
        self.upper = upper
        self.at_upper = at_upper  # nonbasic status
        self.tol = tol
        self.iterations = 0

    def values(self):
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = self.xb
        return x

    def run(self, cost, rule, max_iter):
        T, tol = self.T, self.tol
        m, n = T.shape
        scale = max(1.0, float(np.abs(cost).max(initial=0.0)))
        dtol = tol * scale
        is_basic = np.zeros(n, dtype=bool)
        is_basic[self.basis] = True
        degenerate = 0
        use_bland = rule == "bland"
        while self.iterations < max_iter:
            d = cost - cost[self.basis] @ T
            d[is_basic] = 0.0
            fixed = self.upper <= 0.0
            up_ok = (~self.at_upper) & (d < -dtol) & ~fixed
            down_ok = self.at_upper & (d > dtol)
            cand = np.flatnonzero(up_ok | down_ok)
            if len(cand) == 0:
                return OPTIMAL
            if use_bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            alpha = T[:, j] * direction
            step = self.upper[j]  # bound flip
            row = -1
            ub = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = np.where(alpha > tol, self.xb / alpha, np.inf)
                inc = np.where(alpha < -tol, (ub - self.xb) / -alpha, np.inf)
            limits = np.minimum(dec, inc)
            if m:
                best = float(limits.min())
                if best < step:
                    step = best
                    ties = np.flatnonzero(limits <= best + tol * max(1.0, abs(best)))
                    # Smallest leaving variable index among ties (Bland).
                    row = int(ties[np.argmin(self.basis[ties])])
            if not np.isfinite(step):
                return UNBOUNDED
            step = max(step, 0.0)
            self.iterations += 1
            degenerate = degenerate + 1 if step <= tol else 0
            if degenerate >= _DEGENERATE_RUN:
                use_bland = True
            self.xb = self.xb - step * alpha
            if row < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            leaving = self.basis[row]
            leave_upper = alpha[row] < 0
            entering_value = self.upper[j] - step if self.at_upper[j] else step
            piv = T[row, j]
            T[row] /= piv
            col = T[:, j].copy()
            col[row] = 0.0
            T -= np.outer(col, T[row])
            self.xb[row] = entering_value
            self.basis[row] = j
            is_basic[j] = True
            is_basic[leaving] = False
            self.at_upper[j] = False
            self.at_upper[leaving] = bool(leave_upper)
            # Snap tiny bound violations left by round-off.
            np.clip(self.xb, 0.0, self.upper[self.basis], out=self.xb)
        return ITERATION_LIMIT


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    upper=None,
    rule: str = "dantzig",
    tol: float = 1e-9,
    max_iter: int = 50_000,
) -> LPResult:
    """Minimize c.x over the polytope described above (x >= 0 always)."""
    c = np.asarray(c, dtype=float)
    nx = len(c)
    A_ub = np.zeros((0, nx)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nx)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nx)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nx)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    upper = np.full(nx, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(upper < 0):
        return LPResult(np.zeros(nx), np.inf, INFEASIBLE, 0, "negative upper bound")
    if rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {rule!r}")

    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq
    # Columns: structural | slacks | artificials (one per row that needs one).
    A = np.zeros((m, nx + m_ub))
    A[:m_ub, :nx] = A_ub
    A[:m_ub, nx:] = np.eye(m_ub)
    A[m_ub:, :nx] = A_eq
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    need_art = np.ones(m, dtype=bool)
    need_art[:m_ub] = sign[:m_ub] < 0
    art_rows = np.flatnonzero(need_art)
    n_art = len(art_rows)
    n = nx + m_ub + n_art
    T = np.zeros((m, n))
    T[:, : nx + m_ub] = A
    basis = np.empty(m, dtype=np.int64)
    for r in range(m_ub):
        basis[r] = nx + r
    for k, r in enumerate(art_rows):
        T[r, nx + m_ub + k] = 1.0
        basis[r] = nx + m_ub + k
    full_upper = np.concatenate([upper, np.full(m_ub, np.inf), np.full(n_art, np.inf)])
    tab = _Tableau(T, b.copy(), basis, full_upper, np.zeros(n, dtype=bool), tol)

    if n_art:
        phase1 = np.zeros(n)
        phase1[nx + m_ub :] = 1.0
        status = tab.run(phase1, rule, max_iter)
        if status != OPTIMAL:
            return LPResult(tab.values()[:nx], np.inf, status, tab.iterations, "phase 1 failed")
        infeas = float(tab.values()[nx + m_ub :].sum())
        if infeas > tol * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LPResult(tab.values()[:nx], np.inf, INFEASIBLE, tab.iterations, f"infeasibility {infeas:.3g}")
        # Artificials may stay basic at zero; pinning them keeps them there.
        tab.upper = tab.upper.copy()
        tab.upper[nx + m_ub :] = 0.0
        tab.xb[np.isin(tab.basis, np.arange(nx + m_ub, n))] = 0.0

    cost = np.zeros(n)
    cost[:nx] = c
    status = tab.run(cost, rule, max_iter)
    x = tab.values()[:nx]
    return LPResult(x, float(c @ x) if status == OPTIMAL else np.inf, status, tab.iterations)
