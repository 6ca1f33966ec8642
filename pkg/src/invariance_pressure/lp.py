"""Dense two-phase simplex for small linear programs.

The kernel is deliberately simple: a full tableau, Dantzig pricing, and a
switch to Bland's rule once a run of degenerate pivots suggests cycling.
It is meant for the desk-scale membership and support queries issued by the
geometry and reachability code, not for large sparse problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CycleLimit

TOL = 1e-9
MAX_PIVOTS = 5000
DEGENERATE_STREAK = 50

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """minimize (or maximize) ``objective @ x`` subject to linear constraints.

    ``constraints`` holds ``(coefficients, relation, rhs)`` triples with
    relation one of ``"<="``, ``"="`` or ``">="``.  ``bounds`` is a list of
    ``(lower, upper)`` pairs where ``None`` means unbounded; when omitted all
    variables are nonnegative.
    """

    objective: Sequence[float]
    constraints: list = field(default_factory=list)
    bounds: Optional[list] = None
    maximize: bool = False

    def __post_init__(self):
        n = len(self.objective)
        for a, rel, _ in self.constraints:
            if len(a) != n:
                raise ValueError("constraint length does not match objective")
            if rel not in ("<=", "=", ">="):
                raise ValueError(f"unknown relation {rel!r}")
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise ValueError("one bound pair per variable required")
            for lo, hi in self.bounds:
                if lo is not None and hi is not None and lo > hi:
                    raise ValueError("inconsistent bounds")


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])
    basis[row] = col


def _run_simplex(T, basis, n_cols, max_pivots):
    """Minimize the objective held in the last row of ``T``.

    Only columns ``< n_cols`` may enter.  Returns False if unbounded.
    """
    m = T.shape[0] - 1
    bland = False
    streak = 0
    for _ in range(max_pivots):
        reduced = T[-1, :n_cols]
        if bland:
            candidates = np.nonzero(reduced < -TOL)[0]
            if candidates.size == 0:
                return True
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -TOL:
                return True
        column = T[:m, col]
        pos = column > TOL
        if not pos.any():
            return False
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + TOL * max(1.0, abs(best)))[0]
        # Bland: leaving variable with the smallest basis index among ties
        row = int(ties[np.argmin(basis[ties])]) if bland else int(ties[0])
        if best <= TOL:
            streak += 1
            if streak >= DEGENERATE_STREAK:
                bland = True
        else:
            streak = 0
        _pivot(T, basis, row, col)
    raise CycleLimit(f"simplex exceeded {max_pivots} pivots")


def lp_solve(prob: LpProblem, max_pivots: int = MAX_PIVOTS) -> LpResult:
    c = np.asarray(prob.objective, dtype=float)
    n = c.size
    sign = -1.0 if prob.maximize else 1.0
    bounds = prob.bounds if prob.bounds is not None else [(0.0, None)] * n

    # x = offset + sum_k sub[:, k] * y_k with y >= 0
    sub_cols = []
    offset = np.zeros(n)
    extra_rows = []  # (column index in y, upper limit)
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        e = np.zeros(n)
        if np.isfinite(lo):
            offset[j] = lo
            e[j] = 1.0
            sub_cols.append(e)
            if np.isfinite(hi):
                extra_rows.append((len(sub_cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            e[j] = -1.0
            sub_cols.append(e)
        else:
            e[j] = 1.0
            sub_cols.append(e)
            sub_cols.append(-e)
    S = np.array(sub_cols).T if sub_cols else np.zeros((n, 0))
    ny = S.shape[1]

    rows, rhs, rels = [], [], []
    for a, rel, b in prob.constraints:
        a = np.asarray(a, dtype=float)
        rows.append(a @ S)
        rhs.append(float(b) - a @ offset)
        rels.append(rel)
    for k, limit in extra_rows:
        r = np.zeros(ny)
        r[k] = 1.0
        rows.append(r)
        rhs.append(limit)
        rels.append("<=")

    m = len(rows)
    n_slack = sum(rel != "=" for rel in rels)
    n_struct = ny + n_slack
    A = np.zeros((m, n_struct))
    b = np.array(rhs, dtype=float)
    s = ny
    for i, (r, rel) in enumerate(zip(rows, rels)):
        A[i, :ny] = r
        if rel == "<=":
            A[i, s] = 1.0
            s += 1
        elif rel == ">=":
            A[i, s] = -1.0
            s += 1
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    cost = np.concatenate([sign * (c @ S), np.zeros(n_slack)])

    if m == 0:
        if np.any(cost < -TOL):
            return LpResult(UNBOUNDED)
        x = offset.copy()
        return LpResult(OPTIMAL, x, float(c @ x))

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m, :n_struct] = A
    T[:m, n_struct:n_struct + m] = np.eye(m)
    T[:m, -1] = b
    basis = np.arange(n_struct, n_struct + m)
    T[-1, :] = -T[:m, :].sum(axis=0)
    T[-1, n_struct:n_struct + m] = 0.0
    _run_simplex(T, basis, n_struct, max_pivots)
    scale = max(1.0, np.abs(b).max())
    if -T[-1, -1] > TOL * scale * 10:
        return LpResult(INFEASIBLE)

    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n_struct:
            nz = np.nonzero(np.abs(T[i, :n_struct]) > TOL)[0]
            if nz.size:
                _pivot(T, basis, i, int(nz[0]))
            else:
                keep[i] = False
    T = np.vstack([T[:m][keep], T[-1:]])
    basis = basis[keep]
    m = int(keep.sum())
    T = np.delete(T, np.s_[n_struct:n_struct + T.shape[1] - n_struct - 1], axis=1)

    T[-1, :] = 0.0
    T[-1, :n_struct] = cost
    for i, j in enumerate(basis):
        T[-1] -= cost[j] * T[i]
    if not _run_simplex(T, basis, n_struct, max_pivots):
        return LpResult(UNBOUNDED)

    y = np.zeros(n_struct)
    y[basis] = T[:m, -1]
    x = offset + S @ y[:ny]
    return LpResult(OPTIMAL, x, float(c @ x))
