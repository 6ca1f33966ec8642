"""Brute-force pressure estimates straight from the definition.

The infimum over spanning sets is replaced by a minimum over covers of a
finite grid of initial states by control sequences drawn from a finite grid
of control values.  All ``|G|^tau`` sequences are enumerated as a prefix
tree, so a prefix that already lost every grid point is not extended.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import geometry as geo
from .errors import (
    BudgetExceeded,
    EmptyGrid,
    PreconditionViolated,
    SpanningValidationError,
    UnspannableGrid,
)
from .geometry import ConvexPolytope
from .potential import Potential, evaluate
from .pressure import SpanningSet
from .reachability import LinearSystem, simulate

Q_TOL = 1e-9
EXACT_LIMIT = 20
DEFAULT_BUDGET = 10**8


@dataclass
class OracleConfig:
    tau: int
    control_grid: int
    state_grid: int
    Q: ConvexPolytope
    K: ConvexPolytope
    total_mode: bool = False
    budget: float = DEFAULT_BUDGET


@dataclass
class CoverTable:
    """Which grid points every surviving control sequence keeps inside Q."""

    tau: int
    control_grid: np.ndarray  # g x m
    points: np.ndarray  # P x d
    sequences: np.ndarray  # n x tau, indices into control_grid, lexicographic
    covered: np.ndarray  # n x P bool
    sums: Optional[np.ndarray] = None  # n x P Birkhoff sums for state potentials

    def controls(self, idx) -> np.ndarray:
        return self.control_grid[self.sequences[idx]]


@dataclass
class OracleEstimate:
    a_tau: float
    log_a_tau: float
    rate: float
    spanning_cardinality: int
    chosen_set: SpanningSet
    cover_gap: float  # multiplicative slack of a_tau; 1 for an exact cover
    exact: bool
    candidates: int  # sequences covering at least one grid point
    reduced: int  # candidates left after dedup and dominance pruning
    total: bool = False
    soundness_violations: int = 0
    indices: Optional[np.ndarray] = None  # chosen rows of the cover table

    def to_json(self):
        key = "a_tau_total" if self.total else "a_tau"
        return {
            "tau": self.chosen_set.tau,
            key: self.a_tau,
            "log_" + key: self.log_a_tau,
            "rate": self.rate,
            "cardinality": self.spanning_cardinality,
            "cover_gap": self.cover_gap,
            "exact": self.exact,
            "candidates": self.candidates,
            "reduced_candidates": self.reduced,
            "soundness_violations": self.soundness_violations,
        }


def grid_in(P: ConvexPolytope, n: int, tol: float = Q_TOL) -> np.ndarray:
    """``n`` points per axis over the bounding box of ``P``, kept if inside."""
    if n < 1:
        raise ValueError("grid size must be positive")
    lo, hi = P.bounding_box()
    axes = [np.array([(a + b) / 2]) if n == 1 else np.linspace(a, b, n) for a, b in zip(lo, hi)]
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    pts = pts[geo.contains_points(P, pts, tol)]
    if len(pts) == 0:
        raise EmptyGrid("grid has no point inside the polytope")
    return pts


def _inside(normals, offsets, X):
    return np.all(X @ normals.T <= offsets + Q_TOL, axis=-1)


def admissible_controls(sys: LinearSystem, cfg: OracleConfig, p: Potential | None = None) -> CoverTable:
    """Enumerate all grid control sequences and the K-grid points each keeps in Q.

    With a state potential ``p`` the per-point Birkhoff sums are recorded too.
    Sequences covering nothing are dropped.
    """
    if cfg.tau < 1:
        raise ValueError("tau must be positive")
    G = grid_in(sys.U, cfg.control_grid)
    K = grid_in(cfg.K, cfg.state_grid)
    if not geo.contains_points(cfg.Q, K, Q_TOL).all():
        raise PreconditionViolated("K grid points lie outside Q")
    g, P = len(G), len(K)
    steps = float(g) ** cfg.tau * P * cfg.tau
    if steps > cfg.budget:
        raise BudgetExceeded(f"{g}^{cfg.tau} sequences x {P} points x {cfg.tau} steps = {steps:.3g} "
                             f"exceeds budget {cfg.budget:.3g}")
    normals, offsets = cfg.Q.halfspaces
    A = sys.A
    Bu = G @ sys.B.T
    track = p is not None and p.uses_state
    seq_out, cov_out, sum_out = [], [], []
    for first in range(g):
        seqs = np.array([[first]])
        states = (K @ A.T + Bu[first])[None]
        alive = _inside(normals, offsets, states)
        sums = evaluate(p, K[None], G[first][None, None]) if track else None
        for _ in range(1, cfg.tau):
            keep = alive.any(axis=1)
            seqs, states, alive = seqs[keep], states[keep], alive[keep]
            n = len(seqs)
            if n == 0:
                break
            if track:
                sums = sums[keep]
                step_vals = evaluate(p, states[:, None], G[None, :, None, :])  # n x g x P
                sums = (sums[:, None] + step_vals).reshape(n * g, P)
            seqs = np.hstack([np.repeat(seqs, g, axis=0), np.tile(np.arange(g), n)[:, None]])
            states = ((states @ A.T)[:, None] + Bu[None, :, None, :]).reshape(n * g, P, -1)
            alive = np.repeat(alive, g, axis=0) & _inside(normals, offsets, states)
        if seqs.shape[1] < cfg.tau:
            continue
        keep = alive.any(axis=1)
        seq_out.append(seqs[keep])
        cov_out.append(alive[keep])
        if track:
            sum_out.append(sums[keep])
    return CoverTable(
        tau=cfg.tau,
        control_grid=G,
        points=K,
        sequences=np.vstack(seq_out) if seq_out else np.zeros((0, cfg.tau), int),
        covered=np.vstack(cov_out) if cov_out else np.zeros((0, P), bool),
        sums=np.vstack(sum_out) if track else None,
    )


def _reduce(covered, log_w):
    """Drop duplicate coverage patterns and dominated candidates.

    A candidate is dominated when another covers a superset at no larger
    weight; ties go to the lexicographically first sequence.  Some optimal
    cover always survives.
    """
    order = np.lexsort((np.arange(len(log_w)), log_w))
    seen = set()
    kept = []
    for i in order:
        key = np.packbits(covered[i]).tobytes()
        if key not in seen:
            seen.add(key)
            kept.append(i)
    kept = np.array(kept, dtype=int)  # sorted by (weight, index)
    cov = covered[kept].astype(np.float32)
    miss = 1.0 - cov
    dominated = np.zeros(len(kept), dtype=bool)
    for start in range(0, len(kept), 1024):
        block = cov[start:start + 1024] @ miss.T  # |cov_j minus cov_i|
        for r, row in enumerate(block):
            j = start + r
            if np.any(row[:j] == 0):
                dominated[j] = True
    return np.sort(kept[~dominated])


def _exact_cover(masks, weights, full):
    """Minimum-weight cover by depth-first branch and bound over the candidates."""
    n = len(masks)
    best = [math.inf, None]
    by_elem = {}

    def branch(covered, cost, chosen):
        if cost >= best[0]:
            return
        if covered == full:
            best[0], best[1] = cost, sorted(chosen)
            return
        missing = full & ~covered
        e = (missing & -missing).bit_length() - 1
        options = by_elem.get(e)
        if options is None:
            options = [i for i in range(n) if masks[i] >> e & 1]
            options.sort(key=lambda i: (weights[i], i))
            by_elem[e] = options
        for i in options:
            chosen.append(i)
            branch(covered | masks[i], cost + weights[i], chosen)
            chosen.pop()

    branch(0, 0.0, [])
    return best[1]


def _greedy_cover(covered, weights):
    n, P = covered.shape
    todo = np.ones(P, dtype=bool)
    picked = []
    while todo.any():
        gain = (covered & todo).sum(axis=1) / weights
        i = int(np.argmax(gain))
        picked.append(i)
        todo &= ~covered[i]
    # drop members made redundant by later picks, heaviest first
    for i in sorted(picked, key=lambda j: (-weights[j], j)):
        rest = [j for j in picked if j != i]
        if rest and covered[rest].any(axis=0).all():
            picked = rest
    return sorted(picked)


def min_weight_cover(table: CoverTable, log_weights, total: bool = False) -> OracleEstimate:
    """Cheapest set of sequences covering the whole K grid.

    ``log_weights`` holds the Birkhoff sum of every candidate.  The search
    is exact when at most 20 candidates survive pruning and greedy
    otherwise, with the ``ln(P) + 1`` guarantee reported as ``cover_gap``.
    """
    log_w = np.asarray(log_weights, dtype=float)
    covered = table.covered
    P = covered.shape[1]
    missing = ~covered.any(axis=0) if len(covered) else np.ones(P, bool)
    if missing.any():
        raise UnspannableGrid(f"{int(missing.sum())} of {P} grid points are covered by no sequence")
    keep = _reduce(covered, log_w)
    sub_cov, sub_logw = covered[keep], log_w[keep]
    rel = np.exp(sub_logw - sub_logw.min())
    exact = len(keep) <= EXACT_LIMIT
    if exact:
        masks = [int("".join("1" if b else "0" for b in row[::-1]), 2) for row in sub_cov]
        picked = _exact_cover(masks, list(rel), (1 << P) - 1)
        gap = 1.0
    else:
        picked = _greedy_cover(sub_cov, rel)
        gap = math.log(P) + 1.0
    chosen = keep[picked]
    chosen_logw = log_w[chosen]
    log_a = float(logsumexp(chosen_logw))
    starts = table.points[np.argmax(covered[chosen], axis=1)]
    ss = SpanningSet(table.tau, table.controls(chosen), starts, chosen_logw)
    return OracleEstimate(
        a_tau=math.exp(log_a) if log_a < 700 else math.inf,
        log_a_tau=log_a,
        rate=log_a / table.tau,
        spanning_cardinality=len(chosen),
        chosen_set=ss,
        cover_gap=gap,
        exact=exact,
        candidates=len(log_w),
        reduced=len(keep),
        total=total,
        indices=chosen,
    )


def soundness_violations(sys: LinearSystem, Q: ConvexPolytope, points, controls) -> int:
    """Grid points that no chosen sequence keeps in Q, by plain re-simulation."""
    bad = 0
    for x in points:
        ok = False
        for u in controls:
            states = simulate(sys.A, sys.B, x, u)[1:]
            if geo.contains_points(Q, states, Q_TOL).all():
                ok = True
                break
        bad += not ok
    return bad


def estimate_pressure(sys: LinearSystem, cfg: OracleConfig, p: Potential) -> OracleEstimate:
    """Grid estimate of the (total) invariance pressure at horizon ``cfg.tau``."""
    if (p.d, p.m) != (sys.d, sys.m):
        raise PreconditionViolated("potential dimensions do not match the system")
    if p.uses_state and not cfg.total_mode:
        raise PreconditionViolated("state-dependent potential requires total mode")
    table = admissible_controls(sys, cfg, p)
    if p.uses_state:
        # pair every sequence with its cheapest covered point
        sums = np.where(table.covered, table.sums, np.inf)
        log_w = sums.min(axis=1)
        best_point = sums.argmin(axis=1)
    else:
        log_w = evaluate(p, None, table.controls(np.arange(len(table.sequences)))).sum(axis=1) \
            if len(table.sequences) else np.zeros(0)
        best_point = None
    est = min_weight_cover(table, log_w, total=cfg.total_mode)
    if best_point is not None:
        est.chosen_set.starts = table.points[best_point[est.indices]]
    est.soundness_violations = soundness_violations(sys, cfg.Q, table.points, est.chosen_set.controls)
    if est.soundness_violations:
        raise SpanningValidationError(f"{est.soundness_violations} grid points fail re-simulation")
    return est


def discretization_sweep(sys: LinearSystem, cfg: OracleConfig, p: Potential, taus) -> list:
    """``estimate_pressure`` at each horizon in ``taus``."""
    out = []
    for tau in taus:
        step_cfg = OracleConfig(int(tau), cfg.control_grid, cfg.state_grid, cfg.Q, cfg.K,
                                cfg.total_mode, cfg.budget)
        out.append(estimate_pressure(sys, step_cfg, p))
    return out


def sweep_diagnostics(estimates) -> dict:
    """Rate differences along a sweep and whether they never increase."""
    taus = [e.chosen_set.tau for e in estimates]
    rates = [e.rate for e in estimates]
    diffs = [b - a for a, b in zip(rates, rates[1:])]
    return {
        "taus": taus,
        "rates": rates,
        "differences": diffs,
        "nonincreasing": all(x <= 1e-12 for x in diffs),
    }
