"""Constrained linear systems x+ = A x + B u, their reachable and controllable sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from . import geometry as geo
from .errors import ControlOutOfRange, DimensionUnsupported, SpecError
from .geometry import ConvexPolytope
from .lp import LpProblem, lp_solve
from .spectral import SpectralSplit

CONTROL_TOL = 1e-9
INTERIOR_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    U: ConvexPolytope
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if A.shape[0] != A.shape[1]:
            raise SpecError("A must be square", "/A")
        if B.shape[0] != A.shape[0]:
            raise SpecError(f"B must have {A.shape[0]} rows", "/B")
        if self.U.dim != B.shape[1]:
            raise SpecError(f"U must live in R^{B.shape[1]}", "/U")
        if abs(np.linalg.det(A)) <= 1e-12:
            raise SpecError("A must be invertible (|det A| > 1e-12)", "/A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        margin = geo.interior_margin(self.U, np.zeros(self.m))[0]
        if margin < INTERIOR_MARGIN:
            raise SpecError("0 must lie in the interior of U", "/U")

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def check_controls(self, controls) -> np.ndarray:
        u = np.asarray(controls, dtype=float).reshape(-1, self.m)
        inside = geo.contains_points(self.U, u, CONTROL_TOL)
        if not inside.all():
            bad = int(np.argmin(inside))
            raise ControlOutOfRange(f"control {u[bad].tolist()} (index {bad}) lies outside U")
        return u

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "U": self.U.to_json()}


def system_from_json(obj) -> LinearSystem:
    if not isinstance(obj, dict):
        raise SpecError("system must be a JSON object", "")
    for key in ("A", "B", "U"):
        if key not in obj:
            raise SpecError(f"missing field '{key}'", f"/{key}")
    try:
        A = np.asarray(obj["A"], dtype=float)
        B = np.asarray(obj["B"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"matrices must be numeric: {exc}", "/A") from None
    if A.ndim != 2:
        raise SpecError("A must be a matrix", "/A")
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2:
        raise SpecError("B must be a matrix", "/B")
    U = geo.polytope_from_json(obj["U"], "/U")
    return LinearSystem(A, B, U, dict(obj.get("labels", {})))


@dataclass(frozen=True, eq=False)
class Trajectory:
    start: np.ndarray
    controls: np.ndarray  # tau x m
    states: np.ndarray  # (tau + 1) x d, states[0] == start

    @property
    def tau(self) -> int:
        return len(self.controls)


def step(sys: LinearSystem, x, u) -> np.ndarray:
    u = sys.check_controls(u)[0]
    return sys.A @ np.asarray(x, dtype=float) + sys.B @ u


def simulate(A, B, x, controls) -> np.ndarray:
    """States x_0..x_tau without any range check."""
    x = np.asarray(x, dtype=float)
    out = [x]
    for u in controls:
        x = A @ x + B @ u
        out.append(x)
    return np.array(out)


def trajectory(sys: LinearSystem, x, controls) -> Trajectory:
    u = sys.check_controls(controls)
    x = np.asarray(x, dtype=float).ravel()
    return Trajectory(x, u, simulate(sys.A, sys.B, x, u))


def solution(sys: LinearSystem, k: int, x, controls) -> np.ndarray:
    """Closed form A^k x + sum_i A^(k-1-i) B u_i."""
    u = np.asarray(controls, dtype=float).reshape(-1, sys.m)[:k]
    out = np.linalg.matrix_power(sys.A, k) @ np.asarray(x, dtype=float)
    for i in range(k):
        out = out + np.linalg.matrix_power(sys.A, k - 1 - i) @ sys.B @ u[i]
    return out


def time_reversed(sys: LinearSystem) -> LinearSystem:
    Ainv = np.linalg.inv(sys.A)
    return LinearSystem(Ainv, -Ainv @ sys.B, sys.U, dict(sys.labels))


def control_image(sys: LinearSystem) -> ConvexPolytope:
    """B U as a polytope in state space."""
    if sys.d > geo.MAX_HULL_DIM:
        raise DimensionUnsupported("explicit reachable sets need d <= 3; use reach_membership")
    return geo.linear_image(sys.U, sys.B)


def reach_sequence(sys: LinearSystem, k_max: int):
    """Yield R_1(0), ..., R_kmax(0) via R_{k+1} = B U + A R_k."""
    BU = control_image(sys)
    R = BU
    yield R
    for _ in range(k_max - 1):
        R = geo.minkowski_sum(BU, geo.linear_image(R, sys.A))
        yield R


def reach_k(sys: LinearSystem, k: int) -> ConvexPolytope:
    """Reachable set R_k(0) from the origin in exactly ``k`` steps."""
    if k < 1:
        raise ValueError("k must be positive")
    for R in reach_sequence(sys, k):
        pass
    return R


def control_k(sys: LinearSystem, k: int) -> ConvexPolytope:
    """Controllable set C_k(0), the reachable set of the time-reversed system."""
    return reach_k(time_reversed(sys), k)


def reach_membership(sys: LinearSystem, x, k: int) -> bool:
    """LP feasibility of phi(k, 0, u) = x with every u_i in U; any dimension."""
    if k < 1:
        raise ValueError("k must be positive")
    x = np.asarray(x, dtype=float).ravel()
    H, h = sys.U.halfspaces
    m, d = sys.m, sys.d
    n = k * m
    cons = []
    for i in range(k):
        for row, rhs in zip(H, h):
            a = np.zeros(n)
            a[i * m:(i + 1) * m] = row
            cons.append((a, "<=", rhs))
    G = trajectory_matrix(sys.A, sys.B, k)
    for r in range(d):
        cons.append((G[r], "=", x[r]))
    res = lp_solve(LpProblem(np.zeros(n), cons, [(None, None)] * n))
    return res.optimal


def _subspace_coords(P: ConvexPolytope, proj, basis):
    if basis.shape[1] == 0:
        return None
    pts = P.vertices @ proj.T @ basis
    return geo.convex_hull(pts) if basis.shape[1] <= geo.MAX_HULL_DIM else None


@dataclass
class StructureReport:
    ks: list
    reach_stable_norm: list  # max |pi_s v| over vertices of R_k(0)
    reach_uc_inradius: list  # inradius of the E^uc projection of R_k(0)
    control_unstable_norm: list
    control_sc_inradius: list

    def to_json(self):
        return dict(self.__dict__)


def structure_check(sys: LinearSystem, split: SpectralSplit, k_max: int) -> StructureReport:
    """Track the compact and the growing parts of R_k(0) and C_k(0).

    The stable projection of R_k(0) stays bounded while its projection to
    E^u + E^c swells; C_k(0) behaves the same way with the roles of the
    stable and unstable parts exchanged.
    """
    d = sys.d
    eye = np.eye(d)
    proj_s = split.projection_s
    proj_u = split.projection_u
    proj_uc = eye - proj_s
    proj_sc = eye - proj_u
    basis_uc = orth(proj_uc) if np.linalg.norm(proj_uc) > 0 else np.zeros((d, 0))
    basis_sc = orth(proj_sc) if np.linalg.norm(proj_sc) > 0 else np.zeros((d, 0))
    rev = time_reversed(sys)
    report = StructureReport([], [], [], [], [])
    for k, (R, C) in enumerate(zip(reach_sequence(sys, k_max), reach_sequence(rev, k_max)), 1):
        report.ks.append(k)
        report.reach_stable_norm.append(float(np.max(np.linalg.norm(R.vertices @ proj_s.T, axis=1))))
        report.control_unstable_norm.append(float(np.max(np.linalg.norm(C.vertices @ proj_u.T, axis=1))))
        Ruc = _subspace_coords(R, proj_uc, basis_uc)
        Csc = _subspace_coords(C, proj_sc, basis_sc)
        report.reach_uc_inradius.append(geo.chebyshev_radius(Ruc) if Ruc is not None else 0.0)
        report.control_sc_inradius.append(geo.chebyshev_radius(Csc) if Csc is not None else 0.0)
    return report


def trajectory_matrix(A, B, k: int) -> np.ndarray:
    """[A^(k-1) B, ..., A B, B]: maps stacked (u_0, ..., u_{k-1}) to phi(k, 0, u)."""
    return np.hstack([np.linalg.matrix_power(A, k - 1 - i) @ B for i in range(k)])

