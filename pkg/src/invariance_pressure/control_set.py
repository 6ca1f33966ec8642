"""The control set with nonvoid interior, approximated by R_k(0) ∩ C_k(0).

In the hyperbolic case R_k(0) grows without bound along the unstable
directions and C_k(0) along the stable ones, so after a few dozen steps the
raw polytopes carry coordinates of size rho**k and hulls lose precision
near the (bounded) intersection.  Both sequences are therefore clipped to a
window in the expanding coordinates.  The window is wide enough that every
trajectory ending in the intersection stays inside it, so clipping leaves
R_k(0) ∩ C_k(0) unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import NotControllable, PreconditionViolated, SingularShift
from .geometry import ConvexPolytope
from .reachability import LinearSystem, simulate, time_reversed
from .spectral import SpectralSplit, kalman_controllable, spectral_split

GROWTH_WINDOW = 5
_SERIES_TERMS = 100_000


@dataclass
class ControlSetApprox:
    horizon: int
    inner: ConvexPolytope
    bounded_prediction: bool
    converged: bool
    last_delta: float
    deltas: list = field(default_factory=list)
    inradii: list = field(default_factory=list)
    unbounded_growth: bool = False
    note: str = ("closed polytope approximation; membership near the boundary "
                 "is only meaningful up to a tolerance")

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "vertices": self.inner.vertices.tolist(),
            "bounded_prediction": self.bounded_prediction,
            "converged": self.converged,
            "last_delta": self.last_delta,
            "unbounded_growth": self.unbounded_growth,
            "inradius": self.inradii[-1] if self.inradii else 0.0,
            "note": self.note,
        }


def _expanding_window(sys: LinearSystem, split: SpectralSplit):
    """Halfspaces bounding the unstable coordinates of every relevant state.

    With z the coordinates of the unstable part, any trajectory from 0 whose
    endpoint is controllable to 0 keeps ``|z| <= (G + 1) * Gamma * beta``,
    where ``G = sup_n |A_u^-n|``, ``Gamma = sum_n>=1 |A_u^-n|`` and ``beta``
    bounds the unstable part of B u over U.
    """
    V = split.basis_u
    if V.shape[1] == 0:
        return None
    coord = V.T @ split.projection_u
    Au_inv = np.linalg.inv(V.T @ sys.A @ V)
    beta = float(np.max(np.linalg.norm(sys.U.vertices @ (coord @ sys.B).T, axis=1)))
    power = np.eye(V.shape[1])
    sup_norm, total = 1.0, 0.0
    for _ in range(_SERIES_TERMS):
        power = power @ Au_inv
        nrm = np.linalg.norm(power, 2)
        total += nrm
        sup_norm = max(sup_norm, nrm)
        if nrm < 1e-17 * max(total, 1.0):
            break
    limit = 2.0 * (sup_norm + 1.0) * total * beta + 1.0
    rows = coord / np.linalg.norm(coord, axis=1)[:, None]
    scale = np.linalg.norm(coord, axis=1)
    normals = np.vstack([rows, -rows])
    offsets = np.concatenate([limit / scale, limit / scale])
    return normals, offsets


def _windowed_reach(sys: LinearSystem, split: SpectralSplit, k_max: int):
    window = _expanding_window(sys, split)
    BU = geo.linear_image(sys.U, sys.B)
    R = BU
    for k in range(k_max):
        if k:
            R = geo.minkowski_sum(BU, geo.linear_image(R, sys.A))
        if window is not None:
            R = geo.clip(R, *window)
        yield R


def control_set_sequence(sys: LinearSystem, k_max: int, split: SpectralSplit | None = None):
    """Yield D_k = R_k(0) ∩ C_k(0) for k = 1..k_max."""
    split = split if split is not None else spectral_split(sys.A)
    rev = time_reversed(sys)
    rev_split = spectral_split(rev.A, split.tol_center)
    for R, C in zip(_windowed_reach(sys, split, k_max), _windowed_reach(rev, rev_split, k_max)):
        yield geo.intersect(R, C)


def approximate_control_set(sys: LinearSystem, split: SpectralSplit | None = None,
                            k_max: int = 25, conv_tol: float = 1e-3) -> ControlSetApprox:
    """Sweep k until D_k settles (two consecutive Hausdorff changes below ``conv_tol``).

    For non-hyperbolic A the control set is unbounded; the sweep then runs to
    ``k_max`` and ``unbounded_growth`` records whether the inradius kept
    growing over the last few steps.
    """
    if not kalman_controllable(sys.A, sys.B)["controllable"]:
        raise NotControllable("(A, B) is not controllable; no control set with nonvoid interior")
    split = split if split is not None else spectral_split(sys.A)
    prev = None
    deltas, inradii = [], []
    small = 0
    converged = False
    k = 0
    D = None
    for k, D in enumerate(control_set_sequence(sys, k_max, split), 1):
        inradii.append(geo.chebyshev_radius(D))
        if prev is not None:
            deltas.append(geo.hausdorff_distance(D, prev))
            small = small + 1 if deltas[-1] < conv_tol else 0
            if small >= 2:
                converged = True
                break
        prev = D
    tail = inradii[-(GROWTH_WINDOW + 1):]
    growing = len(tail) == GROWTH_WINDOW + 1 and all(b > a for a, b in zip(tail, tail[1:]))
    return ControlSetApprox(
        horizon=k,
        inner=D,
        bounded_prediction=split.hyperbolic,
        converged=converged,
        last_delta=deltas[-1] if deltas else float("inf"),
        deltas=deltas,
        inradii=inradii,
        unbounded_growth=(not split.hyperbolic) and growing,
    )


def equilibrium(sys: LinearSystem, u) -> np.ndarray:
    """Fixed point (I - A)^-1 B u of the constant control ``u``."""
    u = sys.check_controls(u)[0]
    shift = np.eye(sys.d) - sys.A
    if np.linalg.svd(shift, compute_uv=False).min() <= 1e-9:
        raise SingularShift("1 is an eigenvalue of A; no unique equilibrium")
    return np.linalg.solve(shift, sys.B @ u)


def interior_trajectory_check(sys: LinearSystem, D: ConvexPolytope, x, controls,
                              start_margin: float = 1e-6, tol: float = 1e-9):
    """Do all states x_1..x_tau stay strictly inside ``D``?

    Returns ``(all_interior, min_margin)``.  Raises ``PreconditionViolated``
    when ``x`` is not interior by ``start_margin`` or a state leaves ``D``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if geo.interior_margin(D, x)[0] < start_margin:
        raise PreconditionViolated("start point is not strictly interior to D")
    u = sys.check_controls(controls)
    states = simulate(sys.A, sys.B, x, u)[1:]
    margins = geo.interior_margin(D, states)
    if np.any(margins < -tol):
        raise PreconditionViolated(f"state {int(np.argmin(margins)) + 1} leaves D")
    low = float(margins.min()) if len(margins) else float("inf")
    return bool(low > 0), low


def boundedness_classifier(split: SpectralSplit) -> bool:
    """The control set is bounded exactly when A is hyperbolic."""
    return split.hyperbolic
