"""Invariance entropy and pressure of the control set of a hyperbolic system.

Three routes are offered:

* the closed form ``log|det A+| + min_U f``;
* an upper bound from periodic trajectories inside the control set;
* an explicit spanning set built by partitioning a small cube around a
  periodic orbit along the Lyapunov spaces and steering every cell centre
  back with minimum-norm controls.

The growth counts use the eigenvalue modulus ``rho_j`` of each Lyapunov
space: a space of modulus ``rho_j >= 1`` is cut into
``floor((rho_j + xi) ** tau) + 1`` intervals per coordinate.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import geometry as geo
from .errors import (
    BudgetExceeded,
    CubeNotInD,
    NotControllable,
    NotHyperbolic,
    SingularShift,
    SpanningValidationError,
    SteeringOutOfRange,
)
from .geometry import ConvexPolytope
from .potential import Potential, evaluate, minimize_over_U
from .reachability import LinearSystem, Trajectory, simulate, trajectory_matrix
from .spectral import SpectralSplit, kalman_controllable, spectral_split

U_MARGIN = 1e-6
MAX_CARDINALITY = 2_000_000


def _require_formula_preconditions(sys: LinearSystem, split: SpectralSplit):
    if not split.hyperbolic:
        raise NotHyperbolic("A has eigenvalues on the unit circle; the formula does not apply")
    if not kalman_controllable(sys.A, sys.B)["controllable"]:
        raise NotControllable("(A, B) is not controllable")


@dataclass
class PressureResult:
    log_unstable_det: float
    min_potential: float
    pressure: float
    entropy: float
    argmin_control: np.ndarray

    def to_json(self):
        return {
            "log_unstable_det": self.log_unstable_det,
            "min_potential": self.min_potential,
            "pressure": self.pressure,
            "entropy": self.entropy,
            "argmin_control": np.asarray(self.argmin_control).tolist(),
        }


def invariance_entropy(sys: LinearSystem, split: SpectralSplit | None = None) -> float:
    split = split if split is not None else spectral_split(sys.A)
    _require_formula_preconditions(sys, split)
    return split.log_unstable_det


def invariance_pressure_formula(sys: LinearSystem, p: Potential, split: SpectralSplit | None = None,
                                grid: int = 33, refine_iters: int = 10) -> PressureResult:
    """``log|det A+| + min_{u in U} f(u)`` for a control-only potential."""
    split = split if split is not None else spectral_split(sys.A)
    _require_formula_preconditions(sys, split)
    if p.uses_state:
        raise ValueError("the closed form covers control-only potentials")
    best = minimize_over_U(p, sys.U, grid, refine_iters)
    h = split.log_unstable_det
    return PressureResult(h, best.value, h + best.value, h, best.argmin)


def periodic_orbit(sys: LinearSystem, u_periodic) -> Trajectory:
    """The unique tau-periodic trajectory of a tau-periodic control.

    Solves ``(I - A^tau) x = phi(tau, 0, u)``.
    """
    u = sys.check_controls(u_periodic)
    tau = len(u)
    shift = np.eye(sys.d) - np.linalg.matrix_power(sys.A, tau)
    if np.linalg.cond(shift) > 1e12:
        raise SingularShift(f"I - A^{tau} is (nearly) singular")
    end = simulate(sys.A, sys.B, np.zeros(sys.d), u)[-1]
    x = np.linalg.solve(shift, end)
    return Trajectory(x, u, simulate(sys.A, sys.B, x, u))


def _orbit_average(p: Potential, traj: Trajectory) -> float:
    if p.uses_state:
        vals = evaluate(p, traj.states[:-1][None, ...], traj.controls[None, ...])
    else:
        vals = evaluate(p, None, traj.controls[None, ...])
    return float(np.mean(vals))


@dataclass
class PeriodicBound:
    value: float  # inf when no admissible orbit was found
    found: bool
    tau: Optional[int] = None
    controls: Optional[np.ndarray] = None
    start: Optional[np.ndarray] = None
    checked: int = 0
    admissible: int = 0

    def to_json(self):
        return {
            "upper_bound": self.value if self.found else None,
            "found": self.found,
            "tau": self.tau,
            "controls": None if self.controls is None else self.controls.tolist(),
            "start": None if self.start is None else self.start.tolist(),
            "checked": self.checked,
            "admissible": self.admissible,
        }


def _interior_samples(U: ConvexPolytope, n: int, rng) -> np.ndarray:
    lo, hi = U.bounding_box()
    out = []
    while len(out) < n:
        pts = rng.uniform(lo, hi, size=(4 * n, U.dim))
        out.extend(pts[geo.interior_margin(U, pts) > 0])
    return np.array(out[:n])


def _candidate_controls(sys, tau, argmin, samples, rng):
    m = sys.m
    for s in (1.0, 1 - 1e-6, 1 - 1e-5, 1 - 1e-4, 1 - 1e-3, 1 - 1e-2, 0.9, 0.5, 0.0):
        yield np.tile(s * argmin, (tau, 1))
    verts = sys.U.vertices
    for v in verts:
        yield np.tile(0.9 * v, (tau, 1))
    for v, w in itertools.combinations(verts, 2):
        seq = np.array([0.9 * (v if i % 2 == 0 else w) for i in range(tau)])
        yield seq
    pool = _interior_samples(sys.U, samples * tau, rng).reshape(samples, tau, m)
    yield from pool


def upper_bound_via_periodic(sys: LinearSystem, p: Potential, D: ConvexPolytope,
                             split: SpectralSplit | None = None, tau_max: int | None = None,
                             samples: int = 64, seed: int = 0, grid: int = 33,
                             refine_iters: int = 10) -> PeriodicBound:
    """``log|det A+|`` plus the best periodic average of f found inside D.

    Admissible candidates are tau-periodic controls with values in int U
    whose periodic trajectory lies in int D, for ``d <= tau <= tau_max``.
    State potentials are averaged along the orbit.
    """
    split = split if split is not None else spectral_split(sys.A)
    _require_formula_preconditions(sys, split)
    tau_max = tau_max if tau_max is not None else sys.d + 4
    rng = np.random.default_rng(seed)
    if p.uses_state:
        argmin = np.zeros(sys.m)
    else:
        argmin = minimize_over_U(p, sys.U, grid, refine_iters).argmin
    best = PeriodicBound(math.inf, False)
    for tau in range(sys.d, tau_max + 1):
        for u in _candidate_controls(sys, tau, argmin, samples, rng):
            best.checked += 1
            if np.any(geo.interior_margin(sys.U, u) <= 0):
                continue
            try:
                orbit = periodic_orbit(sys, u)
            except SingularShift:
                continue
            if np.any(geo.interior_margin(D, orbit.states) <= 0):
                continue
            best.admissible += 1
            value = _orbit_average(p, orbit)
            if value < best.value:
                best.value, best.tau = value, tau
                best.controls, best.start = orbit.controls, orbit.start
    if best.admissible:
        best.found = True
        best.value = split.log_unstable_det + best.value
    return best


@dataclass
class SpanningConstructionConfig:
    """Parameters of the cube-partition construction.

    ``u0`` is one period (``tau0`` rows) of the reference control and
    ``x0`` the start of its periodic orbit; both default to zero.  ``b0``
    is the cube half-side; when omitted the largest admissible value is
    found by bisection.
    """

    tau0: int
    m: int
    xi: float
    delta: Optional[float] = None
    b0: Optional[float] = None
    x0: Optional[np.ndarray] = None
    u0: Optional[np.ndarray] = None
    samples: int = 200
    seed: int = 0


@dataclass
class SpanningSet:
    tau: int
    controls: np.ndarray  # N x tau x m
    starts: np.ndarray  # N x d, cell centres in state space
    log_weights: np.ndarray  # Birkhoff sums, weights are exp(log_weights)
    b0: float = float("nan")
    counts: tuple = ()  # intervals per Lyapunov space
    lyapunov_groups: tuple = ()
    validation: dict = field(default_factory=dict)

    @property
    def cardinality(self) -> int:
        return len(self.controls)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def rate(self) -> float:
        return spanning_rate(self)

    def to_json(self):
        return {
            "tau": self.tau,
            "cardinality": self.cardinality,
            "rate": self.rate,
            "log_sum_weights": float(logsumexp(self.log_weights)),
            "b0": self.b0,
            "counts": list(self.counts),
            "lyapunov_groups": [{"modulus": r, "dim": dj} for r, dj in self.lyapunov_groups],
            "validation": self.validation,
        }

    def dump_controls(self, path):
        with open(path, "w") as fh:
            json.dump({"tau": self.tau, "controls": self.controls.tolist(),
                       "starts": self.starts.tolist(),
                       "log_weights": self.log_weights.tolist()}, fh)


def spanning_rate(ss: SpanningSet) -> float:
    """(1/tau) log of the summed weights."""
    if ss.cardinality == 0:
        raise ValueError("empty spanning set")
    return float(logsumexp(ss.log_weights)) / ss.tau


def interval_counts(groups, xi: float, tau: int) -> list:
    return [math.floor((rho + xi) ** tau) + 1 if rho >= 1 else 1 for rho, _ in groups]


def _cell_centres(counts_per_axis):
    axes = [-1.0 + (2 * np.arange(n) + 1) / n for n in counts_per_axis]
    return np.array(list(itertools.product(*axes)), dtype=float)


def _cell_of(z, counts_per_axis):
    n = np.asarray(counts_per_axis)
    idx = np.clip(np.floor((z + 1.0) / 2.0 * n).astype(int), 0, n - 1)
    return -1.0 + (2 * idx + 1) / n


def spanning_construction(sys: LinearSystem, D: ConvexPolytope, cfg: SpanningConstructionConfig,
                          p: Potential, split: SpectralSplit | None = None,
                          max_cardinality: int = MAX_CARDINALITY) -> SpanningSet:
    """Build the cube-partition spanning set of horizon ``tau0 * m``.

    Every cell centre y of the cube ``x0 + T [-b0, b0]^d`` (T stacks the
    Lyapunov-space bases) gets the control ``u0 + u(y)`` where u(y) is the
    minimum-norm sequence with ``phi(tau0, y, u) = 0``, padded with zeros.
    Sampled cube points are then replayed to confirm they stay in D and
    return to the cube.
    """
    split = split if split is not None else spectral_split(sys.A)
    _require_formula_preconditions(sys, split)
    d, mdim = sys.d, sys.m
    tau0, reps, xi = cfg.tau0, cfg.m, cfg.xi
    if tau0 < d:
        raise ValueError(f"tau0 must be at least d = {d}")
    if reps < 1 or xi <= 0:
        raise ValueError("need m >= 1 and xi > 0")
    groups = split.lyapunov_groups
    if any(rho < 1 <= rho + xi for rho, _ in groups):
        raise ValueError("xi too large: a stable modulus plus xi reaches 1")
    delta = cfg.delta if cfg.delta is not None else xi / 2
    if not 0 < delta < xi:
        raise ValueError("delta must lie in (0, xi)")
    tau = tau0 * reps

    u0 = np.zeros((tau0, mdim)) if cfg.u0 is None else np.asarray(cfg.u0, dtype=float).reshape(tau0, mdim)
    if np.any(geo.interior_margin(sys.U, u0) <= 0):
        raise SteeringOutOfRange("reference control values must be interior to U")
    x0 = periodic_orbit(sys, u0).start if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    ref = simulate(sys.A, sys.B, x0, np.tile(u0, (reps, 1)))
    if np.linalg.norm(ref[tau0] - x0) > 1e-8 * (1 + np.linalg.norm(x0)):
        raise ValueError("x0 is not on the periodic orbit of u0")

    counts = interval_counts(groups, xi, tau)
    cardinality = math.prod(c ** dj for c, (_, dj) in zip(counts, groups))
    if cardinality > max_cardinality:
        raise BudgetExceeded(f"spanning set would hold {cardinality} controls")
    per_axis = [c for c, (_, dj) in zip(counts, groups) for _ in range(dj)]
    T = split.lyapunov_coordinates()
    T_inv = np.linalg.inv(T)

    G = trajectory_matrix(sys.A, sys.B, tau0)
    Atau0 = np.linalg.matrix_power(sys.A, tau0)
    steer = -np.linalg.pinv(G) @ Atau0  # (tau0*m) x d, applied to y

    def controls_for(y_unit):
        # steering for cube half-side 1; the construction is linear in b0
        u = (y_unit @ (T.T @ steer.T)).reshape(len(y_unit), tau0, mdim)
        pad = np.zeros((len(y_unit), tau - tau0, mdim))
        return np.concatenate([u, pad], axis=1)

    centres = _cell_centres(per_axis)
    steer_unit = controls_for(centres)
    base_u = np.tile(u0, (reps, 1))

    rng = np.random.default_rng(cfg.seed)
    z_samples = rng.uniform(-1.0, 1.0, size=(cfg.samples, d))
    sample_centres = _cell_of(z_samples, per_axis)
    sample_steer = controls_for(sample_centres)
    cube_corners = np.array(list(itertools.product([-1.0, 1.0], repeat=d)))

    def states_from(z_unit, steer_u, b):
        x = x0 + b * (z_unit @ T.T)
        u = base_u + b * steer_u
        out = [x]
        for k in range(tau):
            x = x @ sys.A.T + u[:, k, :] @ sys.B.T
            out.append(x)
        return np.stack(out, axis=1)  # n x (tau+1) x d

    def controls_fit(b):
        u = (base_u + b * steer_unit).reshape(-1, mdim)
        return bool(np.all(geo.interior_margin(sys.U, u) >= U_MARGIN))

    def cube_fits(b):
        corners = x0 + b * (cube_corners @ T.T)
        return bool(np.all(geo.contains_points(D, corners, 0.0)))

    def confined(b):
        for z, st in ((centres, steer_unit), (z_samples, sample_steer)):
            traj = states_from(z, st, b).reshape(-1, d)
            if not np.all(geo.contains_points(D, traj, 1e-9)):
                return False
        return True

    if cfg.b0 is None:
        normals, offsets = D.halfspaces
        slack = offsets - normals @ x0
        if np.any(slack <= 0):
            raise CubeNotInD("x0 is not interior to D")
        b_hi = float(np.min(slack / np.abs(normals @ T).sum(axis=1)))
        ok = lambda b: controls_fit(b) and cube_fits(b) and confined(b)  # noqa: E731
        if ok(b_hi):
            b0 = b_hi
        else:
            lo, hi = 0.0, b_hi
            for _ in range(60):
                mid = (lo + hi) / 2
                if ok(mid):
                    lo = mid
                else:
                    hi = mid
            b0 = lo
            if b0 <= 0:
                raise SteeringOutOfRange("no positive cube size keeps the steering controls in U")
    else:
        b0 = float(cfg.b0)
        if b0 <= 0:
            raise ValueError("b0 must be positive")
        if not cube_fits(b0):
            raise CubeNotInD(f"cube of half-side {b0} around x0 is not contained in D")
        if not controls_fit(b0):
            raise SteeringOutOfRange(f"b0 = {b0} pushes steering controls out of U")

    controls = base_u + b0 * steer_unit
    starts = x0 + b0 * (centres @ T.T)

    # replay sampled cube points with their cell's control
    traj = states_from(z_samples, sample_steer, b0)
    in_d = np.all(geo.contains_points(D, traj.reshape(-1, d), 1e-9).reshape(len(z_samples), -1), axis=1)
    z_end = (traj[:, -1, :] - x0) @ T_inv.T / b0
    back = np.all(np.abs(z_end) <= 1 + 1e-9, axis=1)
    centre_end = states_from(centres, steer_unit, b0)[:, -1, :]
    validation = {
        "samples": int(len(z_samples)),
        "confined": int(in_d.sum()),
        "returned": int(back.sum()),
        "centre_return_error": float(np.max(np.linalg.norm(centre_end - x0, axis=1))),
    }
    if not in_d.all():
        raise SpanningValidationError(f"{int((~in_d).sum())} sampled points leave D")
    if not back.all():
        raise SpanningValidationError(
            f"{int((~back).sum())} sampled points miss the cube after tau steps; increase m")

    if p.uses_state:
        states = states_from(centres, steer_unit, b0)[:, :-1, :]
        log_w = evaluate(p, states, controls).sum(axis=1)
    else:
        log_w = evaluate(p, None, controls).sum(axis=1)
    return SpanningSet(tau, controls, starts, np.asarray(log_w, dtype=float), b0,
                       tuple(counts), tuple(groups), validation)
