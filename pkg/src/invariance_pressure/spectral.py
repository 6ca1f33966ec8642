"""Eigenstructure of the state matrix.

Stable, center and unstable subspaces are read off ordered real Schur
forms, so every basis block is orthonormal and exactly invariant up to
rounding.  Jordan forms are never computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import schur

from .errors import IllConditionedSplit, SingularMatrix

DEFAULT_TOL_CENTER = 1e-8
LYAPUNOV_REL_TOL = 1e-8
KALMAN_REL_TOL = 1e-9
DET_FLOOR = 1e-12


@dataclass(frozen=True)
class Eigenvalue:
    value: complex
    mult: int
    pair: bool  # stands for a conjugate pair; mult counts one member


def spectrum(A, rel_tol: float = 1e-7) -> list[Eigenvalue]:
    """Distinct eigenvalues with algebraic multiplicities; conjugates stored once."""
    lam = np.linalg.eigvals(np.asarray(A, dtype=float))
    used = np.zeros(lam.size, dtype=bool)
    out = []
    for i in np.argsort(-np.abs(lam), kind="stable"):
        if used[i]:
            continue
        near = (~used) & (np.abs(lam - lam[i]) <= rel_tol * max(1.0, abs(lam[i])))
        used |= near
        value = complex(lam[near].mean())
        if abs(value.imag) <= rel_tol * max(1.0, abs(value)):
            out.append(Eigenvalue(complex(value.real, 0.0), int(near.sum()), False))
            continue
        conj = (~used) & (np.abs(lam - np.conj(value)) <= rel_tol * max(1.0, abs(value)))
        used |= conj
        if value.imag < 0:
            value = value.conjugate()
        out.append(Eigenvalue(value, int(near.sum()), True))
    return out


def _schur_block(A, select):
    T, Z, sdim = schur(A, output="real", sort=lambda re, im: bool(select(abs(complex(re, im)))))
    return Z[:, :sdim]


def _complement_projection(keep, drop):
    """Projection onto span(keep) along span(drop)."""
    d = keep.shape[0]
    if keep.shape[1] == 0:
        return np.zeros((d, d))
    T = np.hstack([drop, keep])
    mask = np.concatenate([np.zeros(drop.shape[1]), np.ones(keep.shape[1])])
    return T @ np.diag(mask) @ np.linalg.inv(T)


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    A: np.ndarray
    eigenvalues: np.ndarray
    basis_s: np.ndarray
    basis_c: np.ndarray
    basis_u: np.ndarray
    projection_u: np.ndarray  # onto E^u along E^s + E^c
    projection_s: np.ndarray  # onto E^s along E^c + E^u
    lyapunov_groups: tuple  # ((modulus, dimension), ...) with increasing modulus
    lyapunov_bases: tuple
    log_unstable_det: float
    tol_center: float

    @property
    def d_s(self):
        return self.basis_s.shape[1]

    @property
    def d_c(self):
        return self.basis_c.shape[1]

    @property
    def d_u(self):
        return self.basis_u.shape[1]

    @property
    def dims(self):
        return {"s": self.d_s, "c": self.d_c, "u": self.d_u}

    @property
    def hyperbolic(self) -> bool:
        return self.d_c == 0

    def invariance_residuals(self) -> dict:
        out = {}
        for name in ("s", "c", "u"):
            V = getattr(self, f"basis_{name}")
            if V.shape[1] == 0:
                out[name] = 0.0
                continue
            out[name] = float(np.linalg.norm(self.A @ V - V @ (V.T @ self.A @ V)))
        return out

    def lyapunov_coordinates(self) -> np.ndarray:
        """Matrix whose columns stack orthonormal bases of the Lyapunov spaces.

        In these coordinates the state matrix is block diagonal, one block per
        eigenvalue modulus.
        """
        return np.hstack(self.lyapunov_bases)


def spectral_split(A, tol_center: float = DEFAULT_TOL_CENTER) -> SpectralSplit:
    """Split the state space by eigenvalue modulus.

    Eigenvalues with ``abs(abs(lam) - 1) <= tol_center`` count as center.
    Raises ``SingularMatrix`` for non-invertible ``A`` and
    ``IllConditionedSplit`` when an eigenvalue modulus sits within
    ``tol_center / 10`` of either edge of the center band.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not 0 < tol_center < 0.5:
        raise ValueError("tol_center must lie in (0, 0.5)")
    if abs(np.linalg.det(A)) <= DET_FLOOR:
        raise SingularMatrix("A is singular (|det A| <= 1e-12)")
    lam = np.linalg.eigvals(A)
    mod = np.abs(lam)
    for edge in (1 - tol_center, 1 + tol_center):
        if np.any(np.abs(mod - edge) < tol_center / 10):
            raise IllConditionedSplit(
                f"eigenvalue modulus within {tol_center / 10:g} of the center band edge {edge}")

    lo, hi = 1 - tol_center, 1 + tol_center
    Vs = _schur_block(A, lambda r: r < lo)
    Vu = _schur_block(A, lambda r: r > hi)
    Vc = _schur_block(A, lambda r: lo <= r <= hi)
    Vsc = _schur_block(A, lambda r: r <= hi)
    Vuc = _schur_block(A, lambda r: r >= lo)
    proj_u = _complement_projection(Vu, Vsc)
    proj_s = _complement_projection(Vs, Vuc)

    order = np.sort(mod)
    groups = []
    start = 0
    for i in range(1, order.size + 1):
        if i == order.size or order[i] - order[i - 1] > LYAPUNOV_REL_TOL * max(1.0, order[i]):
            groups.append((float(order[start:i].mean()), i - start, order[start], order[i - 1]))
            start = i
    bases = []
    for rho, dj, first, last in groups:
        band = LYAPUNOV_REL_TOL * max(1.0, rho) * 10
        V = _schur_block(A, lambda r, a=first - band, b=last + band: a <= r <= b)
        bases.append(V)

    log_det_u = float(np.sum(np.maximum(0.0, np.log(mod))))
    return SpectralSplit(
        A=A,
        eigenvalues=lam,
        basis_s=Vs,
        basis_c=Vc,
        basis_u=Vu,
        projection_u=proj_u,
        projection_s=proj_s,
        lyapunov_groups=tuple((rho, dj) for rho, dj, _, _ in groups),
        lyapunov_bases=tuple(bases),
        log_unstable_det=log_det_u,
        tol_center=tol_center,
    )


def unstable_log_det(split: SpectralSplit) -> float:
    """Sum of ``max(0, log|lam|)`` over the spectrum, with algebraic multiplicity."""
    return split.log_unstable_det


def is_hyperbolic(split: SpectralSplit) -> bool:
    return split.hyperbolic


def kalman_matrix(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[0] != A.shape[0]:
        B = B.T
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def kalman_controllable(A, B) -> dict:
    K = kalman_matrix(A, B)
    sv = np.linalg.svd(K, compute_uv=False)
    rank = int(np.sum(sv > KALMAN_REL_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    return {"rank": rank, "controllable": rank == K.shape[0]}


class GlobalControllability(str, Enum):
    REACHABLE_ALL = "ReachableAll"
    CONTROLLABLE_TO_ZERO_ALL = "ControllableToZeroAll"
    CONTROLLABLE_EVERYWHERE = "ControllableEverywhere"
    NEITHER = "Neither"


def classify_global_controllability(A, B, split: SpectralSplit | None = None) -> GlobalControllability:
    """Which of the global controllability properties the constrained system has.

    Everything is reachable from 0 iff (A, B) is controllable and no
    eigenvalue is stable; everything is controllable to 0 iff (A, B) is
    controllable and no eigenvalue is unstable.
    """
    split = split if split is not None else spectral_split(A)
    if not kalman_controllable(A, B)["controllable"]:
        return GlobalControllability.NEITHER
    reach_all = split.d_s == 0
    to_zero_all = split.d_u == 0
    if reach_all and to_zero_all:
        return GlobalControllability.CONTROLLABLE_EVERYWHERE
    if reach_all:
        return GlobalControllability.REACHABLE_ALL
    if to_zero_all:
        return GlobalControllability.CONTROLLABLE_TO_ZERO_ALL
    return GlobalControllability.NEITHER


def spectral_report(A, B, split: SpectralSplit) -> dict:
    return {
        "eigenvalues": [{"re": ev.value.real, "im": ev.value.imag, "mult": ev.mult}
                        for ev in spectrum(A)],
        "dims": split.dims,
        "log_unstable_det": split.log_unstable_det,
        "hyperbolic": split.hyperbolic,
        "kalman_rank": kalman_controllable(A, B)["rank"],
    }
