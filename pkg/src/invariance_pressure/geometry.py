"""Convex polytopes in vertex representation.

Vertices are first class.  A halfspace description is derived lazily for
polytopes of dimension at most three, possibly lower dimensional ones
included (their affine hull is encoded by pairs of opposite inequalities).
Explicit hulls, Minkowski sums and intersections are limited to three
dimensions; membership in higher dimensions goes through the LP kernel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DimensionUnsupported, EmptyIntersection, SpecError
from .lp import LpProblem, lp_solve

MERGE_TOL = 1e-10
HALFSPACE_TOL = 1e-9
MAX_HULL_DIM = 3
MAX_BOX_DIM = 20


class _Frame(NamedTuple):
    """Affine hull of a vertex set and the polytope expressed inside it."""

    origin: np.ndarray
    basis: np.ndarray  # dim x a, orthonormal columns
    complement: np.ndarray  # dim x (dim - a)
    coords: np.ndarray  # n x a, vertices in the frame; ccw when a == 2
    normals: np.ndarray  # k x a, unit outward normals inside the frame
    offsets: np.ndarray
    simplices: Optional[np.ndarray]  # boundary triangles when a == 3


def _affine_basis(points):
    origin = points[0]
    centered = points - origin
    dim = points.shape[1]
    if len(points) == 1:
        return origin, np.zeros((dim, 0)), np.eye(dim)
    _, sv, vt = np.linalg.svd(centered, full_matrices=True)
    scale = max(1.0, float(sv[0]) if sv.size else 1.0)
    rank = int(np.sum(sv > 1e-12 * scale + 1e-12))
    if rank == dim:
        return origin, np.eye(dim), np.zeros((dim, 0))
    return origin, vt[:rank].T, vt[rank:].T


def _monotone_chain(pts):
    """Indices of the 2D hull in counterclockwise order, collinear points dropped."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    if len(order) <= 2:
        return list(order)
    span = float(np.ptp(pts, axis=0).max()) or 1.0

    def turn(o, a, b):
        oa = pts[a] - pts[o]
        ob = pts[b] - pts[o]
        return oa[0] * ob[1] - oa[1] * ob[0]

    def half(seq):
        chain = []
        for i in seq:
            while len(chain) >= 2 and turn(chain[-2], chain[-1], i) <= 1e-12 * span * span:
                chain.pop()
            chain.append(i)
        return chain

    lower = half(order)
    upper = half(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if not hull:
        hull = [order[0], order[-1]]
    return hull


def _polygon_halfspaces(poly):
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    norms = np.linalg.norm(normals, axis=1)
    normals = normals / norms[:, None]
    return normals, np.einsum("ij,ij->i", normals, poly)


def _hull_indices(points):
    """Indices of extreme points (any affine dimension up to 3)."""
    origin, basis, _ = _affine_basis(points)
    a = basis.shape[1]
    coords = (points - origin) @ basis
    if a == 0:
        return [0]
    if a == 1:
        t = coords[:, 0]
        return [int(np.argmin(t)), int(np.argmax(t))]
    if a == 2:
        return [int(i) for i in _monotone_chain(coords)]
    if a == 3:
        return [int(i) for i in ConvexHull(coords).vertices]
    raise DimensionUnsupported(f"explicit hulls need dim <= {MAX_HULL_DIM}")


def _merge(points, tol=MERGE_TOL):
    """Drop points within ``tol`` (max-norm) of an earlier point."""
    if len(points) <= 1:
        return points
    _, first = np.unique(np.round(points / tol) * tol, axis=0, return_index=True)
    pts = points[np.sort(first)]
    if len(pts) > 2000:
        return pts
    close = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2) <= tol
    keep = []
    for i in range(len(pts)):
        if not any(close[i, j] for j in keep):
            keep.append(i)
    return pts[keep]


@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """Bounded convex set ``conv(vertices)``.

    ``halfspaces`` may be supplied as ``(normals, offsets)`` describing the
    same set ``{x : normals @ x <= offsets}``; otherwise it is derived on
    demand in dimension at most three.
    """

    vertices: np.ndarray
    supplied_halfspaces: Optional[tuple] = None

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.size == 0:
            raise ValueError("a polytope needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        object.__setattr__(self, "vertices", v)
        if self.supplied_halfspaces is not None:
            n, c = self.supplied_halfspaces
            n = np.atleast_2d(np.asarray(n, dtype=float))
            c = np.asarray(c, dtype=float).ravel()
            if n.shape[1] != v.shape[1] or n.shape[0] != c.size:
                raise ValueError("halfspace shapes do not match the vertices")
            object.__setattr__(self, "supplied_halfspaces", (n, c))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ConvexPolytope(dim={self.dim}, n_vertices={len(self)})"

    @cached_property
    def frame(self) -> _Frame:
        if self.dim > MAX_HULL_DIM:
            raise DimensionUnsupported(f"frames need dim <= {MAX_HULL_DIM}")
        origin, basis, comp = _affine_basis(self.vertices)
        a = basis.shape[1]
        coords = (self.vertices - origin) @ basis
        simplices = None
        if a == 0:
            normals, offsets = np.zeros((0, 0)), np.zeros(0)
        elif a == 1:
            t = coords[:, 0]
            normals = np.array([[1.0], [-1.0]])
            offsets = np.array([t.max(), -t.min()])
        elif a == 2:
            idx = _monotone_chain(coords)
            coords = coords[idx]
            normals, offsets = _polygon_halfspaces(coords)
        else:
            hull = ConvexHull(coords)
            simplices = hull.simplices
            eq = hull.equations
            normals, offsets = eq[:, :-1], -eq[:, -1]
            keep = []
            for i in range(len(normals)):
                if not any(np.allclose(normals[i], normals[j], atol=1e-9)
                           and abs(offsets[i] - offsets[j]) <= 1e-9 * max(1.0, abs(offsets[i]))
                           for j in keep):
                    keep.append(i)
            normals, offsets = normals[keep], offsets[keep]
        return _Frame(origin, basis, comp, coords, normals, offsets, simplices)

    @cached_property
    def halfspaces(self) -> tuple:
        """``(normals, offsets)`` with unit normals; ``x`` is inside iff all ``normals @ x <= offsets``."""
        if self.supplied_halfspaces is not None:
            n, c = self.supplied_halfspaces
            norms = np.linalg.norm(n, axis=1)
            return n / norms[:, None], c / norms
        f = self.frame
        normals = f.normals @ f.basis.T if f.normals.size else np.zeros((0, self.dim))
        offsets = f.offsets + normals @ f.origin
        if f.complement.shape[1]:
            w = f.complement.T
            wc = w @ f.origin
            normals = np.vstack([normals, w, -w])
            offsets = np.concatenate([offsets, wc, -wc])
        return normals, offsets

    @property
    def affine_dim(self) -> int:
        return self.frame.basis.shape[1]

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": self.vertices.tolist()}


def box(lower, upper) -> ConvexPolytope:
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    n = lower.size
    if upper.size != n:
        raise SpecError("box bounds differ in length")
    if n > MAX_BOX_DIM:
        raise SpecError(f"box shorthand limited to {MAX_BOX_DIM} dimensions")
    if np.any(lower > upper):
        raise SpecError("box lower bound exceeds upper bound")
    verts = np.array(list(itertools.product(*zip(lower, upper))), dtype=float)
    eye = np.eye(n)
    normals = np.vstack([eye, -eye])
    offsets = np.concatenate([upper, -lower])
    if n <= MAX_HULL_DIM:
        return convex_hull(verts)
    return ConvexPolytope(_merge(verts), (normals, offsets))


def polytope_from_json(obj, pointer="") -> ConvexPolytope:
    """Parse ``{"dim", "vertices"}`` or the ``{"type": "box", ...}`` shorthand."""
    if not isinstance(obj, dict):
        raise SpecError("polytope must be a JSON object", pointer)
    if obj.get("type") == "box":
        for key in ("lower", "upper"):
            if key not in obj:
                raise SpecError(f"box needs '{key}'", f"{pointer}/{key}")
        return box(obj["lower"], obj["upper"])
    if "vertices" not in obj:
        raise SpecError("polytope needs 'vertices'", f"{pointer}/vertices")
    try:
        verts = np.asarray(obj["vertices"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad vertex list: {exc}", f"{pointer}/vertices") from None
    if verts.ndim != 2 or verts.shape[0] == 0:
        raise SpecError("vertices must be a nonempty list of points", f"{pointer}/vertices")
    dim = obj.get("dim", verts.shape[1])
    if dim != verts.shape[1]:
        raise SpecError("vertex length does not match 'dim'", f"{pointer}/dim")
    if dim <= MAX_HULL_DIM:
        return convex_hull(verts)
    return ConvexPolytope(_merge(verts))


def convex_hull(points) -> ConvexPolytope:
    """Minimal vertex representation of the hull of ``points`` (dim <= 3).

    Planar hulls come back in counterclockwise order.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("convex_hull needs at least one point")
    if pts.shape[1] > MAX_HULL_DIM:
        raise DimensionUnsupported(
            f"explicit hulls are limited to dim <= {MAX_HULL_DIM}; use LP membership")
    pts = _merge(pts)
    idx = _hull_indices(pts)
    return ConvexPolytope(_merge(pts[idx]))


def _prune_lp(points):
    keep = []
    for i in range(len(points)):
        others = np.delete(points, i, axis=0)
        if len(others) == 0 or not _lp_member(others, points[i], 0.0):
            keep.append(i)
    return points[keep]


def _hull_any_dim(points):
    pts = _merge(np.atleast_2d(points))
    if pts.shape[1] <= MAX_HULL_DIM:
        return convex_hull(pts)
    return ConvexPolytope(_prune_lp(pts))


def linear_image(P: ConvexPolytope, M) -> ConvexPolytope:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != P.dim:
        raise ValueError(f"matrix has {M.shape[1]} columns, polytope dim is {P.dim}")
    return _hull_any_dim(P.vertices @ M.T)


def translate(P: ConvexPolytope, shift) -> ConvexPolytope:
    return ConvexPolytope(P.vertices + np.asarray(shift, dtype=float))


def scale(P: ConvexPolytope, factor: float) -> ConvexPolytope:
    return ConvexPolytope(P.vertices * float(factor))


def minkowski_sum(P: ConvexPolytope, Q: ConvexPolytope) -> ConvexPolytope:
    if P.dim != Q.dim:
        raise ValueError("Minkowski sum of polytopes of different dimension")
    if P.dim > MAX_HULL_DIM:
        raise DimensionUnsupported(f"Minkowski sums are limited to dim <= {MAX_HULL_DIM}")
    sums = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, P.dim)
    return convex_hull(sums)


def _lp_member(vertices, x, tol):
    """LP feasibility: is ``x`` within max-norm distance ``tol`` of conv(vertices)?"""
    n, d = vertices.shape
    # variables: lambda_1..lambda_n >= 0, s >= 0; minimize s
    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    cons = [(np.concatenate([np.ones(n), [0.0]]), "=", 1.0)]
    for i in range(d):
        row = np.concatenate([vertices[:, i], [-1.0]])
        cons.append((row, "<=", x[i]))
        row = np.concatenate([-vertices[:, i], [-1.0]])
        cons.append((row, "<=", -x[i]))
    res = lp_solve(LpProblem(obj, cons))
    return res.optimal and res.value <= tol + 1e-12


def contains_point(P: ConvexPolytope, x, tol: float = 0.0) -> bool:
    """Membership by LP feasibility over convex coefficients.

    ``tol`` is measured in the max-norm, so any dimension is supported.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != P.dim:
        raise ValueError("point and polytope dimensions differ")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(_lp_member(P.vertices, x, tol))


def contains_points(P: ConvexPolytope, X, tol: float = HALFSPACE_TOL) -> np.ndarray:
    """Vectorized membership through the halfspace description.

    A point passes when it violates no (unit-normal) halfspace by more than
    ``tol``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if P.supplied_halfspaces is None and P.dim > MAX_HULL_DIM:
        return np.array([contains_point(P, x, tol) for x in X])
    normals, offsets = P.halfspaces
    if len(normals) == 0:
        return np.ones(len(X), dtype=bool)
    return np.all(X @ normals.T <= offsets + tol, axis=1)


def interior_margin(P: ConvexPolytope, X) -> np.ndarray:
    """Smallest slack over all halfspaces; positive iff strictly inside."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    normals, offsets = P.halfspaces
    return np.min(offsets - X @ normals.T, axis=1)


def _closest_on_segment(x, a, b):
    ab = b - a
    denom = ab @ ab
    t = 0.0 if denom == 0 else np.clip((x - a) @ ab / denom, 0.0, 1.0)
    return a + t * ab


def _closest_on_triangle(p, a, b, c):
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return a + d1 / (d1 - d3) * ab
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return a + d2 / (d2 - d6) * ac
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b)
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def project_point(P: ConvexPolytope, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``P`` (dim <= 3)."""
    x = np.asarray(x, dtype=float).ravel()
    f = P.frame
    a = f.basis.shape[1]
    z = (x - f.origin) @ f.basis
    if a == 0:
        zc = z
    elif a == 1:
        zc = np.clip(z, f.coords.min(), f.coords.max())
    elif np.all(f.normals @ z <= f.offsets):
        zc = z
    elif a == 2:
        poly = f.coords
        cands = [_closest_on_segment(z, poly[i], poly[(i + 1) % len(poly)])
                 for i in range(len(poly))]
        zc = min(cands, key=lambda q: np.sum((q - z) ** 2))
    else:
        cands = [_closest_on_triangle(z, *f.coords[s]) for s in f.simplices]
        zc = min(cands, key=lambda q: np.sum((q - z) ** 2))
    return f.origin + f.basis @ zc


def point_distance(P: ConvexPolytope, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(np.linalg.norm(x - project_point(P, x)))


def hausdorff_distance(P: ConvexPolytope, Q: ConvexPolytope) -> float:
    """Hausdorff distance; attained at a vertex since distance to a convex set is convex."""
    if P.dim != Q.dim:
        raise ValueError("polytopes of different dimension")
    d_pq = max(point_distance(Q, v) for v in P.vertices)
    d_qp = max(point_distance(P, v) for v in Q.vertices)
    return max(d_pq, d_qp)


def _clip_polygon(poly, n, c, tol):
    """Sutherland-Hodgman clip of an ordered planar vertex cycle by ``n.x <= c``."""
    out = []
    k = len(poly)
    s = poly @ n - c
    for i in range(k):
        j = (i + 1) % k
        p, q = poly[i], poly[j]
        sp, sq = s[i], s[j]
        if sp <= tol:
            out.append(p)
        if (sp < -tol and sq > tol) or (sp > tol and sq < -tol):
            out.append(p + sp / (sp - sq) * (q - p))
    return np.array(out) if out else np.zeros((0, poly.shape[1]))


def _clip_generic(points, n, c, tol):
    s = points @ n - c
    inside = s <= tol
    if inside.all():
        return points
    strict_in = np.nonzero(s < -tol)[0]
    out = np.nonzero(s > tol)[0]
    new = [points[inside]]
    if strict_in.size and out.size:
        si = s[strict_in][:, None]
        so = s[out][None, :]
        lam = si / (si - so)
        pi = points[strict_in][:, None, :]
        po = points[out][None, :, :]
        new.append((pi + lam[..., None] * (po - pi)).reshape(-1, points.shape[1]))
    return np.vstack(new)


def intersect(P: ConvexPolytope, Q: ConvexPolytope, tol: float = HALFSPACE_TOL) -> ConvexPolytope:
    """``P`` clipped by the halfspaces of ``Q`` (dim <= 3)."""
    if P.dim != Q.dim:
        raise ValueError("polytopes of different dimension")
    if P.dim > MAX_HULL_DIM:
        raise DimensionUnsupported(f"intersections are limited to dim <= {MAX_HULL_DIM}")
    normals, offsets = Q.halfspaces
    return clip(P, normals, offsets, tol)


def clip(P: ConvexPolytope, normals, offsets, tol: float = HALFSPACE_TOL) -> ConvexPolytope:
    """``P`` intersected with ``{x : normals @ x <= offsets}``."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    offsets = np.asarray(offsets, dtype=float).ravel()
    if P.dim == 2 and P.affine_dim == 2:
        pts = P.frame.origin + P.frame.coords @ P.frame.basis.T
        planar = True
    else:
        pts = P.vertices
        planar = False
    for n, c in zip(normals, offsets):
        s = pts @ n - c
        if np.all(s <= tol):
            continue
        if np.all(s > tol):
            raise EmptyIntersection("polytopes do not intersect")
        pts = _clip_polygon(pts, n, c, tol) if planar else _clip_generic(pts, n, c, tol)
        if len(pts) == 0:
            raise EmptyIntersection("polytopes do not intersect")
        if not planar:
            pts = convex_hull(pts).vertices
    return convex_hull(pts)


def chebyshev_radius(P: ConvexPolytope) -> float:
    """Radius of the largest ball inside ``P``; zero for flat polytopes."""
    normals, offsets = P.halfspaces
    d = P.dim
    if len(normals) == 0:
        return 0.0
    obj = np.zeros(d + 1)
    obj[-1] = 1.0
    cons = [(np.concatenate([n, [1.0]]), "<=", c) for n, c in zip(normals, offsets)]
    bounds = [(None, None)] * d + [(0.0, None)]
    res = lp_solve(LpProblem(obj, cons, bounds, maximize=True))
    if not res.optimal:
        return 0.0
    return max(0.0, float(res.value))


def grid_points(P: ConvexPolytope, n: int, tol: float = HALFSPACE_TOL) -> np.ndarray:
    """Tensor grid with ``n`` points per axis over the bounding box, filtered to ``P``."""
    lo, hi = P.bounding_box()
    axes = [np.linspace(a, b, n) if b > a else np.array([a]) for a, b in zip(lo, hi)]
    mesh = np.array(list(itertools.product(*axes)), dtype=float)
    return mesh[contains_points(P, mesh, tol)]
