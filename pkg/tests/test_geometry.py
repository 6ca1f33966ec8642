import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from invariance_pressure import geometry as geo
from invariance_pressure.errors import DimensionUnsupported, EmptyIntersection, SpecError


def same_set(P, Q, tol=1e-9):
    return geo.hausdorff_distance(P, Q) <= tol


def test_hull_drops_interior_point():
    P = geo.convex_hull([(0, 0), (1, 0), (0, 1), (0.2, 0.2)])
    assert len(P) == 3
    assert {tuple(v) for v in P.vertices} == {(0, 0), (1, 0), (0, 1)}


def test_hull_singleton():
    P = geo.convex_hull([(1, 1)])
    assert P.vertices.tolist() == [[1.0, 1.0]]


def test_hull_counterclockwise_and_idempotent():
    rng = np.random.default_rng(0)
    pts = rng.uniform(size=(100, 2))
    P = geo.convex_hull(pts)
    v = P.vertices
    e1 = np.roll(v, -1, axis=0) - v
    e2 = np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)
    assert np.all(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] > 0)
    # every input point lies on the inner side of every edge
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        assert np.all(cross >= -1e-12)
    assert np.allclose(geo.convex_hull(v).vertices, v, atol=1e-12)
    assert set(map(tuple, v)) == set(map(tuple, pts[ConvexHull(pts).vertices]))


def test_hull_3d_matches_scipy():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(60, 3))
    P = geo.convex_hull(pts)
    assert len(P) == len(ConvexHull(pts).vertices)


def test_hull_rejects_dim4():
    with pytest.raises(DimensionUnsupported):
        geo.convex_hull(np.zeros((5, 4)))


def test_flat_polytope_in_plane():
    seg = geo.convex_hull([(-1, -1), (1, 1), (0, 0)])
    assert len(seg) == 2
    assert seg.affine_dim == 1
    assert geo.contains_point(seg, (0.5, 0.5))
    assert not geo.contains_point(seg, (0.5, -0.5), 1e-6)


def test_linear_images():
    sq = geo.box([-1, -1], [1, 1])
    assert same_set(geo.linear_image(sq, 2 * np.eye(2)), geo.box([-2, -2], [2, 2]))
    seg = geo.linear_image(geo.box([-1], [1]), [[1.0], [1.0]])
    assert same_set(seg, geo.convex_hull([(-1, -1), (1, 1)]))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert same_set(geo.linear_image(sq, rot), sq)


def test_minkowski_examples():
    I1 = geo.box([-1], [1])
    assert same_set(geo.minkowski_sum(I1, I1), geo.box([-2], [2]))
    sq = geo.box([-1, -1], [1, 1])
    diag = geo.convex_hull([(-1, -1), (1, 1)])
    hexagon = geo.minkowski_sum(sq, diag)
    # oracle: hull of dense samples of both sets summed pairwise
    t = np.linspace(-1, 1, 21)
    square_pts = np.array([(a, b) for a in t for b in t])
    seg_pts = np.column_stack([t, t])
    sums = (square_pts[:, None, :] + seg_pts[None, :, :]).reshape(-1, 2)
    oracle = sums[ConvexHull(sums).vertices]
    assert len(hexagon) == 6
    assert same_set(hexagon, geo.ConvexPolytope(oracle))
    origin = geo.ConvexPolytope([[0.0, 0.0]])
    assert same_set(geo.minkowski_sum(sq, origin), sq)


def test_contains_point_examples():
    sq = geo.box([-1, -1], [1, 1])
    assert geo.contains_point(sq, (0, 0), 0)
    assert geo.contains_point(sq, (1.0000005, 0), 1e-6)
    assert not geo.contains_point(sq, (2, 0), 1e-6)


def test_contains_point_matches_rasterization():
    rng = np.random.default_rng(3)
    P = geo.convex_hull(rng.normal(size=(12, 2)))
    probes = rng.uniform(-3, 3, size=(1500, 2))
    # oracle: point is inside iff it lies left of every ccw edge
    v = P.vertices
    w = np.roll(v, -1, axis=0)
    cross = ((w[:, 0] - v[:, 0])[None] * (probes[:, 1:2] - v[:, 1][None])
             - (w[:, 1] - v[:, 1])[None] * (probes[:, 0:1] - v[:, 0][None]))
    edge_len = np.linalg.norm(w - v, axis=1)
    signed = cross / edge_len
    oracle = np.all(signed >= 0, axis=1)
    band = np.min(np.abs(signed), axis=1) < 1e-6
    lp = np.array([geo.contains_point(P, x, 0.0) for x in probes])
    fast = geo.contains_points(P, probes, 0.0)
    assert np.all((lp == oracle) | band)
    assert np.all((fast == oracle) | band)


def test_hausdorff_examples():
    sq = geo.box([0, 0], [1, 1])
    assert geo.hausdorff_distance(sq, sq) == 0
    assert geo.hausdorff_distance(geo.box([-1], [1]), geo.box([-2], [2])) == pytest.approx(1.0)
    shifted = geo.translate(sq, [0.3, 0.4])
    # oracle: dense boundary samples of both squares
    t = np.linspace(0, 1, 2001)
    edges = np.vstack([np.column_stack([t, 0 * t]), np.column_stack([t, 0 * t + 1]),
                       np.column_stack([0 * t, t]), np.column_stack([0 * t + 1, t])])
    a, b = edges, edges + [0.3, 0.4]

    def dist_to_square(p, lo):
        q = np.clip(p, lo, lo + 1)
        return np.linalg.norm(p - q, axis=1)

    oracle = max(dist_to_square(a, np.array([0.3, 0.4])).max(), dist_to_square(b, np.zeros(2)).max())
    assert geo.hausdorff_distance(sq, shifted) == pytest.approx(0.5, abs=1e-12)
    assert oracle == pytest.approx(0.5, abs=1e-3)


def test_hausdorff_3d_uses_projection():
    cube = geo.box([-1, -1, -1], [1, 1, 1])
    big = geo.scale(cube, 2.0)
    assert geo.hausdorff_distance(cube, big) == pytest.approx(np.sqrt(3), abs=1e-9)


def test_intersection_and_clip():
    a = geo.box([-1, -1], [1, 1])
    b = geo.translate(a, [1, 1])
    assert same_set(geo.intersect(a, b), geo.box([0, 0], [1, 1]))
    with pytest.raises(EmptyIntersection):
        geo.intersect(a, geo.translate(a, [5, 0]))
    cube = geo.box([0, 0, 0], [1, 1, 1])
    half = geo.clip(cube, np.array([[1.0, 0.0, 0.0]]), np.array([0.5]))
    assert same_set(half, geo.box([0, 0, 0], [0.5, 1, 1]))


def test_chebyshev_radius():
    assert geo.chebyshev_radius(geo.box([-1, -2], [1, 2])) == pytest.approx(1.0, abs=1e-9)
    assert geo.chebyshev_radius(geo.convex_hull([(0, 0), (1, 1)])) == 0.0


def test_box_json_round_trip():
    P = geo.polytope_from_json({"type": "box", "lower": [-1, 0], "upper": [1, 2]})
    assert len(P) == 4
    Q = geo.polytope_from_json(P.to_json())
    assert same_set(P, Q)
    with pytest.raises(SpecError):
        geo.polytope_from_json({"type": "box", "lower": [0] * 21, "upper": [1] * 21})
    with pytest.raises(SpecError) as err:
        geo.polytope_from_json({"dim": 2, "vertices": [[1, 2, 3]]}, "/U")
    assert err.value.pointer.startswith("/U")


def test_high_dim_box_membership():
    P = geo.box(-np.ones(5), np.ones(5))
    assert len(P) == 32
    assert geo.contains_point(P, np.full(5, 0.99))
    assert not geo.contains_point(P, np.full(5, 1.01), 1e-6)


polygons = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=12).map(
    lambda pts: geo.convex_hull(np.array(pts) + np.random.default_rng(len(pts)).normal(0, 1e-3, (len(pts), 2))))


@settings(max_examples=40, deadline=None)
@given(polygons, polygons, polygons)
def test_minkowski_commutative_associative(P, Q, R):
    assert same_set(geo.minkowski_sum(P, Q), geo.minkowski_sum(Q, P), 1e-9)
    left = geo.minkowski_sum(geo.minkowski_sum(P, Q), R)
    right = geo.minkowski_sum(P, geo.minkowski_sum(Q, R))
    assert same_set(left, right, 1e-9)


@settings(max_examples=40, deadline=None)
@given(polygons, st.lists(st.floats(-2, 2), min_size=8, max_size=8))
def test_linear_image_composes(P, entries):
    M1 = np.array(entries[:4]).reshape(2, 2)
    M2 = np.array(entries[4:]).reshape(2, 2)
    direct = geo.linear_image(P, M1 @ M2)
    nested = geo.linear_image(geo.linear_image(P, M2), M1)
    assert same_set(direct, nested, 1e-9)
