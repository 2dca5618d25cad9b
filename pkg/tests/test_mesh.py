from math import factorial

import numpy as np
import pytest

from splinemask.geometry import SelfIntersectionError, polygon_signed_area
from splinemask.mesh import (
    MeshError,
    TriangleQuadrature,
    TriangleTensor,
    assemble_tensor,
    gauss_points,
    polygon_area,
    refine_mesh,
    signed_area,
    triangulate_region,
)


# -- independent oracle: analytic monomial integral over a triangle ---------------

def _poly_mul(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for (i, j), c in np.ndenumerate(a):
        if c:
            out[i:i + b.shape[0], j:j + b.shape[1]] += c * b
    return out


def _poly_pow(a, n):
    out = np.zeros((1, 1))
    out[0, 0] = 1.0
    for _ in range(n):
        out = _poly_mul(out, a)
    return out


def triangle_monomial_integral(tri, i, j):
    """Exact integral of x^i y^j over a triangle via the affine map to the
    reference triangle and the factorial formula for reference monomials."""
    a, b, c = np.asarray(tri, dtype=float)
    # x(u, v) = a_x + (b_x - a_x) u + (c_x - a_x) v, same for y; coeff[r][s] ~ u^r v^s
    px = np.array([[a[0], c[0] - a[0]], [b[0] - a[0], 0.0]])
    py = np.array([[a[1], c[1] - a[1]], [b[1] - a[1], 0.0]])
    poly = _poly_mul(_poly_pow(px, i), _poly_pow(py, j))
    jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    total = 0.0
    for (r, s), coeff in np.ndenumerate(poly):
        if coeff:
            total += coeff * factorial(r) * factorial(s) / factorial(r + s + 2)
    return jac * total


def square_samples(m, side=1.0):
    corners = np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]])
    from splinemask.geometry import polygon_perimeter_points
    return polygon_perimeter_points(corners, m)


def test_signed_area_examples():
    assert signed_area((0, 0), (1, 0), (0, 1)) == 0.5
    assert signed_area((0, 0), (0, 1), (1, 0)) == -0.5
    assert signed_area((0, 0), (1, 1), (2, 2)) == 0.0


def test_triangulate_unit_square_corners():
    mesh = triangulate_region(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    assert mesh.num_triangles == 2
    assert polygon_area(mesh) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(mesh.provenance, np.eye(4))
    assert (mesh.areas() > 0).all()


def test_triangulate_convex_polygon():
    m = 14
    theta = np.linspace(0, 2 * np.pi, m, endpoint=False)
    pts = np.stack([np.cos(theta), 0.8 * np.sin(theta)], axis=1)
    mesh = triangulate_region(pts)
    assert mesh.num_triangles == m - 2
    assert polygon_area(mesh) == pytest.approx(abs(polygon_signed_area(pts)), rel=1e-12)


def test_triangulate_l_shape_matches_shoelace():
    l_shape = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])
    mesh = triangulate_region(l_shape)
    assert polygon_area(mesh) == pytest.approx(abs(polygon_signed_area(l_shape)), rel=1e-12)
    assert polygon_area(mesh) == pytest.approx(3.0, rel=1e-12)


def test_triangulate_rejects_bowtie():
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(SelfIntersectionError):
        triangulate_region(bowtie)


def test_triangulate_rejects_degenerate():
    with pytest.raises(MeshError):
        triangulate_region(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_refine_single_triangle_once():
    mesh = triangulate_region(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    area = polygon_area(mesh)
    refined = refine_mesh(mesh, area * 0.9)  # exactly one split pass
    assert refined.num_vertices == 4
    assert refined.num_triangles == 3
    np.testing.assert_allclose(refined.provenance[-1], [1 / 3, 1 / 3, 1 / 3], atol=1e-15)
    assert polygon_area(refined) == pytest.approx(area, abs=1e-14)


def test_refinement_preserves_area_and_provenance():
    mesh = triangulate_region(square_samples(16))
    refined = refine_mesh(mesh, 0.004)
    assert polygon_area(refined) == pytest.approx(polygon_area(mesh), abs=1e-12)
    reconstructed = refined.provenance @ refined.boundary
    assert np.abs(refined.vertices - reconstructed).max() < 1e-12
    np.testing.assert_allclose(refined.provenance.sum(axis=1), 1.0, atol=1e-12)
    assert refined.provenance.min() >= 0.0
    assert refined.provenance.max() <= 1.0
    np.testing.assert_array_equal(refined.provenance[:16], np.eye(16))
    assert (refined.areas() > 0).all()
    assert refined.areas().max() <= 0.004


def test_refine_rejects_bad_tolerance():
    mesh = triangulate_region(square_samples(8))
    with pytest.raises(ValueError):
        refine_mesh(mesh, 0.0)


def test_moved_mesh_keeps_provenance_exact():
    mesh = refine_mesh(triangulate_region(square_samples(12)), 0.01)
    shifted = mesh.with_boundary(mesh.boundary + np.array([0.3, -0.1]))
    assert np.abs(shifted.vertices - shifted.provenance @ shifted.boundary).max() == 0.0


def test_assemble_tensor_matches_indexing():
    mesh = refine_mesh(triangulate_region(square_samples(10)), 0.02)
    tensor = assemble_tensor(mesh)
    for p in range(mesh.num_triangles):
        for j in range(3):
            np.testing.assert_array_equal(tensor.coords[p, j], mesh.vertices[mesh.triangles[p, j]])
    assert (tensor.areas() > 0).all()


def test_tensor_area_invariant_to_cyclic_relabeling():
    mesh = triangulate_region(square_samples(8))
    rolled = mesh.triangles[:, [1, 2, 0]]  # cyclic permutation keeps orientation
    t1 = TriangleTensor(mesh.vertices[mesh.triangles])
    t2 = TriangleTensor(mesh.vertices[rolled])
    np.testing.assert_allclose(np.sort(t1.areas()), np.sort(t2.areas()), atol=1e-15)


def test_quadrature_centroid_point():
    quad = TriangleQuadrature.degree3()
    tensor = TriangleTensor(np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]]))
    pts = gauss_points(tensor, quad)
    np.testing.assert_allclose(pts[0, 0], [1 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(quad.barycentric.sum(axis=0), 1.0, atol=1e-15)
    assert quad.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_quadrature_weights_integrate_constants():
    rng = np.random.default_rng(21)
    quad = TriangleQuadrature.degree3()
    for _ in range(50):
        tri = rng.normal(size=(3, 2))
        area = abs(signed_area(*tri))
        # constant integrand: rule result is the area itself
        assert quad.weights.sum() * area == pytest.approx(area, abs=1e-13)


def test_quadrature_reference_monomials():
    quad = TriangleQuadrature.degree3()
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tensor = TriangleTensor(tri[None])
    pts = gauss_points(tensor, quad)[0]
    area = 0.5
    x3 = float((pts[:, 0] ** 3) @ quad.weights * area)
    x1 = float(pts[:, 0] @ quad.weights * area)
    assert x3 == pytest.approx(1.0 / 20.0, abs=1e-15)
    assert x1 == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_quadrature_exact_for_cubics_random_triangles():
    quad = TriangleQuadrature.degree3()
    rng = np.random.default_rng(42)
    for _ in range(100):
        tri = rng.uniform(0.1, 1.1, size=(3, 2))
        while abs(signed_area(*tri)) < 1e-3:
            tri = rng.uniform(0.1, 1.1, size=(3, 2))
        tensor = TriangleTensor(tri[None])
        pts = gauss_points(tensor, quad)[0]
        area = abs(signed_area(*tri))
        for i in range(4):
            for j in range(4 - i):
                numeric = float((pts[:, 0] ** i * pts[:, 1] ** j) @ quad.weights * area)
                exact = triangle_monomial_integral(tri, i, j)
                assert abs(numeric - exact) <= 1e-12 * abs(exact)


def test_gauss_points_inside_triangle():
    quad = TriangleQuadrature.degree3()
    rng = np.random.default_rng(4)
    tri = rng.normal(size=(3, 2))
    pts = gauss_points(TriangleTensor(tri[None]), quad)[0]
    # all barycentric coordinates of this rule are positive, so points are interior
    for pt in pts:
        s0 = signed_area(tri[0], tri[1], pt)
        s1 = signed_area(tri[1], tri[2], pt)
        s2 = signed_area(tri[2], tri[0], pt)
        assert min(s0, s1, s2) * max(s0, s1, s2) > 0  # same side of every edge


def test_polygon_area_circle_convergence_order():
    # inscribed-polygon area error should drop ~4x per sample doubling
    r = 0.5
    for m in (32, 64, 128):
        errors = []
        for count in (m, 2 * m):
            theta = np.linspace(0, 2 * np.pi, count, endpoint=False)
            pts = r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
            errors.append(np.pi * r * r - polygon_area(triangulate_region(pts)))
        ratio = errors[0] / errors[1]
        assert 3.4 <= ratio <= 4.6


def test_polygon_area_unchanged_by_refinement():
    mesh = triangulate_region(square_samples(12))
    refined = refine_mesh(mesh, 0.005)
    assert polygon_area(refined) == pytest.approx(polygon_area(mesh), abs=1e-12)
