import math

import numpy as np
import pytest

from qcsmooth.criteria import criterion, element_quality
from qcsmooth.errors import NotSmoothableError, TopologyError, ValidationError
from qcsmooth.generators import grid_mesh, sliver_patch
from qcsmooth.geometry import halfspace_intersection, solid_angle
from qcsmooth.mesh import (Mesh, SmoothConfig, extract_patch, laplacian_smooth, place,
                           quality_report, smooth_vertex, sweep, validate)

SPIRAL = [(0, 0), (6, 0), (6, 6), (1, 6), (1, 2), (4, 2), (4, 4), (3, 4), (3, 3),
          (2, 3), (2, 5), (5, 5), (5, 1), (0, 1)]
# star-shaped about the origin, but the neighbour centroid is outside the kernel
DENTED = [(0.362, 0.667), (0.432, 1.106), (0.063, 0.345), (-0.903, 1.067), (-0.915, 0.235),
          (0.959, -0.854), (0.614, -0.147)]


def fan(boundary, center):
    n = len(boundary)
    return Mesh(list(boundary) + [center], [(n, i, (i + 1) % n) for i in range(n)], "tri")


def quad_grid(n=3, perturb=None):
    xs = np.arange(n + 1, dtype=float)
    pts = np.array([(x, y) for y in xs for x in xs])
    idx = lambda i, j: j * (n + 1) + i
    quads = [(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1))
             for j in range(n) for i in range(n)]
    for v, d in (perturb or {}).items():
        pts[v] += d
    return Mesh(pts, quads, "quad")


# -- patches --------------------------------------------------------------------------

def test_grid_vertex_patch():
    mesh = grid_mesh(2)
    patch = extract_patch(mesh, 4)
    assert len(patch.stencils) == 6
    assert all(s.fixed_vertices.shape == (2, 2) for s in patch.stencils)
    poly = halfspace_intersection(patch.domain)
    assert not poly.empty and len(poly.vertices) == 6  # hexagonal kernel
    assert sorted(patch.elements) == sorted(mesh.incident(4))


def test_quad_vertex_patch():
    mesh = quad_grid()
    patch = extract_patch(mesh, 5)
    assert len(patch.stencils) == 4
    assert all(s.fixed_vertices.shape == (3, 2) for s in patch.stencils)
    # three halfplanes per quad: the diagonal and two edge lines
    assert len(patch.domain.halfspaces) >= 12
    c = np.array([1.0, 1.0])
    assert patch.domain.contains(c)
    # crossing the diagonal of the lower-left quad leaves the domain
    assert not patch.domain.contains(np.array([0.45, 0.45]))


def test_tangled_patch_has_empty_kernel():
    mesh = fan(SPIRAL, (0.5, 0.5))
    patch = extract_patch(mesh, len(SPIRAL))
    poly = halfspace_intersection(patch.domain)
    assert poly.empty and 1 <= len(poly.certificate) <= 3
    res = smooth_vertex(mesh, len(SPIRAL), SmoothConfig())
    assert not res.moved and res.diagnostic == "empty_domain"


def test_not_smoothable_and_topology_errors():
    mesh = grid_mesh(2)
    with pytest.raises(NotSmoothableError):
        extract_patch(mesh, 0)
    fixed = mesh.fixed.copy()
    fixed[4] = True
    with pytest.raises(NotSmoothableError):
        extract_patch(Mesh(mesh.points, mesh.elements, "tri", fixed=fixed), 4)
    # two separate fans around vertex 0: every edge at 0 is shared twice,
    # but the star is two cycles
    pts = [(0, 0), (1, 0), (0, 1), (-1, -1), (2, 2), (3, 2), (2, 3)]
    tris = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (0, 4, 5), (0, 5, 6), (0, 6, 4)]
    mesh = Mesh(pts, tris, "tri")
    assert 0 not in mesh.boundary_vertices()
    with pytest.raises(TopologyError):
        extract_patch(mesh, 0)


def test_patch_domain_guarantees_validity():
    rng = np.random.default_rng(3)
    mesh = grid_mesh(4, noise=0.3, seed=1)
    for v in mesh.movable_vertices():
        patch = extract_patch(mesh, v)
        A, b = patch.domain.matrix()
        for x in rng.uniform(mesh.points.min(0), mesh.points.max(0), (300, 2)):
            if np.all(A @ x < b - 1e-9):
                trial = mesh.copy()
                trial.points[v] = x
                assert validate(trial).ok


# -- smooth_vertex ----------------------------------------------------------------------

def square_mesh(center=(0.3, 0.2)):
    return fan([(-1, -1), (1, -1), (1, 1), (-1, 1)], center)


def test_square_vertex_moves_to_center():
    mesh = square_mesh()
    res = smooth_vertex(mesh, 4, SmoothConfig())
    assert res.moved
    assert np.allclose(mesh.points[4], 0.0, atol=1e-6)
    assert res.new_cost == pytest.approx(-math.pi / 4, abs=1e-9)
    again = smooth_vertex(mesh, 4, SmoothConfig())
    assert not again.moved and again.diagnostic == "no_improvement"


def test_mixed_criteria_rejected():
    from qcsmooth.errors import UsageError
    with pytest.raises(UsageError):
        smooth_vertex(square_mesh(), 4, SmoothConfig("min-angle,max-angle"))


def test_special_criterion_smoothing():
    mesh = square_mesh()
    res = smooth_vertex(mesh, 4, SmoothConfig("max-angle"))
    assert res.moved and res.diagnostic == "special"
    assert res.new_cost == pytest.approx(math.pi / 2, abs=1e-9)


def test_sliver_apex_improves():
    patch, before = sliver_patch()
    x, _ = place(patch, SmoothConfig("solid-angle-interior"))

    def min_corner_angle(p):
        out = []
        for s in patch.stencils:
            a, b, c = s.fixed_vertices
            out.extend([solid_angle(p, a, b, c), solid_angle(a, p, c, b),
                        solid_angle(b, p, a, c), solid_angle(c, p, b, a)])
        return min(out)

    assert min_corner_angle(patch.position) == pytest.approx(before, rel=1e-9)
    assert min(solid_angle(x, *s.fixed_vertices) for s in patch.stencils) > \
        min(solid_angle(patch.position, *s.fixed_vertices) for s in patch.stencils)


# -- sweeps ----------------------------------------------------------------------------

def test_structured_grid_is_fixpoint():
    mesh = grid_mesh(4)
    stats = sweep(mesh, SmoothConfig())
    assert stats.moves_accepted == 0 and stats.passes_run == 1


def test_single_vertex_sweep_matches_smooth_vertex():
    a, b = square_mesh(), square_mesh()
    stats = sweep(a, SmoothConfig(passes=1))
    res = smooth_vertex(b, 4, SmoothConfig())
    assert stats.moves_accepted == int(res.moved) == 1
    assert np.array_equal(a.points, b.points)


def test_noisy_grid_improves():
    mesh = grid_mesh(6, noise=0.3, seed=2)
    stats = sweep(mesh, SmoothConfig())
    assert stats.min_quality_after["min-angle"] > stats.min_quality_before["min-angle"]
    assert stats.moves_accepted <= stats.vertices_visited
    assert validate(mesh).ok


def test_invalid_mesh_rejected_before_mutation():
    mesh = grid_mesh(3)
    mesh.points[5] = (10.0, 10.0)
    before = mesh.points.copy()
    with pytest.raises(ValidationError):
        sweep(mesh, SmoothConfig())
    with pytest.raises(ValidationError):
        laplacian_smooth(mesh, SmoothConfig())
    assert np.array_equal(mesh.points, before)


# -- Laplacian ------------------------------------------------------------------------

def test_laplacian_examples():
    mesh = fan([(0, 0), (2, 0), (2, 2), (0, 2)], (0.5, 0.3))
    laplacian_smooth(mesh, SmoothConfig(passes=1))
    assert np.allclose(mesh.points[4], (1.0, 1.0))
    hexagon = [(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
    mesh = fan(hexagon, (0.0, 0.0))
    stats = laplacian_smooth(mesh, SmoothConfig(passes=1))
    assert stats.moves_accepted == 0


def test_laplacian_guard():
    n = len(DENTED)
    mesh = fan(DENTED, (0.0, 0.0))
    assert validate(mesh).ok
    stats = laplacian_smooth(mesh, SmoothConfig(passes=1))
    assert stats.moves_accepted == 0 and stats.skipped == [(n, "invalid_move")]
    assert np.array_equal(mesh.points[n], (0.0, 0.0))
    loose = fan(DENTED, (0.0, 0.0))
    laplacian_smooth(loose, SmoothConfig(passes=1), guarded=False)
    assert np.allclose(loose.points[n], np.mean(DENTED, axis=0))
    assert not validate(loose).ok


# -- validate / quality_report --------------------------------------------------------------

def test_validate_examples():
    assert validate(grid_mesh(3)).ok
    mesh = grid_mesh(3)
    mesh.elements[4] = mesh.elements[4][[0, 2, 1]]
    rep = validate(mesh)
    orient = [v for v in rep.violations if v.kind == "orientation"]
    assert len(orient) == 1 and orient[0].index == 4 and "element 4" in orient[0].message
    # vertex 5 pushed inside the quad's diagonal makes the quad reflex at 5
    mesh = quad_grid(perturb={5: (0.7, 0.7)})
    assert any(v.kind == "convexity" for v in validate(mesh).violations)
    bad = grid_mesh(2)
    bad.elements[0, 0] = 99
    assert [v.kind for v in validate(bad).violations] == ["index"]


def test_quality_report_examples():
    eq = Mesh([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)], [(0, 1, 2)], "tri")
    rep = quality_report(eq, [criterion("min-angle")])["min-angle"]
    assert rep["min"] == pytest.approx(math.pi / 3) and rep["max"] == pytest.approx(math.pi / 3)
    assert sum(rep["histogram"]["counts"]) == 1 and len(rep["histogram"]["counts"]) == 32
    tri345 = Mesh([(0, 0), (4, 0), (0, 3)], [(0, 1, 2)], "tri")
    assert quality_report(tri345, ["inradius"])["inradius"]["min"] == pytest.approx(1.0)
    mesh = grid_mesh(4, noise=0.3, seed=5)
    rep = quality_report(mesh, ["min-angle", "aspect-ratio"])
    for name in ("min-angle", "aspect-ratio"):
        q = element_quality(name, mesh.element_points(), "tri")
        assert rep[name]["min"] == q.min() and rep[name]["max"] == q.max()


# -- properties -----------------------------------------------------------------------

TRI_CRITERIA = ["min-angle", "aspect-ratio", "containing-circle", "inradius", "area-max",
                "max-angle", "circumradius"]


def test_randomized_sweeps_preserve_topology_validity_and_quality():
    rng = np.random.default_rng(12)
    for trial in range(1000):
        mesh = grid_mesh(3, noise=0.3, seed=int(rng.integers(2 ** 31)))
        while not validate(mesh).ok:  # sweeps require a valid start
            mesh = grid_mesh(3, noise=0.3, seed=int(rng.integers(2 ** 31)))
        name = TRI_CRITERIA[trial % len(TRI_CRITERIA)]
        crit = criterion(name)
        elements = mesh.elements.copy()
        fixed_pts = mesh.points[mesh.fixed].copy()
        worst = [_worst(mesh, crit)]

        def check(m, res):
            assert validate(m).ok
            w = _worst(m, crit)
            assert w >= worst[-1] - 1e-12 * max(1.0, abs(w))
            worst.append(w)

        sweep(mesh, SmoothConfig([crit], passes=1), callback=check)
        assert np.array_equal(mesh.elements, elements)
        assert np.array_equal(mesh.points[mesh.fixed], fixed_pts)


def _worst(mesh, crit):
    from qcsmooth.mesh import mixture_objective
    return -mixture_objective(mesh, [crit])


def test_fixpoint_idempotence():
    for seed in range(3):
        mesh = grid_mesh(4, noise=0.3, seed=seed)
        first = sweep(mesh, SmoothConfig(passes=200))
        assert first.passes_run < 200
        second = sweep(mesh, SmoothConfig(passes=5))
        assert second.moves_accepted == 0
