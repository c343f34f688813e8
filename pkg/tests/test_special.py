import math

import numpy as np
import pytest

from _support import ORACLE_LEVELS
from qcsmooth.criteria import criterion
from qcsmooth.errors import EmptyDomainError, UsageError
from qcsmooth.generators import random_star_polygon, random_tri_patch
from qcsmooth.geometry import ConvexRegion, box_halfspaces
from qcsmooth.mesh import patch_from_polygon
from qcsmooth.qcp import grid_oracle
from qcsmooth.special import (DISK, DISK_COMPLEMENT, HALFPLANE, _Arrangement,
                              _threshold_constraints, angle_constraints,
                              circumradius_constraints, enumerate_candidates,
                              minmax_angle_place, minmax_circumradius_place,
                              projected_subgradient_norm, special_place, weber_place,
                              weber_point)

SQUARE = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
EQUILATERAL = [(math.cos(a), math.sin(a)) for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
SPIRAL = [(0, 0), (6, 0), (6, 6), (1, 6), (1, 2), (4, 2), (4, 4), (3, 4), (3, 3),
          (2, 3), (2, 5), (5, 5), (5, 1), (0, 1)]


def program(patch, name):
    return patch.program([criterion(name)])


# -- threshold constraints -------------------------------------------------------

def test_angle_constraints_match_angles():
    rng = np.random.default_rng(1)
    a, b = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    for theta in (1.2, 1.6, 2.5):
        cons = angle_constraints(a, b, theta)
        assert [c.kind for c in cons] == [DISK_COMPLEMENT, HALFPLANE, HALFPLANE]
        for x in rng.uniform([-1, 0.01], [2, 2], (400, 2)):
            P = np.array([x, a, b])
            ang = []
            for k in range(3):
                u, v = P[(k + 1) % 3] - P[k], P[(k + 2) % 3] - P[k]
                ang.append(math.acos(np.clip(u @ v / np.linalg.norm(u) / np.linalg.norm(v), -1, 1)))
            inside = all(c.contains(x, tol=0.0) for c in cons)
            if abs(max(ang) - theta) > 1e-9:
                assert inside == (max(ang) <= theta)


def test_angle_pi_is_always_feasible():
    assert angle_constraints((0, 0), (1, 0), math.pi) == []


def test_circumradius_constraints():
    assert circumradius_constraints((0, 0), (2, 0), 0.99) is None
    cons = circumradius_constraints((0, 0), (2, 0), 1.0)
    assert [c.kind for c in cons] == [DISK, DISK_COMPLEMENT]
    # on the diametral circle the circumradius is half the edge
    x = np.array([1.0, 1.0])
    assert all(c.contains(x) for c in cons)
    cons = circumradius_constraints((0, 0), (2, 0), 2.0)
    assert cons[0].at(3.0).geometry.radius == 3.0


# -- examples -----------------------------------------------------------------------

def test_square_max_angle():
    patch = patch_from_polygon(SQUARE, "tri")
    x, theta = minmax_angle_place(patch)
    assert np.allclose(x, 0.0, atol=1e-6)
    assert theta == pytest.approx(math.pi / 2, abs=1e-9)
    ref = grid_oracle(program(patch, "max-angle"), levels=ORACLE_LEVELS)
    assert ref.t >= theta - 1e-9 and ref.t - theta <= 1e-3


def test_equilateral_max_angle():
    patch = patch_from_polygon(EQUILATERAL, "tri")
    x, theta = minmax_angle_place(patch)
    assert np.allclose(x, 0.0, atol=1e-6)
    assert theta == pytest.approx(2 * math.pi / 3, abs=1e-9)
    ref = grid_oracle(program(patch, "max-angle"), levels=ORACLE_LEVELS)
    assert abs(ref.t - theta) <= 1e-3


def test_square_circumradius():
    patch = patch_from_polygon(SQUARE, "tri")
    x, rho = minmax_circumradius_place(patch)
    assert np.allclose(x, 0.0, atol=1e-6)
    # right isoceles triangle with legs sqrt(2): half the hypotenuse
    assert rho == pytest.approx(1.0, abs=1e-9)
    ref = grid_oracle(program(patch, "circumradius"), levels=ORACLE_LEVELS)
    assert abs(ref.t - rho) <= 1e-3


def test_one_element_circumradius():
    from qcsmooth.criteria import ElementStencil
    from qcsmooth.mesh import patch_from_stencils
    patch = patch_from_stencils([ElementStencil(np.array([(0.0, 0.0), (2.0, 0.0)]), "tri")])
    x, rho = minmax_circumradius_place(patch)
    assert rho == pytest.approx(1.0, abs=1e-8)
    ref = grid_oracle(program(patch, "circumradius"), levels=ORACLE_LEVELS)
    assert abs(ref.t - rho) <= 1e-3


def test_right_triangle_circumradius_is_half_longest_edge():
    from qcsmooth.criteria import CostTerm, ElementStencil, patch_cost
    stencil = ElementStencil(np.array([(0.0, 0.0), (2.0, 0.0)]), "tri")
    term = CostTerm(criterion("circumradius"), stencil)
    assert patch_cost([term], (1.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_bad_tolerances():
    patch = patch_from_polygon(SQUARE, "tri")
    for tol in (0.0, -1e-3):
        with pytest.raises(UsageError):
            minmax_angle_place(patch, tol)
        with pytest.raises(UsageError):
            minmax_circumradius_place(patch, tol)


def test_empty_kernel():
    with pytest.raises(EmptyDomainError):
        minmax_angle_place(patch_from_polygon(SPIRAL, "tri"))


def test_special_place_routes():
    patch = patch_from_polygon(SQUARE, "tri")
    x, t = special_place(program(patch, "max-angle"))
    assert t == pytest.approx(math.pi / 2, abs=1e-9)
    with pytest.raises(UsageError):
        special_place(program(patch, "min-angle"))


# -- invariants -----------------------------------------------------------------------

def test_candidates_lie_on_their_constraints():
    rng = np.random.default_rng(8)
    for _ in range(40):
        patch = patch_from_polygon(random_star_polygon(rng, int(rng.integers(3, 9))), "tri")
        for name in ("max-angle", "circumradius"):
            prog = program(patch, name)
            t = float(rng.uniform(1.0, 1.5)) * (2.0 if name == "max-angle" else 1.0)
            cons = _threshold_constraints(prog, t)
            if cons is None:
                continue
            cons = list(_Arrangement(prog).kernel) + cons
            pts, ids = enumerate_candidates(cons)
            for p, pair in zip(pts, ids):
                for k in set(pair.tolist()):
                    assert abs(cons[k].slack(p)) <= 1e-10


@pytest.mark.parametrize("name,place", [("max-angle", minmax_angle_place),
                                        ("circumradius", minmax_circumradius_place)])
def test_binary_search_soundness(name, place):
    rng = np.random.default_rng(31)
    for _ in range(50):
        patch = random_tri_patch(rng)
        prog = program(patch, name)
        arr = _Arrangement(prog)
        x, t_star = place(patch)
        # accepted thresholds: the witness satisfies every constraint
        for t in (t_star, t_star + 1e-3, t_star + 0.1):
            found = arr.witness(t)
            assert found is not None
            cand, _ = found
            cons = arr.kernel + _threshold_constraints(prog, t)
            assert all(c.contains(cand.location, tol=1e-9) for c in cons)
        # rejected thresholds: the oracle finds nothing that good either
        ref = grid_oracle(prog, levels=ORACLE_LEVELS)
        for delta in (1e-3, 1e-2, 1e-1):
            t = t_star - delta
            assert arr.witness(t) is None
            assert ref.t > t


@pytest.mark.parametrize("name,place", [("max-angle", minmax_angle_place),
                                        ("circumradius", minmax_circumradius_place)])
def test_candidate_completeness(name, place):
    rng = np.random.default_rng(5)
    tol = 1e-9
    for _ in range(100):
        patch = patch_from_polygon(random_star_polygon(rng, int(rng.integers(3, 7))), "tri")
        x, t = place(patch, tol)
        ref = grid_oracle(program(patch, name), levels=ORACLE_LEVELS)
        # nothing on the grid beats the enumeration optimum by more than tol
        assert t <= ref.t + tol * max(1.0, abs(t))
        assert abs(t - ref.t) <= max(1e-3, 1e-3 * abs(ref.t))


# -- Fermat-Weber ----------------------------------------------------------------------

def test_weber_examples():
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    box = ConvexRegion(box_halfspaces([0, 0], [1, 1]), 2)
    x, _ = weber_point(corners, box)
    assert np.allclose(x, (0.5, 0.5), atol=1e-9)
    x, _ = weber_point(EQUILATERAL)
    assert np.allclose(x, 0.0, atol=1e-9)
    x, _ = weber_point([(0, 0), (1, 0), (2, 0)])
    assert np.allclose(x, (1.0, 0.0), atol=1e-12)


def test_weber_place_on_patch():
    assert np.allclose(weber_place(patch_from_polygon(SQUARE, "tri")), 0.0, atol=1e-9)
    with pytest.raises(EmptyDomainError):
        weber_place(patch_from_polygon(SPIRAL, "tri"))


def test_weber_constrained_optimum_on_boundary():
    # unconstrained optimum (1, 0) lies outside the region x >= 1.5
    box = ConvexRegion(box_halfspaces([1.5, -1], [3, 1]), 2)
    x, _ = weber_point([(0, 0), (1, 0), (2, 0)], box)
    assert np.allclose(x, (1.5, 0.0), atol=1e-9)


def test_weber_descent_and_stationarity():
    rng = np.random.default_rng(0)
    tol = 1e-10
    for k in range(300):
        V = rng.normal(size=(int(rng.integers(3, 9)), 2))
        region = None
        if k % 2:
            lo, hi = V.min(axis=0), V.max(axis=0)
            region = ConvexRegion(box_halfspaces(lo + 0.3 * (hi - lo), hi - 0.1 * (hi - lo)), 2)
        x, trace = weber_point(V, region, tol=tol)
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert projected_subgradient_norm(x, V, region) <= tol
        if region is not None:
            assert region.contains(x)
