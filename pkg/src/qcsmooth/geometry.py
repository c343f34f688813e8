"""Geometric primitives: element measures, enclosing balls, solid and
dihedral angles, halfspace intersections and star-polygon kernels.

Points are plain numpy arrays of length 2 or 3. Orientation tests use a
relative epsilon of ``ORIENT_EPS`` times the squared (or cubed) input
magnitude; exact arithmetic is not attempted.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from ._pykernels import meb_batch, solid_angle_batch

ORIENT_EPS = 1e-12


def as_point(p, dim=None):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] not in (2, 3):
        raise ValueError(f"points must have 2 or 3 coordinates, got {p.shape[0]}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"expected a {dim}-d point, got {p.shape[0]}-d")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    return p


def orient2d(a, b, c):
    """Twice the signed area of ``abc``; positive when counterclockwise."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def orient3d(a, b, c, d):
    """Six times the signed volume of ``abcd``: ``(b-a) . ((c-a) x (d-a))``."""
    return float(np.dot(b - a, np.cross(c - a, d - a)))


def is_ccw(a, b, c, eps=ORIENT_EPS):
    scale = max(np.sum((b - a) ** 2), np.sum((c - a) ** 2), np.sum((c - b) ** 2))
    return orient2d(a, b, c) > eps * scale


def is_positive_tet(a, b, c, d, eps=ORIENT_EPS):
    scale = max(np.sum((p - q) ** 2) for p, q in combinations((a, b, c, d), 2))
    return orient3d(a, b, c, d) > eps * scale ** 1.5


# ----------------------------------------------------------------------------
# triangle measures
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleMeasures:
    signed_area: float
    edge_lengths: tuple  # opposite a, b, c
    angles: tuple        # at a, b, c
    altitudes: tuple     # from a, b, c
    perimeter: float
    circumradius: float
    inradius: float
    diameter: float

    @property
    def degenerate(self):
        return self.signed_area == 0.0 or not np.isfinite(self.circumradius)


def triangle_measures(a, b, c):
    """Raw measures of triangle ``abc``.

    Planar input gives a signed area (positive counterclockwise); points in
    3-space give the unsigned area. A zero-area triangle reports angles
    containing 0 and pi, zero inradius and an infinite circumradius.
    """
    a, b, c = as_point(a), as_point(b), as_point(c)
    if not (a.shape == b.shape == c.shape):
        raise ValueError("triangle vertices must share a dimension")
    la = float(np.linalg.norm(c - b))
    lb = float(np.linalg.norm(a - c))
    lc = float(np.linalg.norm(b - a))
    if a.shape[0] == 2:
        twice = float(orient2d(a, b, c))
    else:
        twice = float(np.linalg.norm(np.cross(b - a, c - a)))
    s = 0.5 * (la + lb + lc)
    area = 0.5 * twice
    mag = abs(twice)
    if mag <= ORIENT_EPS * max(la, lb, lc) ** 2:
        area = 0.0
        mag = 0.0

    def angle(u, v):
        # atan2 keeps precision near 0 and pi
        if mag == 0.0:
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu == 0 or nv == 0:
                return 0.0
            return 0.0 if np.dot(u, v) > 0 else np.pi
        return float(np.arctan2(mag, np.dot(u, v)))

    angles = (angle(b - a, c - a), angle(c - b, a - b), angle(a - c, b - c))
    if mag == 0.0 and sum(angles) < np.pi:
        # collinear: the middle vertex carries the straight angle
        mid = int(np.argmax((la, lb, lc)))
        angles = tuple(np.pi if i == mid else 0.0 for i in range(3))
    alt = tuple(mag / L if L > 0 else 0.0 for L in (la, lb, lc))
    circ = la * lb * lc / (2.0 * mag) if mag > 0 else np.inf
    inr = abs(area) / s if s > 0 else 0.0
    return TriangleMeasures(
        signed_area=area,
        edge_lengths=(la, lb, lc),
        angles=angles,
        altitudes=alt,
        perimeter=2.0 * s,
        circumradius=circ,
        inradius=inr,
        diameter=max(la, lb, lc),
    )


# ----------------------------------------------------------------------------
# balls and angles
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, p, rtol=1e-12):
        return float(np.linalg.norm(np.asarray(p) - self.center)) <= self.radius * (1 + rtol) + 1e-300


def min_enclosing_ball(points):
    """Smallest ball containing one to four points (duplicates allowed)."""
    pts = np.array([as_point(p) for p in points])
    if not 1 <= len(pts) <= 4:
        raise ValueError("min_enclosing_ball takes between 1 and 4 points")
    if len({p.shape[0] for p in pts}) != 1:
        raise ValueError("points must share a dimension")
    center, radius = meb_batch(pts[None])
    return Ball(center=center[0], radius=float(radius[0]))


def solid_angle(origin, a, b, c):
    """Solid angle (steradians) at ``origin`` subtended by triangle ``abc``.

    Uses the two-argument arctangent of triple product and the
    unit-vector denominator, so results lie in ``[0, 2*pi]`` and do not
    depend on vertex order.
    """
    o, a, b, c = (as_point(p, 3) for p in (origin, a, b, c))
    for p in (a, b, c):
        if np.linalg.norm(p - o) == 0.0:
            raise ValueError("solid angle undefined for a zero direction vector")
    return float(solid_angle_batch(o, a, b, c))


def dihedral_angle(p, q, r, s):
    """Angle along axis ``pq`` between faces ``pqr`` and ``pqs``, in (0, pi]."""
    p, q, r, s = (as_point(v, 3) for v in (p, q, r, s))
    e = q - p
    ne = np.linalg.norm(e)
    if ne == 0.0:
        raise ValueError("degenerate dihedral axis")
    n1 = np.cross(e, r - p)
    n2 = np.cross(e, s - p)
    for n, v in ((n1, r), (n2, s)):
        if np.linalg.norm(n) <= ORIENT_EPS * ne * max(np.linalg.norm(v - p), ne):
            raise ValueError("face point lies on the dihedral axis")
    return float(np.arctan2(np.linalg.norm(np.cross(n1, n2)), np.dot(n1, n2)))


# ----------------------------------------------------------------------------
# halfspaces and convex regions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Halfspace:
    """The set ``{p : normal . p <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(-1)
        if not np.linalg.norm(n) > 0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def violation(self, p):
        """Signed excess ``normal . p - offset`` scaled to unit normal."""
        return (np.dot(self.normal, p) - self.offset) / np.linalg.norm(self.normal)

    def contains(self, p, slack=1e-9):
        return self.violation(p) <= slack

    @classmethod
    def left_of(cls, a, b):
        """Closed halfplane to the left of the directed line ``a -> b``."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        e = b - a
        n = np.array([e[1], -e[0]])
        return cls(n, float(n @ a))

    @classmethod
    def positive_side(cls, a, b, c):
        """Points ``x`` with ``orient3d(x, a, b, c) >= 0``."""
        a, b, c = (np.asarray(v, float) for v in (a, b, c))
        n = np.cross(b - a, c - a)
        return cls(n, float(n @ a))


@dataclass(frozen=True)
class ConvexRegion:
    halfspaces: tuple
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        for h in self.halfspaces:
            if h.normal.shape[0] != self.dimension:
                raise ValueError("halfspace dimension mismatch")

    def matrix(self, normalize=True):
        """``(A, b)`` with ``A x <= b``; rows scaled to unit normals."""
        if not self.halfspaces:
            return np.zeros((0, self.dimension)), np.zeros(0)
        A = np.array([h.normal for h in self.halfspaces])
        b = np.array([h.offset for h in self.halfspaces])
        if normalize:
            s = np.linalg.norm(A, axis=1)
            A, b = A / s[:, None], b / s
        return A, b

    def contains(self, p, slack=1e-9):
        A, b = self.matrix()
        return bool(np.all(A @ np.asarray(p, float) <= b + slack))

    def intersect(self, other):
        if isinstance(other, ConvexRegion):
            other = other.halfspaces
        return ConvexRegion(self.halfspaces + tuple(other), self.dimension)


def box_halfspaces(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    out = []
    for k in range(lo.shape[0]):
        e = np.zeros(lo.shape[0])
        e[k] = 1.0
        out.append(Halfspace(e, hi[k]))
        out.append(Halfspace(-e, -lo[k]))
    return out


def bounding_box_region(points, factor=10.0):
    """Axis box centred on the points' bounding box, ``factor`` times its extent."""
    pts = np.asarray(points, float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    mid = 0.5 * (lo + hi)
    half = 0.5 * factor * max(float(np.max(hi - lo)), 1e-300)
    return box_halfspaces(mid - half, mid + half)


@dataclass
class Polytope:
    vertices: np.ndarray
    empty: bool = False
    unbounded: bool = False
    certificate: tuple = ()
    rays: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def solve_lp(c, A_ub, b_ub, bounds):
    """``scipy.optimize.linprog`` with HiGHS, retrying with interior point
    when the simplex run ends in numerical trouble (status 4)."""
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 4:
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs-ipm")
    return res


def _feasible(A, b):
    if A.shape[0] == 0:
        return True
    res = solve_lp(np.zeros(A.shape[1]), A, b, [(None, None)] * A.shape[1])
    return res.status == 0


def _irreducible_infeasible(A, b):
    """Deletion filter: a minimal infeasible subset (Helly: at most d+1)."""
    keep = list(range(A.shape[0]))
    for i in list(keep):
        trial = [j for j in keep if j != i]
        if not _feasible(A[trial], b[trial]):
            keep = trial
    return tuple(keep)


def _recession_rays(A, d, tol=1e-12):
    rays = []
    cands = [np.eye(d)[k] * s for k in range(d) for s in (1, -1)]
    for sub in combinations(range(A.shape[0]), d - 1):
        M = A[list(sub)]
        _, sv, vt = np.linalg.svd(np.vstack([M, np.zeros((1, d))]))
        r = vt[-1]
        if d - 1 > 0 and sv[d - 2] <= tol:
            continue
        cands.extend((r, -r))
    for r in cands:
        r = r / np.linalg.norm(r)
        if A.shape[0] == 0 or np.all(A @ r <= tol):
            if not any(np.allclose(r, q) for q in rays):
                rays.append(r)
    return np.array(rays)


def _is_unbounded(A, d):
    if A.shape[0] == 0:
        return True
    for k in range(d):
        for s in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = -s
            res = solve_lp(c, A, np.zeros(A.shape[0]), [(-1, 1)] * d)
            if res.status == 0 and -res.fun > 1e-10:
                return True
    return False


def _enumerate_vertices(A, b, slack):
    m, d = A.shape
    if m < d:
        return np.zeros((0, d))
    subs = np.array(list(combinations(range(m), d)))
    M = A[subs]
    rhs = b[subs]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return np.zeros((0, d))
    pts = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    feas = np.all(pts @ A.T <= b + slack, axis=1)
    pts = pts[feas]
    if len(pts) == 0:
        return pts
    scale = max(1.0, float(np.max(np.abs(pts))))
    keyed = np.round(pts / (scale * 1e-9)).astype(np.int64)
    _, first = np.unique(keyed, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    if d == 2 and len(pts) > 2:
        ctr = pts.mean(axis=0)
        ang = np.arctan2(pts[:, 1] - ctr[1], pts[:, 0] - ctr[0])
        pts = pts[np.argsort(ang, kind="stable")]
    return pts + 0.0  # drop negative zeros


def halfspace_intersection(region, slack=1e-9):
    """Vertices of the intersection of a region's halfspaces.

    Empty regions carry a certificate: indices of an infeasible subsystem of
    at most ``d + 1`` halfspaces. Unbounded regions are flagged and their
    recession directions returned in ``rays``; planar vertices come back in
    counterclockwise order.
    """
    A, b = region.matrix()
    d = region.dimension
    if not _feasible(A, b):
        return Polytope(np.zeros((0, d)), empty=True, certificate=_irreducible_infeasible(A, b))
    verts = _enumerate_vertices(A, b, slack)
    if _is_unbounded(A, d):
        return Polytope(verts, unbounded=True, rays=_recession_rays(A, d))
    return Polytope(verts)


def chebyshev_center(region, max_radius=None):
    """Deepest point of a region: ``(center, radius)``; radius < 0 when empty.

    The radius is capped at ``max_radius`` (default ``1e6 * (1 + max|b|)``)
    so unbounded regions still return a point.
    """
    A, b = region.matrix()
    d = region.dimension
    if A.shape[0] == 0:
        return np.zeros(d), np.inf
    if max_radius is None:
        max_radius = 1e6 * (1.0 + float(np.max(np.abs(b))))
    c = np.zeros(d + 1)
    c[-1] = -1.0
    Aub = np.hstack([A, np.ones((A.shape[0], 1))])
    bounds = [(None, None)] * d + [(None, max_radius)]
    res = solve_lp(c, Aub, b, bounds)
    if res.status != 0:
        return np.full(d, np.nan), -np.inf
    return res.x[:d], float(res.x[d])


def project_onto_region(p, region, slack=0.0):
    """Euclidean projection of ``p`` onto a bounded or unbounded region.

    Enumerates active sets of size at most ``d``: the projection lies on a
    face cut out by that many independent constraints.
    """
    p = np.asarray(p, float)
    A, b = region.matrix()
    if A.shape[0] == 0 or np.all(A @ p <= b + slack):
        return p.copy()
    m, d = A.shape
    best, best_dist = None, np.inf
    tol = 1e-10 * max(1.0, float(np.max(np.abs(b))))
    for size in range(1, min(d, m) + 1):
        subs = np.array(list(combinations(range(m), size)))
        As = A[subs]
        r = np.einsum("kij,j->ki", As, p) - b[subs]
        G = np.einsum("kid,kjd->kij", As, As)
        det = np.linalg.det(G)
        ok = np.abs(det) > 1e-12
        if not np.any(ok):
            continue
        lam = np.linalg.solve(G[ok], r[ok][..., None])[..., 0]
        cand = p - np.einsum("ki,kid->kd", lam, As[ok])
        good = np.all(lam >= -1e-12, axis=1) & np.all(cand @ A.T <= b + tol, axis=1)
        if np.any(good):
            cand = cand[good]
            dist = np.linalg.norm(cand - p, axis=1)
            k = int(np.argmin(dist))
            if dist[k] < best_dist:
                best, best_dist = cand[k], dist[k]
    if best is None:
        raise ValueError("cannot project onto an empty region")
    return best


def star_kernel(polygon):
    """Kernel of a counterclockwise simple polygon as a region.

    The kernel is the intersection of the inward (left) halfplanes of all
    edges; it may be empty.
    """
    pts = np.array([as_point(p, 2) for p in polygon])
    n = len(pts)
    if n < 3:
        raise ValueError("polygon needs at least three vertices")
    hs = [Halfspace.left_of(pts[i], pts[(i + 1) % n]) for i in range(n)]
    return ConvexRegion(hs, 2)


def segments_cross(p, q, a, b, eps=1e-12):
    """True when open segment ``pq`` properly crosses segment ``ab``."""
    d1 = orient2d(a, b, p)
    d2 = orient2d(a, b, q)
    d3 = orient2d(p, q, a)
    d4 = orient2d(p, q, b)
    scale = eps * max(np.sum((q - p) ** 2), np.sum((b - a) ** 2))
    return ((d1 > scale and d2 < -scale) or (d1 < -scale and d2 > scale)) and \
        ((d3 > scale and d4 < -scale) or (d3 < -scale and d4 > scale))


def sees_all_vertices(point, polygon):
    """Visibility check: no polygon edge blocks the segment to any vertex."""
    pts = np.asarray(polygon, float)
    n = len(pts)
    for v in pts:
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            if segments_cross(point, v, a, b):
                return False
    return True
