"""Seeded generators for test fixtures: random star patches, perturbed grid
meshes and a sliver tetrahedron patch."""

import numpy as np
from scipy.spatial import ConvexHull

from .geometry import orient3d
from .mesh import Mesh, patch_from_faces, patch_from_polygon


def random_star_polygon(rng, n, rmin=0.5, rmax=1.5):
    """Counterclockwise polygon star-shaped about the origin.

    Angular gaps stay below pi, so the origin sees every edge from the left.
    """
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
        if gaps.max() < 0.9 * np.pi and gaps.min() > 0.05:
            break
    r = rng.uniform(rmin, rmax, n)
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def random_tri_patch(rng, nmin=5, nmax=12):
    return patch_from_polygon(random_star_polygon(rng, int(rng.integers(nmin, nmax + 1))), "tri")


def random_quad_patch(rng, kmin=3, kmax=6, min_depth=0.02):
    """Quad star with ``k`` elements whose placement domain is nonempty."""
    while True:
        k = int(rng.integers(kmin, kmax + 1))
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
        if gaps.max() >= 0.9 * np.pi or gaps.min() < 0.3:
            continue
        mids = ang + 0.5 * gaps + rng.uniform(-0.15, 0.15, k) * gaps
        pts = []
        for a, m in zip(ang, mids):
            r1, r2 = rng.uniform(0.6, 1.2), rng.uniform(1.0, 1.6)
            pts.append([r1 * np.cos(a), r1 * np.sin(a)])
            pts.append([r2 * np.cos(m), r2 * np.sin(m)])
        try:
            patch = patch_from_polygon(np.array(pts), "quad")
        except ValueError:
            continue
        from .geometry import chebyshev_center
        _, depth = chebyshev_center(patch.domain)
        if depth > min_depth:
            return patch


def random_tet_patch(rng, nmin=5, nmax=12, rmin=0.7, rmax=1.3):
    """Star-shaped polyhedral patch about the origin with ``n`` boundary vertices."""
    while True:
        n = int(rng.integers(nmin, nmax + 1))
        u = rng.normal(size=(n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        try:
            hull = ConvexHull(u)
        except Exception:
            continue
        if len(hull.vertices) != n:
            continue
        P = u * rng.uniform(rmin, rmax, (n, 1))
        faces = []
        ok = True
        for f in hull.simplices:
            a, b, c = P[f]
            o = orient3d(np.zeros(3), a, b, c)
            if abs(o) < 1e-3:
                ok = False
                break
            faces.append(tuple(f) if o > 0 else (f[0], f[2], f[1]))
        if ok:
            return patch_from_faces(P, faces)


def random_patch(rng, kind):
    return {"tri": random_tri_patch, "quad": random_quad_patch, "tet": random_tet_patch}[kind](rng)


def grid_mesh(n=10, spacing=1.0, noise=0.0, seed=0):
    """``n x n`` squares split by consistent diagonals into triangles.

    Interior vertices are perturbed by uniform noise in
    ``[-noise, noise] * spacing`` per coordinate.
    """
    rng = np.random.default_rng(seed)
    xs = np.arange(n + 1) * spacing
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = lambda i, j: j * (n + 1) + i
    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    mesh = Mesh(pts, tris, "tri")
    if noise:
        interior = ~mesh.fixed
        pts = mesh.points
        pts[interior] += rng.uniform(-noise, noise, (int(interior.sum()), 2)) * spacing
    return mesh


def sliver_patch(height=0.02):
    """Tet patch whose apex sits just above a square, forming a sliver.

    The square ``(0,0,0), (1,0,0), (1,1,0), (0,1,0)`` is flattened into the
    tet ``(x, p0, p1, p2)`` with ``x`` close to the fourth corner; the rest
    of the star is a cone over the hull of the square's corners and a few
    points above it. Returns ``(patch, before)`` where ``before`` is the
    minimum solid angle over all corners of the incident tets.
    """
    from .criteria import element_quality
    x = np.array([0.0, 1.0, height])
    p0, p1, p2 = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([1.0, 1, 0])
    q = np.array([0.0, 1.2, 0.01])
    tops = np.array([[0.1, 0.2, 1.0], [0.9, 0.3, 1.1], [0.6, 1.0, 0.9], [-0.2, 1.0, 0.8]])
    P = np.vstack([p0, p1, p2, q, tops])
    hull = ConvexHull(P)
    faces = []
    for f in hull.simplices:
        a, b, c = P[f]
        o = orient3d(x, a, b, c)
        faces.append(tuple(f) if o > 0 else (f[0], f[2], f[1]))
    patch = patch_from_faces(P, faces, position=x)
    elems = np.array([[x, *patch_stencil] for patch_stencil in (s.fixed_vertices for s in patch.stencils)])
    before = float(np.min(element_quality("solid-angle-interior", elems, "tet")))
    return patch, before
