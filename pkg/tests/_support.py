"""Random stencils and sampling helpers shared by the test modules."""

import numpy as np

from qcsmooth.criteria import CostTerm, ElementStencil, criterion, quad_domain_constraints
from qcsmooth.geometry import ConvexRegion, Halfspace, orient2d, orient3d
from qcsmooth.kernels import eval_costs
from qcsmooth.criteria import pack_terms

DIM = {"tri": 2, "quad": 2, "tet": 3}
# refinement depth for oracle cross-checks; deeper than the default so
# kinked 3-d optima are resolved to well under the comparison tolerance
ORACLE_LEVELS = 8


def random_stencil(rng, kind):
    """A well-shaped random stencil of the given element kind."""
    while True:
        if kind == "tri":
            F = rng.uniform(-1, 1, (2, 2))
            if np.linalg.norm(F[1] - F[0]) > 0.2:
                return ElementStencil(F, "tri")
        elif kind == "quad":
            ang = np.sort(rng.uniform(0, 2 * np.pi, 4))
            gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
            if gaps.min() < 0.3 or gaps.max() > 0.9 * np.pi:
                continue
            r = rng.uniform(0.6, 1.4, 4)
            P = np.stack([r * np.cos(ang), r * np.sin(ang)], 1)
            if all(orient2d(P[i - 1], P[i], P[(i + 1) % 4]) > 0.05 for i in range(4)):
                return ElementStencil(P[1:], "quad")
        else:
            F = rng.normal(size=(3, 3))
            n = np.cross(F[1] - F[0], F[2] - F[0])
            if np.linalg.norm(n) > 0.3:
                return ElementStencil(F, "tet")


def stencil_region(stencil):
    """Domain of a single element: its kernel constraint(s)."""
    F = stencil.fixed_vertices
    if stencil.element_kind == "tri":
        return ConvexRegion([Halfspace.left_of(F[0], F[1])], 2)
    if stencil.element_kind == "quad":
        return ConvexRegion(quad_domain_constraints(stencil), 2)
    return ConvexRegion([Halfspace.positive_side(*F)], 3)


def sample_region(rng, region, n, center, radius):
    """``n`` points of ``region`` inside a box around ``center`` (rejection)."""
    A, b = region.matrix()
    out = []
    while sum(len(o) for o in out) < n:
        X = center + rng.uniform(-radius, radius, (4 * n, len(center)))
        out.append(X[np.all(X @ A.T < b - 1e-9, axis=1)])
    return np.concatenate(out)[:n]


def quasiconvexity_violations(name, kind, n_stencils, n_segments, rng, rtol=1e-9):
    """Count segment samples breaking ``c(z) <= max(c(x), c(y))``.

    Returns ``(violations, checked, worst excess)``.
    """
    crit = criterion(name)
    bad, checked, worst = 0, 0, 0.0
    for _ in range(n_stencils):
        st = random_stencil(rng, kind)
        codes, w, fixed = pack_terms([CostTerm(crit, st)])
        region = stencil_region(st)
        center = st.fixed_vertices.mean(axis=0)
        X = sample_region(rng, region, n_segments, center, 2.5)
        Y = sample_region(rng, region, n_segments, center, 2.5)
        t = rng.uniform(0, 1, (n_segments, 1))
        Z = t * X + (1 - t) * Y
        cx = eval_costs(codes, w, fixed, X)
        cy = eval_costs(codes, w, fixed, Y)
        cz = eval_costs(codes, w, fixed, Z)
        m = np.maximum(cx, cy)
        fin = np.isfinite(m)
        excess = cz[fin] - m[fin] - rtol * np.maximum(1.0, np.abs(m[fin]))
        checked += int(fin.sum())
        bad += int(np.sum(excess > 0))
        if excess.size:
            worst = max(worst, float(np.max(excess)))
    return bad, checked, worst


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    """Log one acceptance criterion outcome; printed in the terminal summary."""
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
