"""Placement for criteria whose feasible regions are not convex.

For the largest angle and the circumradius of triangles, each element's
region ``{x : q(x) <= t}`` is cut out by halfplanes, disks and disk
complements whose geometry depends monotonically on ``t``. The optimal
threshold is found by binary search; at each threshold feasibility is
decided by enumerating the vertices of the line/circle arrangement, since
a nonempty bounded region of that kind always has one on its boundary.

The kernel-constrained Fermat-Weber point is computed by projected
Weiszfeld iteration.
"""

from dataclasses import dataclass, replace

import numpy as np

from .criteria import CostTerm, criterion
from .errors import EmptyDomainError, UsageError
from .geometry import Ball, Halfspace, chebyshev_center, project_onto_region
from .qcp import DOMAIN_SLACK, QuasiconvexProgram, grid_oracle

HALFPLANE = "halfplane"
DISK = "disk"
DISK_COMPLEMENT = "disk_complement"

ARRANGEMENT_KINDS = ("max-angle", "circumradius")


@dataclass(frozen=True)
class CircleLineConstraint:
    """One constraint of a threshold region.

    ``parameter_map`` rebuilds the geometry for another threshold; it is
    ``None`` for constraints that do not depend on the threshold.
    """

    kind: str
    geometry: object
    parameter_map: object = None

    def at(self, t):
        if self.parameter_map is None:
            return self
        return self.parameter_map(t)

    def slack(self, p):
        """Signed margin: nonnegative inside the constraint."""
        p = np.asarray(p, float)
        if self.kind == HALFPLANE:
            return -self.geometry.violation(p)
        dist = float(np.linalg.norm(p - self.geometry.center))
        if self.kind == DISK:
            return self.geometry.radius - dist
        return dist - self.geometry.radius

    def contains(self, p, tol=1e-9):
        return self.slack(p) >= -tol


@dataclass(frozen=True)
class CandidatePoint:
    location: np.ndarray
    defining_constraints: tuple


def _rot(v, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _with_maps(cons, builder):
    return [replace(c, parameter_map=lambda t, k=k: builder(t)[k]) for k, c in enumerate(cons)]


def angle_constraints(a, b, theta):
    """Constraints for ``max angle of (x, a, b) <= theta`` with ``x`` left of ``ab``.

    Empty when ``theta >= pi``.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    if theta >= np.pi:
        return []
    e = b - a
    L = float(np.linalg.norm(e))
    u = e / L
    n = np.array([-u[1], u[0]])
    # angle at x: outside the circle through a, b seeing ab under theta
    R = L / (2.0 * np.sin(theta))
    center = 0.5 * (a + b) + n * (L / (2.0 * np.tan(theta)))
    # angle at a: between ray ab and ray a + rot(u, theta)
    w = _rot(u, theta)
    na = np.array([-w[1], w[0]])
    # angle at b: between ray ba and ray b + rot(-u, -theta)
    w = _rot(-u, -theta)
    nb = np.array([w[1], -w[0]])
    cons = [CircleLineConstraint(DISK_COMPLEMENT, Ball(center, R)),
            CircleLineConstraint(HALFPLANE, Halfspace(na, float(na @ a))),
            CircleLineConstraint(HALFPLANE, Halfspace(nb, float(nb @ b)))]
    return _with_maps(cons, lambda t: angle_constraints(a, b, t))


def circumradius_constraints(a, b, rho):
    """Constraints for ``circumradius of (x, a, b) <= rho``; ``None`` if impossible."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    e = b - a
    L = float(np.linalg.norm(e))
    if rho < 0.5 * L:
        return None
    n = np.array([-e[1], e[0]]) / L
    h = np.sqrt(max(rho * rho - 0.25 * L * L, 0.0))
    m = 0.5 * (a + b)
    cons = [CircleLineConstraint(DISK, Ball(m + h * n, rho)),
            CircleLineConstraint(DISK_COMPLEMENT, Ball(m - h * n, rho))]
    return _with_maps(cons, lambda r: circumradius_constraints(a, b, r))


# ----------------------------------------------------------------------------
# arrangement vertices
# ----------------------------------------------------------------------------

def _line_line(N, c):
    i, j = np.triu_indices(len(c), 1)
    det = N[i, 0] * N[j, 1] - N[i, 1] * N[j, 0]
    ok = np.abs(det) > 1e-14
    i, j = i[ok], j[ok]
    if len(i) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2), int)
    # pivoted LU keeps the residual small for nearly parallel pairs
    M = np.stack([N[i], N[j]], axis=1)
    rhs = np.stack([c[i], c[j]], axis=1)[..., None]
    return np.linalg.solve(M, rhs)[..., 0], np.stack([i, j], axis=1)


def _line_circle(N, c, O, R):
    if len(c) == 0 or len(R) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2), int)
    i, j = np.meshgrid(np.arange(len(c)), np.arange(len(R)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    dist = c[i] - np.einsum("kd,kd->k", N[i], O[j])
    ok = np.abs(dist) <= R[j] * (1 + 1e-9)
    i, j, dist = i[ok], j[ok], dist[ok]
    foot = O[j] + dist[:, None] * N[i]
    half = np.sqrt(np.maximum(R[j] ** 2 - dist ** 2, 0.0))
    t = np.stack([-N[i, 1], N[i, 0]], axis=1)
    pts = np.concatenate([foot + half[:, None] * t, foot - half[:, None] * t])
    ids = np.concatenate([np.stack([i, j], axis=1)] * 2)
    return pts, ids


def _circle_circle(O, R):
    i, j = np.triu_indices(len(R), 1)
    D = O[j] - O[i]
    dd = np.linalg.norm(D, axis=1)
    ok = (dd > 1e-14) & (dd <= (R[i] + R[j]) * (1 + 1e-9)) & (dd >= np.abs(R[i] - R[j]) * (1 - 1e-9))
    i, j, D, dd = i[ok], j[ok], D[ok], dd[ok]
    a = (R[i] ** 2 - R[j] ** 2 + dd ** 2) / (2 * dd)
    h = np.sqrt(np.maximum(R[i] ** 2 - a ** 2, 0.0))
    u = D / dd[:, None]
    base = O[i] + a[:, None] * u
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    pts = np.concatenate([base + h[:, None] * perp, base - h[:, None] * perp])
    ids = np.concatenate([np.stack([i, j], axis=1)] * 2)
    return pts, ids


def enumerate_candidates(constraints):
    """Vertices of the arrangement of constraint boundaries.

    Includes pairwise line/circle intersections (tangencies included) and
    four extreme points of each circle, which cover regions bounded by a
    single full circle.
    """
    lines = [(k, c.geometry) for k, c in enumerate(constraints) if c.kind == HALFPLANE]
    circles = [(k, c.geometry) for k, c in enumerate(constraints) if c.kind != HALFPLANE]
    lk = np.array([k for k, _ in lines], dtype=int)
    ck = np.array([k for k, _ in circles], dtype=int)
    if lines:
        N = np.array([h.normal for _, h in lines])
        s = np.linalg.norm(N, axis=1)
        c = np.array([h.offset for _, h in lines]) / s
        N = N / s[:, None]
    else:
        N, c = np.zeros((0, 2)), np.zeros(0)
    O = np.array([g.center for _, g in circles]).reshape(-1, 2)
    R = np.array([g.radius for _, g in circles])
    blocks, ids = [], []

    def add(p, q, first, second):
        blocks.append(p)
        ids.append(np.stack([first[q[:, 0]], second[q[:, 1]]], axis=1) if len(q) else q)

    p, q = _line_line(N, c)
    add(p, q, lk, lk)
    p, q = _line_circle(N, c, O, R)
    add(p, q, lk, ck)
    p, q = _circle_circle(O, R)
    add(p, q, ck, ck)
    if len(R):
        E = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], float)
        blocks.append((O[:, None, :] + R[:, None, None] * E[None]).reshape(-1, 2))
        q = np.repeat(ck, 4)
        ids.append(np.stack([q, q], axis=1))
    pts = np.concatenate(blocks) if blocks else np.zeros((0, 2))
    idx = np.concatenate([i.reshape(-1, 2) for i in ids]).astype(int) if ids else np.zeros((0, 2), int)
    return pts, idx


# ----------------------------------------------------------------------------
# threshold search
# ----------------------------------------------------------------------------

def _check_patch(patch):
    if patch.element_kind != "tri" or patch.dimension != 2:
        raise UsageError("arrangement placement needs a planar triangle patch")


def _threshold_constraints(program, t):
    out = []
    for term in program.terms:
        a, b = term.stencil.fixed_vertices
        level = t / term.criterion.weight
        if term.criterion.kind == "max-angle":
            out.extend(angle_constraints(a, b, level))
        else:
            cons = circumradius_constraints(a, b, level)
            if cons is None:
                return None
            out.extend(cons)
    return out


class _Arrangement:
    """Feasibility oracle for ``{x in domain : cost(x) <= t}``."""

    def __init__(self, program):
        self.program = program
        self.kernel = [CircleLineConstraint(HALFPLANE, h) for h in program.domain.halfspaces]

    def witness(self, t):
        cons = _threshold_constraints(self.program, t)
        if cons is None:
            return None
        allc = self.kernel + cons
        pts, ids = enumerate_candidates(allc)
        if len(pts) == 0:
            return None
        A, b = self.program.A, self.program.b
        slack = DOMAIN_SLACK * self.program.scale
        inside = np.all(pts @ A.T <= b + slack, axis=1)
        pts, ids = pts[inside], ids[inside]
        if len(pts) == 0:
            return None
        cost = self.program.objective(np.ascontiguousarray(pts))
        ok = cost <= t + 1e-9 * max(1.0, abs(t))
        if not np.any(ok):
            return None
        cost, pts, ids = cost[ok], pts[ok], ids[ok]
        order = np.lexsort((pts[:, 1], pts[:, 0], cost))
        k = order[0]
        return CandidatePoint(pts[k], tuple(int(v) for v in ids[k])), float(cost[k])


def _lower_bound(program):
    lo = -np.inf
    for term in program.terms:
        a, b = term.stencil.fixed_vertices
        w = term.criterion.weight
        if term.criterion.kind == "max-angle":
            lo = max(lo, w * np.pi / 3.0)
        else:
            lo = max(lo, w * 0.5 * float(np.linalg.norm(b - a)))
    return lo


def arrangement_place(program, tol=1e-9, max_iter=60):
    """Minimize a mixture of max-angle and circumradius terms.

    Returns ``(point, value)``; ``value`` is the true objective at ``point``.
    """
    if tol <= 0:
        raise UsageError("tolerance must be positive")
    kinds = {t.criterion.kind for t in program.terms}
    if not kinds <= set(ARRANGEMENT_KINDS):
        raise UsageError(f"arrangement placement handles {ARRANGEMENT_KINDS} only")
    center, radius = chebyshev_center(program.domain)
    if not radius >= 0:
        raise EmptyDomainError("patch kernel is empty")
    oracle = _Arrangement(program)
    best_x = center
    hi = program.objective(center)
    lo = _lower_bound(program)
    if not np.isfinite(hi):
        hi = sum(t.criterion.weight for t in program.terms) * (np.pi + 1e6 * program.scale)
    found = oracle.witness(hi)
    if found is not None and found[1] <= hi:
        best_x, hi = found[0].location, found[1]
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        found = oracle.witness(mid)
        if found is None:
            lo = mid
        else:
            best_x, hi = found[0].location, found[1]
            lo = min(lo, hi)
    best_x = np.array(best_x, dtype=float) + 0.0
    return best_x, float(program.objective(best_x))


def _patch_program(patch, name):
    _check_patch(patch)
    c = criterion(name)
    return QuasiconvexProgram(patch.domain, [CostTerm(c, s) for s in patch.stencils])


def minmax_angle_place(patch, tol_theta=1e-9):
    """Placement minimizing the largest angle of the incident triangles.

    Returns ``(point, theta)``.
    """
    if tol_theta <= 0:
        raise UsageError("tol_theta must be positive")
    return arrangement_place(_patch_program(patch, "max-angle"), tol_theta)


def minmax_circumradius_place(patch, tol=1e-9):
    """Placement minimizing the largest circumradius; returns ``(point, rho)``."""
    if tol <= 0:
        raise UsageError("tol must be positive")
    return arrangement_place(_patch_program(patch, "circumradius"), tol)


def special_place(program, tol=1e-9, levels=8):
    """Route a program of non-quasiconvex terms to the right placement method.

    Max-angle and circumradius mixtures use the arrangement search; other
    kinds (max-min perimeter) fall back to a deep grid search.
    Returns ``(point, value)``.
    """
    if any(t.criterion.quasiconvex != "no" for t in program.terms):
        raise UsageError("special_place takes only non-quasiconvex criteria")
    kinds = {t.criterion.kind for t in program.terms}
    if kinds <= set(ARRANGEMENT_KINDS) and program.dimension == 2 and \
            all(t.stencil.element_kind == "tri" for t in program.terms):
        return arrangement_place(program, tol)
    res = grid_oracle(program, levels=levels)
    if res.status != "converged":
        raise EmptyDomainError("patch kernel is empty")
    return res.x, res.t


# ----------------------------------------------------------------------------
# Fermat-Weber point
# ----------------------------------------------------------------------------

def _weber_sum(x, sites):
    return float(np.sum(np.linalg.norm(sites - x, axis=1)))


def projected_subgradient_norm(x, sites, region=None):
    """Norm of the minimal-norm element of the (projected) subdifferential."""
    diff = x - sites
    dist = np.linalg.norm(diff, axis=1)
    at = dist <= 1e-12 * max(1.0, float(np.max(dist)))
    g = np.sum(diff[~at] / dist[~at, None], axis=0)
    if np.any(at):
        # subdifferential at a site adds the unit ball (per coincident site)
        k = int(np.sum(at))
        ng = float(np.linalg.norm(g))
        g = g * max(0.0, ng - k) / ng if ng > 0 else g * 0.0
    if region is None or not region.halfspaces:
        return float(np.linalg.norm(g))
    # remove components blocked by active domain constraints
    A, b = region.matrix()
    active = A[(A @ x - b) >= -1e-9 * max(1.0, float(np.max(np.abs(sites))))]
    if len(active) == 0:
        return float(np.linalg.norm(g))
    from scipy.optimize import nnls
    lam, _ = nnls(active.T, -g)
    return float(np.linalg.norm(g + active.T @ lam))


def _newton_polish(x, f, V, region, proj, tol, scale, trace, max_iter=30):
    """Reduced Newton steps on the active face once Weiszfeld has slowed.

    Near the optimum the decrease per step falls below the rounding error of
    the objective, so steps inside that band are accepted when they shrink
    the projected subgradient instead; only strict decreases enter ``trace``.
    """
    d = V.shape[1]
    band = 8.0 * np.finfo(float).eps * max(1.0, f)
    for _ in range(max_iter):
        gnorm = projected_subgradient_norm(x, V, region)
        if gnorm <= tol:
            break
        diff = x - V
        dist = np.linalg.norm(diff, axis=1)
        if np.min(dist) <= 1e-14 * scale:
            break
        u = diff / dist[:, None]
        g = u.sum(axis=0)
        H = sum((np.eye(d) - np.outer(ui, ui)) / di for ui, di in zip(u, dist))
        Z = np.eye(d)
        if region is not None and region.halfspaces:
            A, b = region.matrix()
            act = A[A @ x - b >= -1e-12 * scale]
            if len(act):
                _, sv, vt = np.linalg.svd(act)
                Z = vt[int(np.sum(sv > 1e-12 * sv[0])):].T
                if Z.shape[1] == 0:
                    break
        Hz = Z.T @ H @ Z
        try:
            dx = -Z @ np.linalg.solve(Hz, Z.T @ g)
        except np.linalg.LinAlgError:
            break
        xn = proj(x + dx)
        fn = _weber_sum(xn, V)
        if fn < f:
            x, f = xn, fn
            trace.append(f)
        elif fn <= f + band and projected_subgradient_norm(xn, V, region) < gnorm:
            x = xn
        else:
            break
    return x, f


def weber_point(sites, region=None, tol=1e-10, start=None, max_iter=100000):
    """Minimize ``sum |x - v_i|`` over ``region`` by projected Weiszfeld.

    Each step minimizes the standard quadratic majorizer, whose minimizer
    over a convex region is the projection of the unconstrained Weiszfeld
    update; the objective therefore never increases. At a site the usual
    subgradient test decides between stopping and stepping off along the
    steepest descent direction.

    Returns ``(point, objective_trace)``.
    """
    V = np.asarray(sites, dtype=float)
    if V.ndim != 2 or len(V) == 0:
        raise UsageError("weber_point needs a nonempty list of sites")
    if region is not None:
        center, radius = chebyshev_center(region)
        if not radius >= 0:
            raise EmptyDomainError("kernel is empty")
    if start is not None:
        x = np.asarray(start, dtype=float).copy()
    elif region is not None:
        x = center
    else:
        x = V.mean(axis=0)
    if region is not None and not region.contains(x):
        x = project_onto_region(x, region)
    scale = max(1.0, float(np.max(np.ptp(V, axis=0))))
    proj = (lambda p: project_onto_region(p, region)) if region is not None else (lambda p: p)
    f = _weber_sum(x, V)
    trace = [f]
    for _ in range(max_iter):
        diff = x - V
        dist = np.linalg.norm(diff, axis=1)
        at = dist <= 1e-14 * scale
        if np.any(at):
            g = np.sum(diff[~at] / dist[~at, None], axis=0)
            ng = float(np.linalg.norm(g))
            if ng <= np.sum(at):
                break  # site is an unconstrained minimizer
            step = (ng - np.sum(at)) / np.sum(1.0 / dist[~at])
            xn = proj(x - step * g / ng)
            fn = _weber_sum(xn, V)
            while fn >= f and step > tol:
                step *= 0.5
                xn = proj(x - step * g / ng)
                fn = _weber_sum(xn, V)
            if fn >= f:
                break
        else:
            w = 1.0 / dist
            xn = proj((w @ V) / np.sum(w))
            fn = _weber_sum(xn, V)
            if fn > f:  # rounding only; the majorizer guarantees descent
                break
        moved = float(np.linalg.norm(xn - x))
        x, f = xn, fn
        trace.append(f)
        if moved < tol and projected_subgradient_norm(x, V, region) <= tol:
            break
        if moved < 1e-6 * tol:
            break  # stalled at rounding level
    x, f = _newton_polish(x, f, V, region, proj, tol, scale, trace)
    # iterates only approach an optimal site asymptotically
    for v in V[np.argsort(np.linalg.norm(V - x, axis=1))[:1]]:
        if region is None or region.contains(v):
            fv = _weber_sum(v, V)
            if fv <= f:
                x, f = v.copy(), fv
                trace.append(f)
    return x + 0.0, trace


def weber_place(patch, tol=1e-10):
    """Fermat-Weber point of the patch's neighbour vertices within its kernel."""
    sites = np.unique(np.concatenate([s.fixed_vertices for s in patch.stencils]), axis=0)
    x, _ = weber_point(sites, patch.domain, tol=tol)
    return x
