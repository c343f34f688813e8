"""Pure numpy kernels: per-term cost pieces evaluated over batches of points.

Shapes follow one convention throughout: ``X`` is ``(m, d)`` candidate
positions of the moving vertex, ``F`` is ``(n, k, d)`` fixed vertices of
``n`` stencils sharing one kernel code, and piece arrays are ``(m, n, p)``.
"""

from itertools import combinations

import numpy as np

from ._codes import DEGENERATE_TOL, NPIECES

SQRT3 = np.sqrt(3.0)


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _cross3(u, v):
    return np.stack(
        (
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ),
        axis=-1,
    )


def _dot(u, v):
    return np.sum(u * v, axis=-1)


def _norm(u):
    return np.sqrt(np.sum(u * u, axis=-1))


# ----------------------------------------------------------------------------
# minimum enclosing balls of at most four points
# ----------------------------------------------------------------------------

def _circumcenter_offset(vecs):
    """Circumcenter offsets from the first point of each simplex.

    ``vecs`` is ``(..., j, d)``: edge vectors from the first point, j <= d.
    Returns ``(offset, ok)`` where ``ok`` flags non-degenerate simplices.
    Solves the Gram system ``2 G c = diag(G)`` in the span of the edges.
    """
    G = np.einsum("...id,...jd->...ij", vecs, vecs)
    rhs = 0.5 * np.einsum("...ii->...i", G)
    j = vecs.shape[-2]
    if j == 1:
        det = G[..., 0, 0]
        coef = rhs / np.where(det > 0, det, 1.0)[..., None]
    elif j == 2:
        det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
        safe = np.where(det != 0, det, 1.0)
        c0 = (rhs[..., 0] * G[..., 1, 1] - rhs[..., 1] * G[..., 0, 1]) / safe
        c1 = (G[..., 0, 0] * rhs[..., 1] - G[..., 1, 0] * rhs[..., 0]) / safe
        coef = np.stack((c0, c1), axis=-1)
    else:
        det = np.linalg.det(G)
        Gs = np.where((det != 0)[..., None, None], G, np.eye(j))
        coef = np.linalg.solve(Gs, rhs[..., None])[..., 0]
    scale = np.einsum("...ii->...", G) ** j
    ok = np.abs(det) > 1e-24 * np.maximum(scale, 1e-300)
    offset = np.einsum("...i,...id->...d", coef, vecs)
    return offset, ok


def meb_batch(P):
    """Smallest enclosing ball of ``(..., k, d)`` point sets with k <= 4.

    Every support subset (pairs, triples, quadruple) proposes its smallest
    circumscribed ball; the answer is the smallest proposal containing all
    points. Returns ``(center, radius)``.
    """
    P = np.asarray(P, dtype=float)
    k = P.shape[-2]
    shape = P.shape[:-2]
    if k == 1:
        return P[..., 0, :].copy(), np.zeros(shape)
    best_r = np.full(shape, np.inf)
    best_c = np.zeros(shape + (P.shape[-1],))
    scale = np.max(np.abs(P - P[..., :1, :]), axis=(-2, -1))
    for size in range(2, min(k, P.shape[-1] + 1) + 1):
        for sub in combinations(range(k), size):
            base = P[..., sub[0], :]
            vecs = P[..., list(sub[1:]), :] - base[..., None, :]
            off, ok = _circumcenter_offset(vecs)
            center = base + off
            r = _norm(off)
            far = np.max(_norm(P - center[..., None, :]), axis=-1)
            valid = ok & (far <= r + 1e-12 * np.maximum(r, scale) + 1e-300)
            better = valid & (r < best_r)
            best_r = np.where(better, r, best_r)
            best_c = np.where(better[..., None], center, best_c)
    # all points coincide
    same = ~np.isfinite(best_r)
    if np.any(same):
        best_r = np.where(same, 0.0, best_r)
        best_c = np.where(same[..., None], P[..., 0, :], best_c)
    return best_c, best_r


def _tri_meb_radius(p, q, r):
    """Enclosing-circle radius of triangles in any dimension (obtuse rule)."""
    pq, qr, rp = q - p, r - q, p - r
    lpq, lqr, lrp = _norm(pq), _norm(qr), _norm(rp)
    if p.shape[-1] == 2:
        twice_area = np.abs(_cross2(pq, -rp))
    else:
        twice_area = _norm(_cross3(pq, -rp))
    longest = np.maximum(np.maximum(lpq, lqr), lrp)
    with np.errstate(divide="ignore", invalid="ignore"):
        circ = lpq * lqr * lrp / (2.0 * twice_area)
    obtuse = (_dot(pq, -rp) <= 0) | (_dot(qr, -pq) <= 0) | (_dot(rp, -qr) <= 0)
    return np.where(obtuse | (twice_area <= 0) | ~np.isfinite(circ), 0.5 * longest, circ)


def solid_angle_batch(o, p, q, r):
    """Solid angle at ``o`` subtended by triangle ``pqr`` (broadcasting)."""
    r1, r2, r3 = p - o, q - o, r - o
    n1, n2, n3 = _norm(r1), _norm(r2), _norm(r3)
    num = np.abs(_dot(r1, _cross3(r2, r3)))
    den = n1 * n2 * n3 + _dot(r1, r2) * n3 + _dot(r1, r3) * n2 + _dot(r2, r3) * n1
    # + 0.0 maps -0.0 to +0.0: arctan2(0, -0.0) would give pi for a degenerate face
    return 2.0 * np.arctan2(num, den + 0.0)


def _dihedral(a, b, c, x):
    """Angle along axis ``ab`` between faces ``abc`` and ``abx``."""
    e = b - a
    n1 = _cross3(e, c - a)
    n2 = _cross3(e, x - a)
    return np.arctan2(_norm(_cross3(n1, n2)), _dot(n1, n2))


# ----------------------------------------------------------------------------
# per element kind piece evaluation
# ----------------------------------------------------------------------------

def _tri_pieces(code, x, F):
    a = F[None, :, 0, :]
    b = F[None, :, 1, :]
    xa, xb, ab = a - x, b - x, b - a
    A2 = _cross2(xa, xb)
    la, lb, l0 = _norm(xa), _norm(xb), _norm(ab)
    la, lb, l0, A2 = np.broadcast_arrays(la, lb, l0, A2)
    s2 = la * la + lb * lb + l0 * l0
    bad = ~(A2 > DEGENERATE_TOL * s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        if code in (0, 2):
            tx = np.arctan2(A2, _dot(xa, xb))
            ta = np.arctan2(A2, _dot(-xa, ab))
            tb = np.arctan2(A2, _dot(xb, ab))
            out = np.stack((tx, ta, tb), axis=-1)
            if code == 0:
                out = -out
        elif code == 1:
            ta = np.arctan2(A2, _dot(-xa, ab))
            tb = np.arctan2(A2, _dot(xb, ab))
            out = np.stack((ta, tb), axis=-1)
        elif code == 3:
            out = (0.5 * A2)[..., None]
        elif code == 4:
            out = (-0.5 * A2)[..., None]
        elif code == 5:
            out = (A2 / l0)[..., None]
        elif code == 6:
            out = (-A2 / l0)[..., None]
        elif code == 7:
            out = np.stack((-A2 / lb, -A2 / la), axis=-1)
        elif code == 8:
            out = np.stack((la, lb), axis=-1)
        elif code == 9:
            out = np.stack((la, lb, l0), axis=-1)
        elif code == 10:
            out = np.stack((la * la / A2, lb * lb / A2, l0 * l0 / A2), axis=-1)
        elif code == 11:
            out = (la + lb + l0)[..., None]
        elif code == 12:
            out = (-(la + lb + l0))[..., None]
        elif code == 13:
            xb_ = np.broadcast_to(x, A2.shape + (2,))
            out = _tri_meb_radius(xb_, np.broadcast_to(a, xb_.shape),
                                  np.broadcast_to(b, xb_.shape))[..., None]
        elif code == 14:
            out = (-A2 / (la + lb + l0))[..., None]
        elif code == 15:
            out = (-2.0 * SQRT3 * A2 / s2)[..., None]
        elif code == 16:
            out = (la * lb * l0 / (2.0 * A2))[..., None]
        else:
            raise ValueError(f"not a triangle code: {code}")
    return np.where(bad[..., None], np.inf, out)


def _quad_inradius(V):
    """Largest inscribed circle of convex ccw quads ``V`` of shape (..., 4, 2)."""
    P = V
    Q = np.roll(V, -1, axis=-2)
    e = Q - P
    le = _norm(e)
    nrm = np.stack((-e[..., 1], e[..., 0]), axis=-1) / le[..., None]
    h = _dot(nrm, P)
    best = np.full(V.shape[:-2], -np.inf)
    for skip in range(4):
        idx = [i for i in range(4) if i != skip]
        n = nrm[..., idx, :]
        hh = h[..., idx]
        # rows [nx, ny, -1] . (cx, cy, r) = h
        M = np.concatenate((n, -np.ones(n.shape[:-1] + (1,))), axis=-1)
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-14
        Ms = np.where(ok[..., None, None], M, np.eye(3))
        sol = np.linalg.solve(Ms, hh[..., None])[..., 0]
        c, r = sol[..., :2], sol[..., 2]
        slack = _dot(nrm[..., skip, :], c) - r - h[..., skip]
        tol = 1e-12 * np.max(le, axis=-1)
        valid = ok & (slack >= -tol)
        best = np.where(valid & (r > best), r, best)
    return best


def _quad_pieces(code, x, F):
    m, n = x.shape[0], F.shape[0]
    shape = (m, n, 2)
    v0 = np.broadcast_to(x, shape)
    v1 = np.broadcast_to(F[None, :, 0, :], shape)
    v2 = np.broadcast_to(F[None, :, 1, :], shape)
    v3 = np.broadcast_to(F[None, :, 2, :], shape)
    V = np.stack((v0, v1, v2, v3), axis=-2)
    nxt = np.roll(V, -1, axis=-2)
    prv = np.roll(V, 1, axis=-2)
    turns = _cross2(V - prv, nxt - V)
    e = nxt - V
    le2 = np.sum(e * e, axis=-1)
    s2 = np.sum(le2, axis=-1)
    bad = np.any(~(turns > DEGENERATE_TOL * s2[..., None]), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if code == 17:
            cols = []
            for i in range(4):
                p, q = V[..., i, :], V[..., (i + 1) % 4, :]
                lpq = np.sqrt(le2[..., i])
                for j in ((i + 2) % 4, (i + 3) % 4):
                    cols.append(-_cross2(q - p, V[..., j, :] - p) / lpq)
            out = np.stack(cols, axis=-1)
        elif code == 18:
            out = np.stack(
                (
                    _tri_meb_radius(v0, v1, v2),
                    _tri_meb_radius(v0, v2, v3),
                    _tri_meb_radius(v0, v1, v3),
                    _tri_meb_radius(v1, v2, v3),
                ),
                axis=-1,
            )
        elif code == 19:
            out = np.stack(
                (
                    _norm(v1 - v0), _norm(v2 - v0), _norm(v3 - v0),
                    _norm(v2 - v1), _norm(v3 - v2), _norm(v3 - v1),
                ),
                axis=-1,
            )
        elif code == 20:
            out = (-_quad_inradius(V))[..., None]
        elif code == 21:
            a = prv - V
            b = nxt - V
            out = -np.arctan2(_cross2(b, a), _dot(b, a))
        elif code in (22, 23):
            area = 0.5 * np.sum(_cross2(V, nxt), axis=-1)
            out = (area if code == 22 else -area)[..., None]
        elif code == 24:
            out = np.stack((_norm(v1 - v0), _norm(v3 - v0)), axis=-1)
        elif code == 25:
            out = np.sum(np.sqrt(le2), axis=-1)[..., None]
        else:
            raise ValueError(f"not a quad code: {code}")
    return np.where(bad[..., None], np.inf, out)


def _tet_pieces(code, x, F):
    m, n = x.shape[0], F.shape[0]
    shape = (m, n, 3)
    x = np.broadcast_to(x, shape)
    a = np.broadcast_to(F[None, :, 0, :], shape)
    b = np.broadcast_to(F[None, :, 1, :], shape)
    c = np.broadcast_to(F[None, :, 2, :], shape)
    xa, xb, xc = a - x, b - x, c - x
    ab, bc, ca = b - a, c - b, a - c
    O = _dot(xa, _cross3(xb, xc))
    edges = np.stack((_norm(xa), _norm(xb), _norm(xc), _norm(ab), _norm(bc), _norm(ca)), axis=-1)
    s = np.sum(edges * edges, axis=-1)
    bad = ~(O > DEGENERATE_TOL * s ** 1.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        if code == 26:
            out = (O / 6.0)[..., None]
        elif code == 27:
            out = (-O / 6.0)[..., None]
        elif code in (28, 30, 31):
            areas = 0.5 * np.stack(
                (
                    _norm(_cross3(ab, c - a)),
                    _norm(_cross3(xb, xc)),
                    _norm(_cross3(xa, xc)),
                    _norm(_cross3(xa, xb)),
                ),
                axis=-1,
            )
            if code == 28:
                out = -O[..., None] / (2.0 * areas)
            elif code == 30:
                out = areas
            else:
                out = np.sum(areas, axis=-1)[..., None]
        elif code == 29:
            out = edges[..., :3]
        elif code == 32:
            out = np.sum(edges, axis=-1)[..., None]
        elif code == 33:
            P = np.stack((x, a, b, c), axis=-2)
            out = meb_batch(P)[1][..., None]
        elif code == 34:
            out = np.stack(
                (_dihedral(a, b, c, x), _dihedral(b, c, a, x), _dihedral(c, a, b, x)),
                axis=-1,
            )
        elif code == 35:
            out = -solid_angle_batch(x, a, b, c)[..., None]
        elif code == 36:
            out = -np.stack(
                (
                    solid_angle_batch(a, x, b, c),
                    solid_angle_batch(b, x, c, a),
                    solid_angle_batch(c, x, a, b),
                ),
                axis=-1,
            )
        else:
            raise ValueError(f"not a tet code: {code}")
    return np.where(bad[..., None], np.inf, out)


def term_pieces(code, X, F, paired=False):
    """Unweighted pieces ``(m, n, p)`` for ``n`` stencils sharing ``code``.

    With ``paired=True`` point ``j`` is evaluated against stencil ``j`` only
    and the result has shape ``(1, n, p)``.
    """
    X = np.asarray(X, dtype=float)
    F = np.asarray(F, dtype=float)
    x = X[None, :, :] if paired else X[:, None, :]
    if code <= 16:
        return _tri_pieces(code, x, F)
    if code <= 25:
        return _quad_pieces(code, x, F)
    return _tet_pieces(code, x, F)


# ----------------------------------------------------------------------------
# program-level entry points (same signatures as the compiled kernels)
# ----------------------------------------------------------------------------

def _groups(codes):
    codes = np.asarray(codes)
    order = {}
    for j, c in enumerate(codes):
        order.setdefault(int(c), []).append(j)
    return order


def eval_pieces(codes, weights, fixed, X):
    """Weighted pieces ``(m, P)``; term ``j`` owns a contiguous column block."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    counts = np.array([NPIECES[c] for c in codes], dtype=int)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    out = np.empty((X.shape[0], int(offsets[-1])))
    for code, idx in _groups(codes).items():
        F = np.asarray(fixed)[idx][:, :, :d]
        pieces = term_pieces(code, X, F) * np.asarray(weights)[idx][None, :, None]
        for col, j in enumerate(idx):
            out[:, offsets[j]:offsets[j + 1]] = pieces[:, col, :]
    return out


def eval_costs(codes, weights, fixed, X):
    """Weighted maximum over all terms, ``(m,)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    best = np.full(X.shape[0], -np.inf)
    for code, idx in _groups(codes).items():
        F = np.asarray(fixed)[idx][:, :, :d]
        pieces = term_pieces(code, X, F) * np.asarray(weights)[idx][None, :, None]
        best = np.maximum(best, np.max(pieces, axis=(1, 2)))
    return best


def paired_costs(codes, weights, fixed, X):
    """Weighted cost of term ``j`` at point ``X[j]``, ``(n,)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    out = np.empty(X.shape[0])
    for code, idx in _groups(codes).items():
        F = np.asarray(fixed)[idx][:, :, :d]
        pieces = term_pieces(code, X[idx], F, paired=True)[0]
        out[idx] = np.max(pieces, axis=-1) * np.asarray(weights)[idx]
    return out


def grid_argmin(codes, weights, fixed, X, A, b, slack, chunk=32768):
    """Index and value of the first minimal feasible point of ``X``.

    Points violating ``A x <= b + slack`` are skipped. Returns ``(-1, inf)``
    when no point is feasible or every feasible cost is infinite.
    """
    X = np.asarray(X, dtype=float)
    best_i, best_v = -1, np.inf
    for start in range(0, X.shape[0], chunk):
        Xc = X[start:start + chunk]
        feas = np.all(Xc @ np.asarray(A).T <= np.asarray(b) + slack, axis=1)
        if not np.any(feas):
            continue
        idx = np.flatnonzero(feas)
        vals = eval_costs(codes, weights, fixed, Xc[idx])
        k = int(np.argmin(vals))
        if vals[k] < best_v:
            best_v, best_i = float(vals[k]), start + int(idx[k])
    return best_i, best_v
