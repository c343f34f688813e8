# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: scalar per-point loops over terms.

Mirrors ``_pykernels`` code for code. Fixed vertices arrive padded as an
``(n, 3, 3)`` array; planar codes read the first two coordinates only.
"""

import numpy as np

from libc.math cimport sqrt, atan2, fabs, INFINITY

cdef double DEGEN = 1e-13
cdef double SQRT3 = 1.7320508075688772

cdef int NPIECES_C[37]
NPIECES_C[:] = [3, 2, 3, 1, 1, 1, 1, 2, 2, 3, 3, 1, 1, 1, 1, 1, 1,
                8, 4, 6, 1, 4, 1, 1, 2, 1,
                1, 1, 4, 3, 4, 1, 1, 1, 3, 1, 3]


def npieces_table():
    return [NPIECES_C[i] for i in range(37)]


cdef inline double sq(double v) noexcept nogil:
    return v * v


cdef inline double cr2(double ux, double uy, double vx, double vy) noexcept nogil:
    return ux * vy - uy * vx


cdef inline void cr3(const double* u, const double* v, double* o) noexcept nogil:
    o[0] = u[1] * v[2] - u[2] * v[1]
    o[1] = u[2] * v[0] - u[0] * v[2]
    o[2] = u[0] * v[1] - u[1] * v[0]


cdef inline double dt3(const double* u, const double* v) noexcept nogil:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


cdef inline double nm3(const double* u) noexcept nogil:
    return sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])


cdef inline void sub3(const double* u, const double* v, double* o) noexcept nogil:
    o[0] = u[0] - v[0]
    o[1] = u[1] - v[1]
    o[2] = u[2] - v[2]


cdef double tri_meb2(double px, double py, double qx, double qy,
                     double rx, double ry) noexcept nogil:
    cdef double pqx = qx - px, pqy = qy - py
    cdef double qrx = rx - qx, qry = ry - qy
    cdef double rpx = px - rx, rpy = py - ry
    cdef double lpq = sqrt(pqx * pqx + pqy * pqy)
    cdef double lqr = sqrt(qrx * qrx + qry * qry)
    cdef double lrp = sqrt(rpx * rpx + rpy * rpy)
    cdef double tw = fabs(cr2(pqx, pqy, -rpx, -rpy))
    cdef double longest = lpq
    if lqr > longest:
        longest = lqr
    if lrp > longest:
        longest = lrp
    if tw <= 0:
        return 0.5 * longest
    if (pqx * -rpx + pqy * -rpy) <= 0 or (qrx * -pqx + qry * -pqy) <= 0 \
            or (rpx * -qrx + rpy * -qry) <= 0:
        return 0.5 * longest
    return lpq * lqr * lrp / (2.0 * tw)


cdef double solid3(const double* o, const double* p, const double* q,
                   const double* r) noexcept nogil:
    cdef double r1[3]
    cdef double r2[3]
    cdef double r3[3]
    cdef double w[3]
    sub3(p, o, r1)
    sub3(q, o, r2)
    sub3(r, o, r3)
    cdef double n1 = nm3(r1), n2 = nm3(r2), n3 = nm3(r3)
    cr3(r2, r3, w)
    cdef double num = fabs(dt3(r1, w))
    cdef double den = n1 * n2 * n3 + dt3(r1, r2) * n3 + dt3(r1, r3) * n2 + dt3(r2, r3) * n1
    # + 0.0 maps -0.0 to +0.0: atan2(0, -0.0) would give pi for a degenerate face
    return 2.0 * atan2(num, den + 0.0)


cdef double dihedral3(const double* a, const double* b, const double* c,
                      const double* x) noexcept nogil:
    cdef double e[3]
    cdef double u[3]
    cdef double v[3]
    cdef double n1[3]
    cdef double n2[3]
    cdef double w[3]
    sub3(b, a, e)
    sub3(c, a, u)
    sub3(x, a, v)
    cr3(e, u, n1)
    cr3(e, v, n2)
    cr3(n1, n2, w)
    return atan2(nm3(w), dt3(n1, n2))


cdef inline int ball_ok(const double* P, int k, const double* c, double r,
                        double scale) noexcept nogil:
    cdef int i
    cdef double d[3]
    cdef double lim = r + 1e-12 * (r if r > scale else scale) + 1e-300
    for i in range(k):
        sub3(&P[3 * i], c, d)
        if nm3(d) > lim:
            return 0
    return 1


cdef double tri_ball_3d(const double* P, int i, int j, int l, double* c) noexcept nogil:
    """Circumscribed ball of three points; returns -1 when collinear."""
    cdef double u[3]
    cdef double v[3]
    cdef double w[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double uu, vv, ww, r
    cdef int s
    sub3(&P[3 * j], &P[3 * i], u)
    sub3(&P[3 * l], &P[3 * i], v)
    cr3(u, v, w)
    ww = dt3(w, w)
    uu = dt3(u, u)
    vv = dt3(v, v)
    if ww <= 1e-24 * (uu + vv) * (uu + vv):
        return -1.0
    cr3(v, w, t1)
    cr3(w, u, t2)
    for s in range(3):
        c[s] = (uu * t1[s] + vv * t2[s]) / (2.0 * ww)
    r = nm3(c)
    for s in range(3):
        c[s] += P[3 * i + s]
    return r


cdef double fixed_triple_ball(const double* P, double* tc) noexcept nogil:
    """Smallest ball of points 1..3 of ``P``; radius returned, center in ``tc``."""
    cdef int i, j, s
    cdef double best = INFINITY, r, scale = 0.0
    cdef double c[3]
    cdef double u[3]
    for i in range(2, 4):
        for j in range(3):
            r = fabs(P[3 * i + j] - P[3 + j])
            if r > scale:
                scale = r
    for i in range(1, 4):
        for j in range(i + 1, 4):
            for s in range(3):
                c[s] = 0.5 * (P[3 * i + s] + P[3 * j + s])
            sub3(&P[3 * i], c, u)
            r = nm3(u)
            if r < best and ball_ok(&P[3], 3, c, r, scale):
                best = r
                tc[0] = c[0]; tc[1] = c[1]; tc[2] = c[2]
    r = tri_ball_3d(P, 1, 2, 3, c)
    if r >= 0 and r < best and ball_ok(&P[3], 3, c, r, scale):
        best = r
        tc[0] = c[0]; tc[1] = c[1]; tc[2] = c[2]
    return best


cdef double meb4_3d(const double* P) noexcept nogil:
    """Radius of the smallest ball enclosing four points in 3-space.

    Point 0 is the moving vertex. The smallest ball of points 1..3 is found
    first; if it holds point 0 it is the answer, otherwise point 0 lies on
    the boundary of the optimal ball and only supports containing it are
    tried.
    """
    cdef int i, j, l, s
    cdef double best = INFINITY, tri_best = INFINITY
    cdef double c[3]
    cdef double u[3]
    cdef double v[3]
    cdef double w[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cdef double r, uu, vv, ww, den, scale = 0.0
    cdef double tc[3]
    for i in range(1, 4):
        for j in range(3):
            r = fabs(P[3 * i + j] - P[j])
            if r > scale:
                scale = r
    tri_best = fixed_triple_ball(P, tc)
    if tri_best < INFINITY:
        sub3(P, tc, u)
        if nm3(u) <= tri_best * (1.0 + 1e-12) + 1e-300:
            return tri_best
    # supports containing point 0: pairs
    for j in range(1, 4):
        for s in range(3):
            c[s] = 0.5 * (P[s] + P[3 * j + s])
        sub3(P, c, u)
        r = nm3(u)
        if r < best and ball_ok(P, 4, c, r, scale):
            best = r
    # triples
    for j in range(1, 4):
        for l in range(j + 1, 4):
            r = tri_ball_3d(P, 0, j, l, c)
            if r >= 0 and r < best and ball_ok(P, 4, c, r, scale):
                best = r
    # all four
    sub3(&P[3], &P[0], u)
    sub3(&P[6], &P[0], v)
    sub3(&P[9], &P[0], w)
    cr3(v, w, t1)
    cr3(w, u, t2)
    cr3(u, v, t3)
    den = 2.0 * dt3(u, t1)
    uu = dt3(u, u)
    vv = dt3(v, v)
    ww = dt3(w, w)
    if fabs(den) > 1e-12 * (uu + vv + ww) * sqrt(uu + vv + ww):
        for s in range(3):
            c[s] = (uu * t1[s] + vv * t2[s] + ww * t3[s]) / den
        r = nm3(c)
        for s in range(3):
            c[s] += P[s]
        if r < best and ball_ok(P, 4, c, r, scale):
            best = r
    if best == INFINITY:
        best = 0.0
    return best


cdef double quad_inradius(const double* V) noexcept nogil:
    """Largest inscribed circle of a convex ccw quad given as 8 doubles."""
    cdef double nx[4]
    cdef double ny[4]
    cdef double h[4]
    cdef double le[4]
    cdef int i, skip, k
    cdef int rows[3]
    cdef double ex, ey, L, maxle = 0.0
    for i in range(4):
        ex = V[2 * ((i + 1) % 4)] - V[2 * i]
        ey = V[2 * ((i + 1) % 4) + 1] - V[2 * i + 1]
        L = sqrt(ex * ex + ey * ey)
        le[i] = L
        if L > maxle:
            maxle = L
        nx[i] = -ey / L
        ny[i] = ex / L
        h[i] = nx[i] * V[2 * i] + ny[i] * V[2 * i + 1]
    cdef double best = -INFINITY
    cdef double det, cx, cy, r, a0, a1, a2, b0, b1, b2, h0, h1, h2
    for skip in range(4):
        k = 0
        for i in range(4):
            if i != skip:
                rows[k] = i
                k += 1
        a0 = nx[rows[0]]
        a1 = nx[rows[1]]
        a2 = nx[rows[2]]
        b0 = ny[rows[0]]
        b1 = ny[rows[1]]
        b2 = ny[rows[2]]
        h0 = h[rows[0]]
        h1 = h[rows[1]]
        h2 = h[rows[2]]
        # rows [a, b, -1]; Cramer's rule
        det = a0 * (b1 * -1.0 - (-1.0) * b2) - b0 * (a1 * -1.0 - (-1.0) * a2) \
            + (-1.0) * (a1 * b2 - b1 * a2)
        if fabs(det) <= 1e-14:
            continue
        cx = (h0 * (-b1 + b2) - b0 * (-h1 + h2) - (h1 * b2 - b1 * h2)) / det
        cy = (a0 * (-h1 + h2) - h0 * (-a1 + a2) - (a1 * h2 - h1 * a2)) / det
        r = (a0 * (b1 * h2 - h1 * b2) - b0 * (a1 * h2 - h1 * a2) + h0 * (a1 * b2 - b1 * a2)) / det
        if nx[skip] * cx + ny[skip] * cy - r - h[skip] >= -1e-12 * maxle and r > best:
            best = r
    return best


cdef int tri_pieces(int code, const double* x, const double* F, double* out) noexcept nogil:
    cdef double ax = F[0] - x[0], ay = F[1] - x[1]
    cdef double bx = F[3] - x[0], by = F[4] - x[1]
    cdef double ex = F[3] - F[0], ey = F[4] - F[1]
    cdef double A2 = cr2(ax, ay, bx, by)
    cdef double la = sqrt(ax * ax + ay * ay)
    cdef double lb = sqrt(bx * bx + by * by)
    cdef double l0 = sqrt(ex * ex + ey * ey)
    cdef double s2 = la * la + lb * lb + l0 * l0
    cdef int n = NPIECES_C[code], i
    if not (A2 > DEGEN * s2):
        for i in range(n):
            out[i] = INFINITY
        return n
    if code == 0 or code == 2:
        out[0] = atan2(A2, ax * bx + ay * by)
        out[1] = atan2(A2, -ax * ex - ay * ey)
        out[2] = atan2(A2, bx * ex + by * ey)
        if code == 0:
            out[0] = -out[0]
            out[1] = -out[1]
            out[2] = -out[2]
    elif code == 1:
        out[0] = atan2(A2, -ax * ex - ay * ey)
        out[1] = atan2(A2, bx * ex + by * ey)
    elif code == 3:
        out[0] = 0.5 * A2
    elif code == 4:
        out[0] = -0.5 * A2
    elif code == 5:
        out[0] = A2 / l0
    elif code == 6:
        out[0] = -A2 / l0
    elif code == 7:
        out[0] = -A2 / lb
        out[1] = -A2 / la
    elif code == 8:
        out[0] = la
        out[1] = lb
    elif code == 9:
        out[0] = la
        out[1] = lb
        out[2] = l0
    elif code == 10:
        out[0] = la * la / A2
        out[1] = lb * lb / A2
        out[2] = l0 * l0 / A2
    elif code == 11:
        out[0] = la + lb + l0
    elif code == 12:
        out[0] = -(la + lb + l0)
    elif code == 13:
        out[0] = tri_meb2(x[0], x[1], F[0], F[1], F[3], F[4])
    elif code == 14:
        out[0] = -A2 / (la + lb + l0)
    elif code == 15:
        out[0] = -2.0 * SQRT3 * A2 / s2
    elif code == 16:
        out[0] = la * lb * l0 / (2.0 * A2)
    return n


cdef int quad_pieces(int code, const double* x, const double* F, double* out) noexcept nogil:
    cdef double V[8]
    cdef double le2[4]
    cdef int i, j, k, p, q, n = NPIECES_C[code]
    V[0] = x[0]
    V[1] = x[1]
    for i in range(3):
        V[2 * i + 2] = F[3 * i]
        V[2 * i + 3] = F[3 * i + 1]
    cdef double s2 = 0.0, t, L
    for i in range(4):
        j = (i + 1) % 4
        le2[i] = sq(V[2 * j] - V[2 * i]) + sq(V[2 * j + 1] - V[2 * i + 1])
        s2 += le2[i]
    for i in range(4):
        p = (i + 3) % 4
        q = (i + 1) % 4
        t = cr2(V[2 * i] - V[2 * p], V[2 * i + 1] - V[2 * p + 1],
                V[2 * q] - V[2 * i], V[2 * q + 1] - V[2 * i + 1])
        if not (t > DEGEN * s2):
            for k in range(n):
                out[k] = INFINITY
            return n
    if code == 17:
        k = 0
        for i in range(4):
            q = (i + 1) % 4
            L = sqrt(le2[i])
            for p in range(2):
                j = (i + 2 + p) % 4
                out[k] = -cr2(V[2 * q] - V[2 * i], V[2 * q + 1] - V[2 * i + 1],
                              V[2 * j] - V[2 * i], V[2 * j + 1] - V[2 * i + 1]) / L
                k += 1
    elif code == 18:
        out[0] = tri_meb2(V[0], V[1], V[2], V[3], V[4], V[5])
        out[1] = tri_meb2(V[0], V[1], V[4], V[5], V[6], V[7])
        out[2] = tri_meb2(V[0], V[1], V[2], V[3], V[6], V[7])
        out[3] = tri_meb2(V[2], V[3], V[4], V[5], V[6], V[7])
    elif code == 19:
        out[0] = sqrt(sq(V[2] - V[0]) + sq(V[3] - V[1]))
        out[1] = sqrt(sq(V[4] - V[0]) + sq(V[5] - V[1]))
        out[2] = sqrt(sq(V[6] - V[0]) + sq(V[7] - V[1]))
        out[3] = sqrt(sq(V[4] - V[2]) + sq(V[5] - V[3]))
        out[4] = sqrt(sq(V[6] - V[4]) + sq(V[7] - V[5]))
        out[5] = sqrt(sq(V[6] - V[2]) + sq(V[7] - V[3]))
    elif code == 20:
        out[0] = -quad_inradius(V)
    elif code == 21:
        for i in range(4):
            p = (i + 3) % 4
            q = (i + 1) % 4
            out[i] = -atan2(
                cr2(V[2 * q] - V[2 * i], V[2 * q + 1] - V[2 * i + 1],
                    V[2 * p] - V[2 * i], V[2 * p + 1] - V[2 * i + 1]),
                (V[2 * q] - V[2 * i]) * (V[2 * p] - V[2 * i])
                + (V[2 * q + 1] - V[2 * i + 1]) * (V[2 * p + 1] - V[2 * i + 1]))
    elif code == 22 or code == 23:
        t = 0.0
        for i in range(4):
            q = (i + 1) % 4
            t += cr2(V[2 * i], V[2 * i + 1], V[2 * q], V[2 * q + 1])
        out[0] = 0.5 * t if code == 22 else -0.5 * t
    elif code == 24:
        out[0] = sqrt(le2[0])
        out[1] = sqrt(le2[3])
    elif code == 25:
        out[0] = sqrt(le2[0]) + sqrt(le2[1]) + sqrt(le2[2]) + sqrt(le2[3])
    return n


cdef inline int tet_orient_ok(const double* x, const double* F) noexcept nogil:
    """Same nondegeneracy test as ``tet_pieces``."""
    cdef double xa[3]
    cdef double xb[3]
    cdef double xc[3]
    cdef double w[3]
    cdef double e[3]
    cdef double s = 0.0
    sub3(&F[0], x, xa)
    sub3(&F[3], x, xb)
    sub3(&F[6], x, xc)
    cr3(xb, xc, w)
    cdef double O = dt3(xa, w)
    s = dt3(xa, xa) + dt3(xb, xb) + dt3(xc, xc)
    sub3(&F[3], &F[0], e)
    s += dt3(e, e)
    sub3(&F[6], &F[3], e)
    s += dt3(e, e)
    sub3(&F[0], &F[6], e)
    s += dt3(e, e)
    return O > DEGEN * s * sqrt(s)


cdef int tet_pieces(int code, const double* x, const double* F, double* out) noexcept nogil:
    cdef const double* a = F
    cdef const double* b = F + 3
    cdef const double* c = F + 6
    cdef double xa[3]
    cdef double xb[3]
    cdef double xc[3]
    cdef double ab[3]
    cdef double bc[3]
    cdef double ca[3]
    cdef double w[3]
    cdef double ac[3]
    cdef double P[12]
    cdef double ar[4]
    cdef int i, n = NPIECES_C[code]
    sub3(a, x, xa)
    sub3(b, x, xb)
    sub3(c, x, xc)
    sub3(b, a, ab)
    sub3(c, b, bc)
    sub3(a, c, ca)
    cr3(xb, xc, w)
    cdef double O = dt3(xa, w)
    cdef double e0 = nm3(xa), e1 = nm3(xb), e2 = nm3(xc)
    cdef double e3 = nm3(ab), e4 = nm3(bc), e5 = nm3(ca)
    cdef double s = e0 * e0 + e1 * e1 + e2 * e2 + e3 * e3 + e4 * e4 + e5 * e5
    if not (O > DEGEN * s * sqrt(s)):
        for i in range(n):
            out[i] = INFINITY
        return n
    if code == 26:
        out[0] = O / 6.0
    elif code == 27:
        out[0] = -O / 6.0
    elif code == 28 or code == 30 or code == 31:
        sub3(c, a, ac)
        cr3(ab, ac, w)
        ar[0] = 0.5 * nm3(w)
        cr3(xb, xc, w)
        ar[1] = 0.5 * nm3(w)
        cr3(xa, xc, w)
        ar[2] = 0.5 * nm3(w)
        cr3(xa, xb, w)
        ar[3] = 0.5 * nm3(w)
        if code == 28:
            for i in range(4):
                out[i] = -O / (2.0 * ar[i])
        elif code == 30:
            for i in range(4):
                out[i] = ar[i]
        else:
            out[0] = ar[0] + ar[1] + ar[2] + ar[3]
    elif code == 29:
        out[0] = e0
        out[1] = e1
        out[2] = e2
    elif code == 32:
        out[0] = e0 + e1 + e2 + e3 + e4 + e5
    elif code == 33:
        for i in range(3):
            P[i] = x[i]
            P[3 + i] = a[i]
            P[6 + i] = b[i]
            P[9 + i] = c[i]
        out[0] = meb4_3d(P)
    elif code == 34:
        out[0] = dihedral3(a, b, c, x)
        out[1] = dihedral3(b, c, a, x)
        out[2] = dihedral3(c, a, b, x)
    elif code == 35:
        out[0] = -solid3(x, a, b, c)
    elif code == 36:
        out[0] = -solid3(a, x, b, c)
        out[1] = -solid3(b, x, c, a)
        out[2] = -solid3(c, x, a, b)
    return n


cdef inline int term_pieces_c(int code, const double* x, const double* F,
                              double* out) noexcept nogil:
    if code <= 16:
        return tri_pieces(code, x, F, out)
    if code <= 25:
        return quad_pieces(code, x, F, out)
    return tet_pieces(code, x, F, out)


def _prepare(codes, weights, fixed, X):
    codes_a = np.ascontiguousarray(codes, dtype=np.intc)
    weights_a = np.ascontiguousarray(weights, dtype=np.float64)
    fx = np.asarray(fixed, dtype=np.float64)
    padded = np.zeros((fx.shape[0], 3, 3))
    padded[:, :fx.shape[1], :fx.shape[2]] = fx
    Xa = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xp = np.zeros((Xa.shape[0], 3))
    Xp[:, :Xa.shape[1]] = Xa
    if codes_a.shape[0] and (codes_a.min() < 0 or codes_a.max() > 36):
        raise ValueError("unknown kernel code")
    return codes_a, weights_a, padded, Xp


def eval_pieces(codes, weights, fixed, X):
    """Weighted pieces ``(m, P)``; term ``j`` owns a contiguous column block."""
    codes_a, weights_a, padded, Xp = _prepare(codes, weights, fixed, X)
    cdef int[::1] cv = codes_a
    cdef double[::1] wv = weights_a
    cdef double[:, :, ::1] fv = padded
    cdef double[:, ::1] xv = Xp
    cdef Py_ssize_t m = xv.shape[0], n = cv.shape[0], i, j
    cdef int total = 0, k, col, cnt
    for j in range(n):
        total += NPIECES_C[cv[j]]
    out = np.empty((m, total))
    cdef double[:, ::1] ov = out
    cdef double buf[8]
    with nogil:
        for i in range(m):
            col = 0
            for j in range(n):
                cnt = term_pieces_c(cv[j], &xv[i, 0], &fv[j, 0, 0], buf)
                for k in range(cnt):
                    ov[i, col + k] = wv[j] * buf[k]
                col += cnt
    return out


def eval_costs(codes, weights, fixed, X):
    """Weighted maximum over all terms, ``(m,)``."""
    codes_a, weights_a, padded, Xp = _prepare(codes, weights, fixed, X)
    cdef int[::1] cv = codes_a
    cdef double[::1] wv = weights_a
    cdef double[:, :, ::1] fv = padded
    cdef double[:, ::1] xv = Xp
    cdef Py_ssize_t m = xv.shape[0], n = cv.shape[0], i, j
    cdef int k, cnt
    cdef double best, val
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double buf[8]
    with nogil:
        for i in range(m):
            best = -INFINITY
            for j in range(n):
                cnt = term_pieces_c(cv[j], &xv[i, 0], &fv[j, 0, 0], buf)
                for k in range(cnt):
                    val = wv[j] * buf[k]
                    if val > best:
                        best = val
            ov[i] = best
    return out


def paired_costs(codes, weights, fixed, X):
    """Weighted cost of term ``j`` at point ``X[j]``, ``(n,)``."""
    codes_a, weights_a, padded, Xp = _prepare(codes, weights, fixed, X)
    cdef int[::1] cv = codes_a
    cdef double[::1] wv = weights_a
    cdef double[:, :, ::1] fv = padded
    cdef double[:, ::1] xv = Xp
    cdef Py_ssize_t n = cv.shape[0], j
    cdef int k, cnt
    cdef double best
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double buf[8]
    with nogil:
        for j in range(n):
            cnt = term_pieces_c(cv[j], &xv[j, 0], &fv[j, 0, 0], buf)
            best = -INFINITY
            for k in range(cnt):
                if buf[k] > best:
                    best = buf[k]
            ov[j] = wv[j] * best
    return out


def grid_argmin(codes, weights, fixed, X, A, b, double slack):
    """Index and value of the first minimal feasible point of ``X``.

    Terms are scanned starting from the one that dominated the previous
    point, and scanning stops once a point is already worse than the
    incumbent; only the argmin is exact, other values are never returned.
    """
    codes_a, weights_a, padded, Xp = _prepare(codes, weights, fixed, X)
    Aa = np.zeros((np.shape(A)[0], 3))
    Aa[:, :np.shape(A)[1]] = A
    ba = np.ascontiguousarray(b, dtype=np.float64)
    cdef int[::1] cv = codes_a
    cdef double[::1] wv = weights_a
    cdef double[:, :, ::1] fv = padded
    cdef double[:, ::1] xv = Xp
    cdef double[:, ::1] av = Aa
    cdef double[::1] bv = ba
    cdef Py_ssize_t m = xv.shape[0], n = cv.shape[0], nh = av.shape[0]
    cdef Py_ssize_t i, j, jj, h, start = 0
    cdef int k, cnt, feasible
    cdef double best = INFINITY, cur, val
    cdef Py_ssize_t best_i = -1
    cdef double buf[8]
    cdef double P[12]
    # containing-sphere terms: smallest ball of the fixed triple, reused for
    # every grid point that falls inside it
    tb_a = np.full((n, 4), -1.0)
    cdef double[:, ::1] tb = tb_a
    cdef double tr, dx, dy, dz
    for j in range(n):
        if cv[j] == 33:
            for k in range(9):
                P[3 + k] = fv[j, k // 3, k % 3]
            tr = fixed_triple_ball(P, &tb[j, 0])
            tb[j, 3] = tr
    with nogil:
        for i in range(m):
            feasible = 1
            for h in range(nh):
                if av[h, 0] * xv[i, 0] + av[h, 1] * xv[i, 1] + av[h, 2] * xv[i, 2] \
                        > bv[h] + slack:
                    feasible = 0
                    break
            if not feasible:
                continue
            cur = -INFINITY
            for jj in range(n):
                j = (start + jj) % n
                cnt = -1
                if cv[j] == 33 and tb[j, 3] >= 0:
                    dx = xv[i, 0] - tb[j, 0]
                    dy = xv[i, 1] - tb[j, 1]
                    dz = xv[i, 2] - tb[j, 2]
                    if sqrt(dx * dx + dy * dy + dz * dz) <= tb[j, 3] * (1.0 + 1e-12) and \
                            tet_orient_ok(&xv[i, 0], &fv[j, 0, 0]):
                        buf[0] = tb[j, 3]
                        cnt = 1
                if cnt < 0:
                    cnt = term_pieces_c(cv[j], &xv[i, 0], &fv[j, 0, 0], buf)
                for k in range(cnt):
                    val = wv[j] * buf[k]
                    if val > cur:
                        cur = val
                        if val >= best:
                            start = j
                if cur >= best:
                    break  # ties keep the earlier point
            if cur < best:
                best = cur
                best_i = i
    return int(best_i), float(best)
