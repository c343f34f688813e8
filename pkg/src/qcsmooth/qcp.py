"""Quasiconvex programs: minimize the pointwise maximum of weighted
quasiconvex cost terms over a convex polyhedral domain.

``solve`` is a primal descent method. Each iteration linearizes the smooth
pieces of every relevant term, solves a small linear program in ``d + 1``
variables for the step that most reduces the linearized maximum inside a
box trust region and the domain, and backtracks on the true objective.
Nonsmooth pieces are handled by sampling gradients around the iterate when
plain linearization stalls.

``grid_oracle`` is an independent brute-force verifier.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from . import kernels
from ._codes import NPIECES
from .criteria import pack_terms
from .errors import UsageError
from .geometry import ConvexRegion, chebyshev_center, project_onto_region, solve_lp

CONVERGED = "converged"
ITERATION_CAP = "iteration_cap"
EMPTY_DOMAIN = "empty_domain"

DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class LexValue:
    """Objective value ``t`` at point ``x``, ordered by ``t`` then coordinates."""

    t: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))

    @property
    def point(self):
        return np.array(self.x)

    def __lt__(self, other):
        return lex_compare(self, other) < 0

    def __le__(self, other):
        return lex_compare(self, other) <= 0


def _key(v):
    t = v.t if not np.isnan(v.t) else np.inf
    return (t,) + tuple(np.inf if np.isnan(c) else c for c in v.x)


def lex_compare(u, v):
    """-1, 0 or 1 as ``u`` is less than, equal to or greater than ``v``."""
    if len(u.x) != len(v.x):
        raise UsageError("lex_compare needs values of the same dimension")
    ku, kv = _key(u), _key(v)
    return (ku > kv) - (ku < kv)


@dataclass
class SolverResult:
    optimum: LexValue
    active_terms: tuple
    iterations: int
    status: str
    trace: list = field(default_factory=list)
    active_constraints: tuple = ()

    @property
    def x(self):
        return self.optimum.point

    @property
    def t(self):
        return self.optimum.t


class QuasiconvexProgram:
    """Domain halfspaces plus a list of cost terms; objective is their max.

    Parameters
    ----------
    domain : ConvexRegion
        Kernel halfspaces, quad diagonal halfplanes and a bounding box.
    terms : sequence of CostTerm
    """

    def __init__(self, domain, terms):
        terms = tuple(terms)
        if not terms:
            raise UsageError("a program needs at least one term")
        if not isinstance(domain, ConvexRegion):
            raise UsageError("domain must be a ConvexRegion")
        d = terms[0].stencil.dimension
        if domain.dimension != d or any(t.stencil.dimension != d for t in terms):
            raise UsageError("domain and terms must share a dimension")
        self.domain = domain
        self.terms = terms
        self.dimension = d
        self.codes, self.weights, self.fixed = pack_terms(terms)
        self.A, self.b = domain.matrix()
        sizes = np.array([NPIECES[c] for c in self.codes])
        # term index of every piece, in kernel output order
        self.piece_term = np.repeat(np.arange(len(terms)), sizes)
        pts = np.concatenate([t.stencil.fixed_vertices for t in terms])
        ext = float(np.max(np.ptp(pts, axis=0)))
        self.scale = ext if ext > 0 else 1.0

    @property
    def nonconvex_terms(self):
        return tuple(i for i, t in enumerate(self.terms) if t.criterion.quasiconvex == "no")

    def subprogram(self, indices):
        return QuasiconvexProgram(self.domain, [self.terms[i] for i in indices])

    def objective(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(kernels.eval_costs(self.codes, self.weights, self.fixed, X[None])[0])
        return kernels.eval_costs(self.codes, self.weights, self.fixed, X)

    def pieces(self, X):
        return kernels.eval_pieces(self.codes, self.weights, self.fixed, np.atleast_2d(X))

    def term_costs(self, x):
        """Weighted cost of every term at one point."""
        n = len(self.terms)
        X = np.broadcast_to(np.asarray(x, dtype=float), (n, self.dimension))
        return kernels.paired_costs(self.codes, self.weights, self.fixed, np.ascontiguousarray(X))

    def active_terms(self, x, tol=None):
        c = self.term_costs(x)
        F = float(np.max(c))
        if not np.isfinite(F):
            return tuple(int(i) for i in np.flatnonzero(~np.isfinite(c)))
        delta = default_active_tol(F) if tol is None else tol
        return tuple(int(i) for i in np.flatnonzero(c >= F - delta))

    def feasible(self, x, slack=DOMAIN_SLACK):
        return bool(np.all(self.A @ x <= self.b + slack * self.scale))

    def active_constraints(self, x, slack=DOMAIN_SLACK):
        r = self.A @ x - self.b
        return tuple(int(i) for i in np.flatnonzero(r >= -slack * self.scale))


def default_active_tol(F):
    return max(1e-8, 1e-6 * abs(F))


# ----------------------------------------------------------------------------
# descent solver
# ----------------------------------------------------------------------------

def _piece_gradients(program, X, h):
    """Central-difference gradients of all pieces at each row of ``X``.

    Returns ``(values, grads)`` of shapes ``(m, P)`` and ``(m, P, d)``; a
    one-sided difference is used where a neighbour is degenerate.
    """
    X = np.atleast_2d(X)
    m, d = X.shape
    # near a kernel facet the pieces vary on the scale of the distance to it,
    # so the probe step shrinks with the slack
    slack = np.min(program.b[None, :] - X @ program.A.T, axis=1) if len(program.b) else np.full(m, np.inf)
    h = np.clip(0.25 * slack, 1e-12 * program.scale, h)[:, None, None]
    E = np.eye(d)[None] * h
    probe = np.concatenate([X, (X[:, None, :] + E).reshape(-1, d), (X[:, None, :] - E).reshape(-1, d)])
    V = program.pieces(probe)
    P = V.shape[1]
    val = V[:m]
    up = V[m:m + m * d].reshape(m, d, P)
    dn = V[m + m * d:].reshape(m, d, P)
    c = val[:, None, :]
    with np.errstate(invalid="ignore"):
        g = np.where(np.isfinite(up) & np.isfinite(dn), (up - dn) / (2 * h),
                     np.where(np.isfinite(up), (up - c) / h, (c - dn) / h))
    return val, np.transpose(g, (0, 2, 1))


def _lp_step(rows_g, rows_c, A, slack_b, r, objective=None, cap=None):
    """Solve ``min z`` s.t. ``rows_c + rows_g d <= z``, ``A d <= slack_b``,
    ``|d|_inf <= r``. With ``objective`` given, minimize ``objective . d``
    subject to ``rows_c + rows_g d <= cap`` instead.
    Returns ``(d, z)`` or ``None``.
    """
    d = A.shape[1]
    if objective is None:
        c = np.zeros(d + 1)
        c[-1] = 1.0
        G = np.hstack([rows_g, -np.ones((rows_g.shape[0], 1))])
        Ad = np.hstack([A, np.zeros((A.shape[0], 1))])
        A_ub = np.vstack([G, Ad])
        b_ub = np.concatenate([-rows_c, slack_b])
        bounds = [(-r, r)] * d + [(None, None)]
    else:
        c = np.asarray(objective, float)
        A_ub = np.vstack([rows_g, A])
        b_ub = np.concatenate([cap - rows_c, slack_b])
        bounds = [(-r, r)] * d
    res = solve_lp(c, A_ub, b_ub, bounds)
    if res.status != 0:
        return None
    if objective is None:
        return res.x[:d], float(res.x[d])
    return res.x, float(res.fun)


def _model_rows(program, x, F, r, h, rng, nsample, radius):
    """Linearization rows ``(g, c)`` for pieces that can matter within ``r``."""
    d = program.dimension
    X = x[None]
    if nsample:
        off = rng.uniform(-1.0, 1.0, size=(nsample, d)) * radius
        X = np.concatenate([X, x + off])
    val, grad = _piece_gradients(program, X, h)
    base = val[0]
    keep_g, keep_c = [], []
    for s in range(X.shape[0]):
        g = grad[s]
        ok = np.isfinite(base) & np.all(np.isfinite(g), axis=1)
        reach = base + np.sum(np.abs(g), axis=1) * r
        sel = ok & (reach >= F - 1e-12 * max(1.0, abs(F)))
        keep_g.append(g[sel])
        keep_c.append(base[sel])
    return np.concatenate(keep_g), np.concatenate(keep_c)


def _inner_rhs(A, b, x, scale, margin=1e-7):
    """Right-hand side keeping LP targets slightly inside every constraint.

    Elements degenerate exactly on kernel boundaries (cost ``+inf``), so a
    step aimed at the boundary itself would always be cut back.
    """
    slack = b - A @ x
    return slack - np.minimum(margin * scale, np.maximum(slack, 0.0) * 0.5)


def _empty_result(d):
    return SolverResult(LexValue(np.inf, np.full(d, np.nan)), (), 0, EMPTY_DOMAIN)


def solve(program, start=None, tol=1e-9, max_iter=500, active_tol=None, seed=0):
    """Minimize the max of the program's terms over its domain.

    Parameters
    ----------
    program : QuasiconvexProgram
    start : array_like, optional
        Starting point; defaults to the Chebyshev center of the domain.
        Points outside the domain are projected onto it first.
    tol : float
        Relative tolerance: iteration stops when the predicted decrease is
        below ``tol * max(1, |F|)`` or the trust region shrinks below
        ``tol * scale``.
    max_iter : int
    active_tol : float, optional
        Activity threshold for ``active_terms``; default
        ``max(1e-8, 1e-6 |F|)``.
    seed : int
        Seed for gradient sampling.

    Returns
    -------
    SolverResult
    """
    if program.nonconvex_terms:
        names = sorted({program.terms[i].criterion.kind for i in program.nonconvex_terms})
        raise UsageError(f"criteria {', '.join(names)} are not quasiconvex; use special_solvers")
    if tol <= 0:
        raise UsageError("tol must be positive")
    d = program.dimension
    A, b = program.A, program.b
    center, radius = chebyshev_center(program.domain)
    if not radius >= 0:
        return _empty_result(d)
    scale = program.scale
    x = center if start is None else np.asarray(start, dtype=float).copy()
    if not program.feasible(x):
        x = project_onto_region(x, program.domain)
    F = program.objective(x)
    if not np.isfinite(F):
        F0 = program.objective(center)
        if np.isfinite(F0):
            x, F = center.copy(), F0
        else:
            coarse = grid_oracle(program, levels=0, resolution=16)
            if np.isfinite(coarse.t):
                x, F = coarse.x, coarse.t
    rng = np.random.default_rng(seed)
    h = 1e-6 * scale
    r = 0.1 * scale
    r_max = 10.0 * scale
    tol_x = tol * scale
    trace = [F]
    status = ITERATION_CAP
    sampling = 0
    it = 0
    while it < max_iter and np.isfinite(F):
        it += 1
        tol_f = tol * max(1.0, abs(F))
        nsample = 2 * d + 2 if sampling else 0
        G, C = _model_rows(program, x, F, r, h, rng, nsample, min(r, 1e-3 * scale))
        step = _lp_step(G, C, A, _inner_rhs(A, b, x, scale), r) if len(C) else None
        if step is None:
            status = CONVERGED
            break
        dx, z = step
        pred = F - z
        if pred <= tol_f:
            if sampling or r <= tol_x:
                status = CONVERGED
                break
            # linear model sees no progress: check with sampled gradients
            sampling = 1
            continue
        alpha, accepted = 1.0, False
        norm = float(np.max(np.abs(dx)))
        while alpha * norm > 0.1 * tol_x:
            xn = x + alpha * dx
            Fn = program.objective(xn)
            if Fn <= F - 1e-4 * alpha * pred:
                accepted = True
                break
            alpha *= 0.5
        if accepted:
            x, F = xn, Fn
            trace.append(F)
            sampling = max(0, sampling - 1)
            if alpha == 1.0 and norm >= 0.99 * r:
                r = min(2.0 * r, r_max)
            elif alpha < 1.0:
                r = max(alpha * norm, 0.25 * r, tol_x)
                # backtracking signals a kink the local model cannot see
                sampling = max(sampling, 2)
        else:
            if not sampling:
                sampling = 2
            else:
                r *= 0.25
                if r <= tol_x:
                    status = CONVERGED
                    break
    if status == CONVERGED and np.isfinite(F):
        x, Fp = _boundary_polish(program, x, F, tol)
        if Fp < F:
            F = Fp
            trace.append(F)
        x, F = _lex_tiebreak(program, x, F, h, tol)
        trace.append(F)
    delta = default_active_tol(F) if active_tol is None else active_tol
    return SolverResult(
        optimum=LexValue(F, x),
        active_terms=program.active_terms(x, delta),
        iterations=it,
        status=status if np.isfinite(F) else ITERATION_CAP,
        trace=trace,
        active_constraints=program.active_constraints(x),
    )


def _boundary_polish(program, x, F, tol, near=1e-6, maxfev=2000, restarts=5):
    """Refine an iterate wedged against kernel facets.

    Close to a facet where an element degenerates, costs depend on the
    ratios of the small slacks, so the trust region collapses to the slack
    scale. In coordinates (offset along the active facets, log of each
    active slack) the objective is smooth and a simplex search slides to
    the optimum. Returns ``(x, F)``, unchanged unless strictly better.
    """
    d = program.dimension
    s0 = program.b - program.A @ x
    J = np.flatnonzero((s0 > 0) & (s0 < near * program.scale))
    if not len(J) or len(J) > d:
        return x, F
    AJ = program.A[J]
    Z = null_space(AJ)
    P = np.linalg.pinv(AJ)
    k = Z.shape[1]

    def point(z):
        return x + Z @ z[:k] + P @ (s0[J] - np.exp(z[k:]))

    def cost(z):
        y = point(z)
        return program.objective(y) if program.feasible(y, slack=0.0) else np.inf

    z = np.concatenate([np.zeros(k), np.log(s0[J])])
    best = F
    for _ in range(restarts):  # simplex searches stall; restart while improving
        res = minimize(cost, z, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": tol * max(1.0, abs(F)) * 1e-3,
                                "maxfev": maxfev})
        if not res.fun < best - tol * max(1.0, abs(best)):
            if res.fun < best:
                z = res.x
            break
        z, best = res.x, res.fun
    y = point(z)
    Fy = program.objective(y)
    if program.feasible(y, slack=0.0) and Fy < F:
        return y, Fy
    return x, F


def _lex_tiebreak(program, x, F, h, tol, rounds=3):
    """On a flat optimum slide to the lexicographically least point.

    Moves only when the true objective does not increase and the step is
    larger than solver noise, so sharp optima (the common case) are left
    untouched and the descent trace stays monotone.
    """
    d = program.dimension
    A, b = program.A, program.b
    scale = program.scale
    eps_f = max(1e-12, tol * abs(F))
    min_move = 1e-6 * scale
    for k in range(d):
        for _ in range(rounds):
            G, C = _model_rows(program, x, F, scale, h, None, 0, 0.0)
            obj = np.zeros(d)
            obj[k] = 1.0
            out = _lp_step(G, C, A, _inner_rhs(A, b, x, scale), scale, objective=obj, cap=F + eps_f)
            if out is None or out[1] > -min_move:
                break
            dx = out[0]
            moved = False
            for _ in range(30):
                xn = x + dx
                if program.feasible(xn):
                    Fn = program.objective(xn)
                    if Fn <= F and xn[k] < x[k] - min_move:
                        x, F, moved = xn, Fn, True
                        break
                dx = 0.5 * dx
            if not moved:
                break
    return x, F


# ----------------------------------------------------------------------------
# grid oracle
# ----------------------------------------------------------------------------

def domain_bounds(region):
    """Axis-aligned bounds ``(lo, hi)`` of a region, or ``None`` if empty.

    Raises ``UsageError`` on an unbounded region.
    """
    A, b = region.matrix()
    d = region.dimension
    lo, hi = np.empty(d), np.empty(d)
    for k in range(d):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(d)
            c[k] = sign
            res = solve_lp(c, A, b, [(None, None)] * d)
            if res.status == 2:
                return None
            if res.status == 3:
                raise UsageError("grid oracle needs a bounded domain")
            if res.status != 0:
                return None
            out[k] = res.x[k]
    return lo, hi


def _grid(lo, hi, n):
    axes = [np.linspace(lo[k], hi[k], n) for k in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.ascontiguousarray(np.stack([m.ravel() for m in mesh], axis=1))


def _coarse_basins(program, X, shape, slack, count):
    """Indices of up to ``count`` best local minima of the coarse grid."""
    A, b = program.A, program.b
    vals = kernels.eval_costs(program.codes, program.weights, program.fixed, X)
    if A.shape[0]:
        vals = np.where(np.all(X @ A.T <= b + slack, axis=1), vals, np.inf)
    V = vals.reshape(shape)
    is_min = np.isfinite(V)
    padded = np.pad(V, 1, constant_values=np.inf)
    d = len(shape)
    for off in np.ndindex(*(3,) * d):
        if all(o == 1 for o in off):
            continue
        sl = tuple(slice(o, o + n) for o, n in zip(off, shape))
        is_min &= V <= padded[sl]
    idx = np.flatnonzero(is_min.ravel())
    order = np.lexsort((idx, vals[idx]))
    return idx[order[:count]]


_MAX_RECENTRE = 16


def grid_oracle(program, levels=3, resolution=64, seeds=(), basins=None):
    """Brute-force minimizer on a refined grid.

    The domain's bounding box is sampled at ``resolution`` points per axis,
    infeasible samples are masked, and the box is shrunk by 4 around the
    incumbent for ``levels`` further rounds. A round whose best sample lies
    on the window edge is repeated around it before shrinking further. Ties go to the lexicographically
    least point. ``seeds`` are extra candidate points (used when comparing
    nested programs).

    ``basins`` is how many coarse-grid local minima get refined. It defaults
    to 1 for quasiconvex programs (one basin) and 8 otherwise.
    """
    d = program.dimension
    bounds = domain_bounds(program.domain)
    if bounds is None:
        return _empty_result(d)
    if basins is None:
        basins = 8 if program.nonconvex_terms else 1
    lo, hi = bounds
    A, b = program.A, program.b
    slack = DOMAIN_SLACK * program.scale
    best_t, best_x = np.inf, None
    evaluated = 0

    def better(t, x, bt, bx):
        return bx is None or t < bt or (t == bt and tuple(x) < tuple(bx))

    def offer(t, x):
        nonlocal best_t, best_x
        if better(t, x, best_t, best_x):
            best_t, best_x = t, np.array(x, dtype=float)

    for s in seeds:
        s = np.asarray(s, dtype=float)
        if program.feasible(s):
            offer(program.objective(s), s)

    X = _grid(lo, hi, resolution)
    evaluated += X.shape[0]
    if basins > 1:
        starts = [X[i] for i in _coarse_basins(program, X, (resolution,) * d, slack, basins)]
    else:
        idx, val = kernels.grid_argmin(program.codes, program.weights, program.fixed, X, A, b, slack)
        starts = [X[idx]] if idx >= 0 else []
    if not starts and best_x is None:
        center, radius = chebyshev_center(program.domain)
        if radius >= 0:
            starts = [np.asarray(center, dtype=float)]
    if best_x is not None:
        starts.append(best_x)

    for x0 in starts:
        loc_t, loc_x = program.objective(x0), np.array(x0, dtype=float)
        if not program.feasible(loc_x):
            loc_t = np.inf
        width = hi - lo
        for level in range(levels):
            width = width / 4.0
            # recentre (same width) while the incumbent sits on the window edge
            for _ in range(_MAX_RECENTRE):
                c = loc_x
                Y = _grid(c - width / 2.0, c + width / 2.0, resolution)
                evaluated += Y.shape[0]
                idx, val = kernels.grid_argmin(program.codes, program.weights, program.fixed,
                                               Y, A, b, slack)
                if idx < 0 or not better(val, Y[idx], loc_t, loc_x):
                    break
                loc_t, loc_x = val, Y[idx].copy()
                if np.all(np.abs(loc_x - c) < 0.5 * width * (1.0 - 1e-9)):
                    break
        offer(loc_t, loc_x)
    if best_x is None:
        return _empty_result(d)
    return SolverResult(
        optimum=LexValue(best_t, best_x),
        active_terms=program.active_terms(best_x),
        iterations=evaluated,
        status=CONVERGED,
        trace=[best_t],
        active_constraints=program.active_constraints(best_x),
    )


# ----------------------------------------------------------------------------
# GLP property checks
# ----------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    pairs_checked: int = 0
    violations: list = field(default_factory=list)
    locality_checked: int = 0
    locality_violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations and not self.locality_violations


def check_glp_monotonicity(program, subsets, levels=3, resolution=64, tol=None):
    """Check ``f(A) <= f(B)`` lexicographically for nested term subsets.

    ``subsets`` is a sequence of ``(A, B)`` index collections with
    ``A`` contained in ``B``. Both values come from ``grid_oracle``; the
    evaluation of ``A`` is seeded with the optimum found for ``B`` so the two
    oracle runs are comparable. For one term ``j`` in ``B - A`` the locality
    consequence is also checked: adding ``j`` leaves the value unchanged
    (within ``tol``) exactly when ``j`` is satisfied at the optimum of ``A``.
    """
    report = MonotonicityReport()
    for pair in subsets:
        Aset, Bset = (tuple(sorted(set(s))) for s in pair)
        if not set(Aset) <= set(Bset) or not Aset:
            raise UsageError("subsets must be nonempty nested pairs (A within B)")
        fB = grid_oracle(program.subprogram(Bset), levels, resolution)
        seeds = () if fB.status == EMPTY_DOMAIN else (fB.x,)
        subA = program.subprogram(Aset)
        fA = grid_oracle(subA, levels, resolution, seeds=seeds)
        report.pairs_checked += 1
        if lex_compare(fA.optimum, fB.optimum) > 0:
            report.violations.append((Aset, Bset, fA.optimum, fB.optimum))
        extra = [j for j in Bset if j not in Aset]
        if extra and fA.status == CONVERGED:
            j = extra[0]
            t_star = fA.t
            cj = float(program.term_costs(fA.x)[j])
            fAj = grid_oracle(program.subprogram(Aset + (j,)), levels, resolution, seeds=(fA.x,))
            eps = tol if tol is not None else max(1e-3, 1e-3 * abs(t_star))
            report.locality_checked += 1
            satisfied = cj <= t_star
            unchanged = abs(fAj.t - t_star) <= eps
            # a term violated by a margin larger than eps must raise the value
            if (satisfied and not unchanged) or (cj > t_star + eps and fAj.t <= t_star):
                report.locality_violations.append((Aset, j, t_star, cj, fAj.t))
    return report
