"""Meshes, vertex patches, smoothing sweeps and quality reports."""

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .criteria import (MAXIMIZE_MIN, CostTerm, ElementStencil, _ROTATIONS, criterion,
                       element_quality, patch_cost, quad_domain_constraints)
from .errors import (DegenerateElementError, EmptyDomainError, NotSmoothableError,
                     TopologyError, UsageError, ValidationError)
from .geometry import (ConvexRegion, Halfspace, bounding_box_region, chebyshev_center,
                       is_ccw, is_positive_tet)
from .qcp import QuasiconvexProgram, solve
from .special import special_place

KINDS = ("tri", "quad", "tet")


def _infer_kind(k, d, kind):
    if kind is not None:
        if kind not in KINDS:
            raise UsageError(f"unknown element kind {kind!r}")
        want = {"tri": (3, 2), "quad": (4, 2), "tet": (4, 3)}[kind]
        if (k, d) != want:
            raise UsageError(f"{kind} elements need {want[0]} vertices in {want[1]}-d")
        return kind
    if k == 3 and d == 2:
        return "tri"
    if k == 4 and d == 3:
        return "tet"
    if k == 4 and d == 2:
        return "quad"
    raise UsageError(f"cannot infer element kind for {k}-vertex elements in {d}-d")


def _facets(kind, elem):
    """Boundary facets of one element, each as an oriented tuple."""
    if kind == "tri":
        a, b, c = elem
        return ((a, b), (b, c), (c, a))
    if kind == "quad":
        return tuple((elem[i], elem[(i + 1) % 4]) for i in range(4))
    a, b, c, d = elem
    # faces oriented with the opposite vertex on their positive side
    return ((b, c, d), (a, d, c), (a, b, d), (a, c, b))


class Mesh:
    """Vertices, elements and fixed flags.

    Parameters
    ----------
    points : (n, d) array_like
    elements : (m, k) array_like of int
    kind : {"tri", "quad", "tet"}, optional
        Inferred from ``k`` and ``d`` when omitted (4-vertex planar elements
        are quads).
    fixed : (n,) bool array_like, optional
        Defaults to the vertices on the mesh boundary.
    """

    def __init__(self, points, elements, kind=None, fixed=None):
        self.points = np.array(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] not in (2, 3):
            raise UsageError("points must be an (n, 2) or (n, 3) array")
        self.elements = np.array(elements, dtype=np.int64).reshape(-1, len(elements[0]) if len(elements) else 3)
        self.kind = _infer_kind(self.elements.shape[1], self.dimension, kind)
        self._incident = None
        self._boundary = None
        if fixed is None:
            fixed = np.zeros(len(self.points), dtype=bool)
            fixed[list(self.boundary_vertices())] = True
        self.fixed = np.array(fixed, dtype=bool)
        if self.fixed.shape != (len(self.points),):
            raise UsageError("fixed flags must match the vertex count")

    @property
    def dimension(self):
        return self.points.shape[1]

    def copy(self):
        m = Mesh.__new__(Mesh)
        m.points = self.points.copy()
        m.elements = self.elements.copy()
        m.kind = self.kind
        m.fixed = self.fixed.copy()
        m._incident, m._boundary = self._incident, self._boundary
        return m

    def _in_range(self):
        return self.elements.size == 0 or (self.elements.min() >= 0 and self.elements.max() < len(self.points))

    def incident(self, v):
        if self._incident is None:
            inc = defaultdict(list)
            for e, elem in enumerate(self.elements):
                for u in elem:
                    inc[int(u)].append(e)
            self._incident = inc
        return self._incident.get(int(v), [])

    def facet_counts(self):
        counts = defaultdict(int)
        for elem in self.elements:
            for f in _facets(self.kind, tuple(int(u) for u in elem)):
                counts[tuple(sorted(f))] += 1
        return counts

    def boundary_vertices(self):
        if self._boundary is None:
            out = set()
            for f, n in self.facet_counts().items():
                if n == 1:
                    out.update(f)
            self._boundary = frozenset(out)
        return self._boundary

    def movable_vertices(self):
        """Interior, unfixed vertices in index order."""
        bnd = self.boundary_vertices()
        return [v for v in range(len(self.points))
                if not self.fixed[v] and v not in bnd and self.incident(v)]

    def neighbors(self, v):
        """Vertices sharing an element edge with ``v``."""
        out = set()
        for e in self.incident(v):
            elem = [int(u) for u in self.elements[e]]
            if self.kind == "quad":
                i = elem.index(v)
                out.update((elem[(i + 1) % 4], elem[(i - 1) % 4]))
            else:
                out.update(u for u in elem if u != v)
        return sorted(out)

    def element_points(self, e=None):
        return self.points[self.elements if e is None else self.elements[e]]


# ----------------------------------------------------------------------------
# patches
# ----------------------------------------------------------------------------

@dataclass
class Patch:
    """A movable vertex and the fixed parts of its incident elements.

    Any point strictly inside ``domain`` gives positively oriented
    (and, for quads, convex) elements.
    """

    center_vertex: object
    stencils: list
    domain: ConvexRegion
    element_kind: str
    position: np.ndarray = None
    elements: tuple = ()

    @property
    def dimension(self):
        return self.domain.dimension

    def terms(self, criteria):
        return [CostTerm(c, s) for c in criteria for s in self.stencils]

    def program(self, criteria):
        return QuasiconvexProgram(self.domain, self.terms(criteria))

    def kernel_empty(self):
        _, radius = chebyshev_center(self.domain)
        return not radius >= 0


def _element_rotation(kind, elem, v):
    """Element vertices reordered as (moving, fixed...) with orientation kept."""
    for rot in _ROTATIONS[kind]:
        if elem[rot[0]] == v:
            return [elem[i] for i in rot]
    raise TopologyError(f"vertex {v} is not in element {elem}")


def _check_closed(kind, fixed_lists, v):
    if kind in ("tri", "quad"):
        edges = []
        for f in fixed_lists:
            edges.extend(zip(f[:-1], f[1:]))
        succ = {}
        for a, b in edges:
            if a in succ:
                raise TopologyError(f"star of vertex {v} is not a simple cycle")
            succ[a] = b
        if set(succ) != set(succ.values()):
            raise TopologyError(f"star of vertex {v} is open")
        start = next(iter(succ))
        seen, cur = 1, succ[start]
        while cur != start:
            cur = succ[cur]
            seen += 1
        if seen != len(succ):
            raise TopologyError(f"star of vertex {v} has several cycles")
    else:
        directed = defaultdict(int)
        for a, b, c in fixed_lists:
            for e in ((a, b), (b, c), (c, a)):
                directed[e] += 1
        for (a, b), n in directed.items():
            if n != 1 or directed.get((b, a), 0) != 1:
                raise TopologyError(f"star of vertex {v} is not a closed surface")


def _domain_for(kind, stencils, d):
    hs = []
    for s in stencils:
        F = s.fixed_vertices
        if kind == "tri":
            hs.append(Halfspace.left_of(F[0], F[1]))
        elif kind == "quad":
            hs.extend(quad_domain_constraints(s))
        else:
            hs.append(Halfspace.positive_side(F[0], F[1], F[2]))
    pts = np.concatenate([s.fixed_vertices for s in stencils])
    hs.extend(bounding_box_region(pts))
    return ConvexRegion(hs, d)


def extract_patch(mesh, v):
    """Patch of an interior movable vertex.

    Raises ``NotSmoothableError`` for fixed or boundary vertices and
    ``TopologyError`` for stars that are not closed.
    """
    v = int(v)
    if not 0 <= v < len(mesh.points):
        raise UsageError(f"vertex {v} out of range")
    if mesh.fixed[v]:
        raise NotSmoothableError(f"vertex {v} is fixed")
    if v in mesh.boundary_vertices():
        raise NotSmoothableError(f"vertex {v} is on the boundary")
    inc = mesh.incident(v)
    if not inc:
        raise NotSmoothableError(f"vertex {v} has no incident elements")
    fixed_lists = []
    for e in inc:
        rot = _element_rotation(mesh.kind, [int(u) for u in mesh.elements[e]], v)
        fixed_lists.append(rot[1:])
    _check_closed(mesh.kind, fixed_lists, v)
    try:
        stencils = [ElementStencil(mesh.points[f], mesh.kind) for f in fixed_lists]
        domain = _domain_for(mesh.kind, stencils, mesh.dimension)
    except (UsageError, DegenerateElementError) as exc:
        raise DegenerateElementError(f"vertex {v}: {exc}") from None
    return Patch(v, stencils, domain, mesh.kind, mesh.points[v].copy(), tuple(inc))


def patch_from_polygon(boundary, kind="tri", position=None):
    """Star patch around a free vertex joined to a counterclockwise polygon.

    For ``kind="tri"`` every polygon edge makes one triangle. For
    ``kind="quad"`` the polygon has even length: even-indexed vertices are
    joined to the free vertex and odd-indexed ones are opposite corners.
    """
    B = np.array(boundary, dtype=float)
    n = len(B)
    if kind == "tri":
        stencils = [ElementStencil(B[[i, (i + 1) % n]], "tri") for i in range(n)]
    elif kind == "quad":
        if n % 2 or n < 6:
            raise UsageError("quad patch boundary needs an even number (>= 6) of vertices")
        stencils = [ElementStencil(B[[i, (i + 1) % n, (i + 2) % n]], "quad") for i in range(0, n, 2)]
    else:
        raise UsageError("patch_from_polygon builds tri or quad patches")
    domain = _domain_for(kind, stencils, 2)
    pos = None if position is None else np.asarray(position, float)
    return Patch(None, stencils, domain, kind, pos)


def patch_from_faces(points, faces, position=None):
    """Tetrahedral star patch from boundary triangles ``faces``.

    Each face ``(a, b, c)`` must have the free vertex on its positive side,
    i.e. ``orient3d(x, a, b, c) > 0``.
    """
    P = np.array(points, dtype=float)
    stencils = [ElementStencil(P[list(f)], "tet") for f in faces]
    domain = _domain_for("tet", stencils, 3)
    pos = None if position is None else np.asarray(position, float)
    return Patch(None, stencils, domain, "tet", pos)


def patch_from_stencils(stencils, position=None):
    stencils = list(stencils)
    kind = stencils[0].element_kind
    domain = _domain_for(kind, stencils, stencils[0].dimension)
    pos = None if position is None else np.asarray(position, float)
    return Patch(None, stencils, domain, kind, pos)


# ----------------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------------

@dataclass
class Violation:
    kind: str
    index: int
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def as_dict(self):
        return {"ok": self.ok, "violations": [
            {"kind": v.kind, "index": v.index, "message": v.message} for v in self.violations]}


def element_valid(kind, P):
    """Orientation (and quad convexity) test for one element's coordinates."""
    if kind == "tri":
        return bool(is_ccw(P[0], P[1], P[2]))
    if kind == "quad":
        return all(is_ccw(P[i - 1], P[i], P[(i + 1) % 4]) for i in range(4))
    return bool(is_positive_tet(P[0], P[1], P[2], P[3]))


def validate(mesh):
    """Itemized structural and orientation checks; never raises."""
    rep = ValidationReport()
    n = len(mesh.points)
    if not np.all(np.isfinite(mesh.points)):
        bad = np.flatnonzero(~np.all(np.isfinite(mesh.points), axis=1))
        for v in bad:
            rep.violations.append(Violation("coordinates", int(v), f"vertex {v} has non-finite coordinates"))
    index_ok = True
    for e, elem in enumerate(mesh.elements):
        if np.any(elem < 0) or np.any(elem >= n):
            rep.violations.append(Violation("index", e, f"element {e} references a vertex outside 0..{n - 1}"))
            index_ok = False
            continue
        if len(set(int(u) for u in elem)) != len(elem):
            rep.violations.append(Violation("duplicate", e, f"element {e} repeats a vertex"))
            continue
        P = mesh.points[elem]
        if mesh.kind == "quad":
            if not is_ccw(P[0], P[1], P[2]) and not is_ccw(P[1], P[2], P[3]):
                rep.violations.append(Violation("orientation", e, f"element {e} is not counterclockwise"))
            elif not element_valid("quad", P):
                rep.violations.append(Violation("convexity", e, f"quad {e} is not strictly convex"))
        elif not element_valid(mesh.kind, P):
            rep.violations.append(Violation("orientation", e, f"element {e} is inverted or degenerate"))
    if not index_ok:
        return rep
    for f, count in mesh.facet_counts().items():
        if count > 2:
            rep.violations.append(Violation("manifold", int(f[0]), f"facet {f} is shared by {count} elements"))
    bnd = mesh.boundary_vertices()
    for v in range(n):
        if v in bnd or not mesh.incident(v):
            continue
        fixed_lists = []
        for e in mesh.incident(v):
            elem = [int(u) for u in mesh.elements[e]]
            if len(set(elem)) != len(elem):
                break
            fixed_lists.append(_element_rotation(mesh.kind, elem, v)[1:])
        else:
            try:
                _check_closed(mesh.kind, fixed_lists, v)
            except TopologyError as exc:
                rep.violations.append(Violation("star", v, str(exc)))
    return rep


# ----------------------------------------------------------------------------
# smoothing
# ----------------------------------------------------------------------------

@dataclass
class SmoothConfig:
    """Options for ``smooth_vertex``, ``sweep`` and ``laplacian_smooth``.

    ``criteria`` is a list of Criterion (or a ``"NAME[:W],..."`` string).
    """

    criteria: list = field(default_factory=lambda: [criterion("min-angle")])
    passes: int = 5
    tol: float = 1e-9
    max_iter: int = 500
    seed: int = 0
    guarded: bool = True

    def __post_init__(self):
        if isinstance(self.criteria, str):
            from .criteria import parse_criteria
            self.criteria = parse_criteria(self.criteria)
        self.criteria = list(self.criteria)
        if self.passes < 0:
            raise UsageError("passes must be nonnegative")
        if self.tol <= 0:
            raise UsageError("tol must be positive")

    @property
    def special(self):
        flags = {c.quasiconvex == "no" for c in self.criteria}
        if len(flags) > 1:
            raise UsageError("cannot mix quasiconvex and non-quasiconvex criteria in one mixture")
        return flags == {True}


@dataclass
class SmoothResult:
    vertex: int
    moved: bool
    old_cost: float
    new_cost: float
    old_position: np.ndarray
    new_position: np.ndarray
    diagnostic: str = ""


def _relocated_valid(mesh, v, x):
    for e in mesh.incident(v):
        P = mesh.points[mesh.elements[e]].copy()
        P[list(mesh.elements[e]).index(v)] = x
        if not element_valid(mesh.kind, P):
            return False
    return True


def place(patch, config):
    """Optimal position for ``patch`` under ``config``: ``(point, cost)``."""
    if not config.criteria:
        raise UsageError("no criteria configured")
    program = patch.program(config.criteria)
    if config.special:
        return special_place(program, tol=config.tol)
    start = patch.position
    if start is not None and not (program.feasible(start, slack=0.0)
                                  and np.isfinite(program.objective(start))):
        start = None
    res = solve(program, start=start, tol=config.tol, max_iter=config.max_iter, seed=config.seed)
    if res.status == "empty_domain":
        raise EmptyDomainError("patch kernel is empty")
    return res.x, res.t


def smooth_vertex(mesh, v, config):
    """Optimize one vertex in place; the move is kept only on strict improvement."""
    patch = extract_patch(mesh, v)
    special = config.special  # raises on mixed mixtures
    x_old = mesh.points[v].copy()
    terms = patch.terms(config.criteria)
    old = patch_cost(terms, x_old)
    if patch.kernel_empty():
        return SmoothResult(v, False, old, old, x_old, x_old, "empty_domain")
    x_new, _ = place(patch, config)
    new = patch_cost(terms, x_new)
    margin = max(1e-12, 1e-9 * abs(old)) if np.isfinite(old) else 0.0
    if not new < old - margin:
        return SmoothResult(v, False, old, new, x_old, x_old, "no_improvement")
    if not _relocated_valid(mesh, v, x_new):
        return SmoothResult(v, False, old, new, x_old, x_old, "invalid_move")
    mesh.points[v] = x_new
    return SmoothResult(v, True, old, new, x_old, x_new.copy(), "special" if special else "")


@dataclass
class SweepStats:
    """Counters and quality summaries of a smoothing run.

    ``min_quality_*`` hold the worst element value per criterion in natural
    units: the minimum for ``maximize_min`` criteria and the maximum for
    ``minimize_max`` ones.
    """

    vertices_visited: int = 0
    moves_accepted: int = 0
    passes_run: int = 0
    min_quality_before: dict = field(default_factory=dict)
    min_quality_after: dict = field(default_factory=dict)
    objective_trace: list = field(default_factory=list)
    move_trace: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def as_dict(self):
        return {
            "vertices_visited": self.vertices_visited,
            "moves_accepted": self.moves_accepted,
            "passes_run": self.passes_run,
            "min_quality_before": self.min_quality_before,
            "min_quality_after": self.min_quality_after,
            "objective_trace": self.objective_trace,
            "move_trace": self.move_trace,
            "skipped": [{"vertex": v, "reason": r} for v, r in self.skipped],
        }


def worst_quality(mesh, crit):
    q = element_quality(crit, mesh.element_points(), mesh.kind)
    return float(np.min(q) if crit.sense == MAXIMIZE_MIN else np.max(q))


def _worst_all(mesh, criteria):
    return {c.kind: worst_quality(mesh, c) for c in criteria}


def mixture_objective(mesh, criteria):
    """Global canonical objective ``max_c w_c * worst cost_c`` over all elements."""
    vals = []
    for c in criteria:
        w = worst_quality(mesh, c)
        vals.append(c.weight * (-w if c.sense == MAXIMIZE_MIN else w))
    return float(max(vals)) if vals else 0.0


def _require_valid(mesh):
    rep = validate(mesh)
    if not rep.ok:
        raise ValidationError(f"invalid mesh: {rep.violations[0].message}", rep)


def sweep(mesh, config, callback=None):
    """Gauss-Seidel smoothing passes over movable vertices in index order.

    Stops after ``config.passes`` passes or a pass without accepted moves.
    ``callback(mesh, result)`` is called after every accepted move.
    """
    _require_valid(mesh)
    _ = config.special
    stats = SweepStats()
    stats.min_quality_before = _worst_all(mesh, config.criteria)
    stats.objective_trace.append(mixture_objective(mesh, config.criteria))
    for _pass in range(config.passes):
        accepted = 0
        stats.passes_run += 1
        for v in mesh.movable_vertices():
            stats.vertices_visited += 1
            try:
                res = smooth_vertex(mesh, v, config)
            except (EmptyDomainError, TopologyError, DegenerateElementError) as exc:
                stats.skipped.append((v, str(exc)))
                continue
            if res.diagnostic == "empty_domain":
                stats.skipped.append((v, "empty_domain"))
            if res.moved:
                accepted += 1
                stats.moves_accepted += 1
                stats.move_trace.append(mixture_objective(mesh, config.criteria))
                if callback is not None:
                    callback(mesh, res)
        stats.objective_trace.append(mixture_objective(mesh, config.criteria))
        if accepted == 0:
            break
    stats.min_quality_after = _worst_all(mesh, config.criteria)
    return stats


def laplacian_smooth(mesh, config, guarded=None, callback=None):
    """Move each movable vertex to the centroid of its edge neighbours.

    With ``guarded`` (the default from ``config.guarded``) a move is taken
    only if every incident element stays valid; the unguarded variant can
    produce inverted elements.
    """
    _require_valid(mesh)
    guarded = config.guarded if guarded is None else guarded
    stats = SweepStats()
    stats.min_quality_before = _worst_all(mesh, config.criteria)
    if config.criteria:
        stats.objective_trace.append(mixture_objective(mesh, config.criteria))
    scale = float(np.max(np.ptp(mesh.points, axis=0))) or 1.0
    for _pass in range(config.passes):
        accepted = 0
        stats.passes_run += 1
        for v in mesh.movable_vertices():
            stats.vertices_visited += 1
            nb = mesh.neighbors(v)
            c = mesh.points[nb].mean(axis=0)
            if np.linalg.norm(c - mesh.points[v]) <= 1e-12 * scale:
                continue
            if guarded and not _relocated_valid(mesh, v, c):
                stats.skipped.append((v, "invalid_move"))
                continue
            old = mesh.points[v].copy()
            mesh.points[v] = c
            accepted += 1
            stats.moves_accepted += 1
            if callback is not None:
                callback(mesh, SmoothResult(v, True, np.nan, np.nan, old, c.copy(), "laplacian"))
        if config.criteria:
            stats.objective_trace.append(_safe_objective(mesh, config.criteria))
        if accepted == 0:
            break
    stats.min_quality_after = _worst_all(mesh, config.criteria)
    return stats


def _safe_objective(mesh, criteria):
    with np.errstate(invalid="ignore"):
        return mixture_objective(mesh, criteria)


def quality_report(mesh, criteria, bins=32):
    """Per-criterion ``{min, max, mean, histogram}`` of element qualities."""
    out = {}
    for c in criteria:
        if isinstance(c, str):
            c = criterion(c)
        q = element_quality(c, mesh.element_points(), mesh.kind)
        finite = q[np.isfinite(q)]
        if len(finite):
            lo, hi = float(finite.min()), float(finite.max())
            counts, edges = np.histogram(finite, bins=bins, range=(lo, hi) if hi > lo else (lo - 0.5, lo + 0.5))
        else:
            counts, edges = np.zeros(bins, int), np.zeros(bins + 1)
        out[c.kind] = {
            "unit": c.unit,
            "sense": c.sense,
            "min": float(q.min()) if len(q) else float("nan"),
            "max": float(q.max()) if len(q) else float("nan"),
            "mean": float(q.mean()) if len(q) else float("nan"),
            "histogram": {"edges": [float(e) for e in edges], "counts": [int(k) for k in counts]},
            "degenerate": int(np.sum(~np.isfinite(q))),
        }
    return out
