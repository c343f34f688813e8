"""Quality criteria as canonical per-element cost functions.

Every criterion is turned into a cost to be *minimized*: criteria whose
quality should be large (``maximize_min``) cost ``-q``, the others cost
``q``. A degenerate or inverted element costs ``+inf``.

A ``CostTerm`` binds a criterion to the fixed vertices of one element
incident to the moving vertex; evaluation goes through the kernels in
:mod:`qcsmooth.kernels`.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._codes import CODE, NFIXED, NPIECES
from .errors import DegenerateElementError, UsageError
from .geometry import Halfspace, as_point, orient2d

MINIMIZE_MAX = "minimize_max"
MAXIMIZE_MIN = "maximize_min"

ELEMENT_DIMENSION = {"tri": 2, "quad": 2, "tet": 3}

# name -> (sense, quasiconvex flag, natural unit)
_REGISTRY = {
    "min-angle": (MAXIMIZE_MIN, "yes", "rad"),
    "max-angle-ext": (MINIMIZE_MAX, "yes", "rad"),
    "max-angle": (MINIMIZE_MAX, "no", "rad"),
    "area-min": (MINIMIZE_MAX, "yes", "area"),
    "area-max": (MAXIMIZE_MIN, "yes", "area"),
    "ext-altitude-min": (MINIMIZE_MAX, "yes", "length"),
    "ext-altitude-max": (MAXIMIZE_MIN, "yes", "length"),
    "int-altitude-min": (MAXIMIZE_MIN, "yes", "length"),
    "edge-length": (MINIMIZE_MAX, "yes", "length"),
    "diameter": (MINIMIZE_MAX, "yes", "length"),
    "aspect-ratio": (MINIMIZE_MAX, "yes", "1"),
    "perimeter": (MINIMIZE_MAX, "yes", "length"),
    "perimeter-max-min": (MAXIMIZE_MIN, "no", "length"),
    "containing-circle": (MINIMIZE_MAX, "yes", "length"),
    "inradius": (MAXIMIZE_MIN, "yes", "length"),
    "bank-smith": (MAXIMIZE_MIN, "yes", "1"),
    "circumradius": (MINIMIZE_MAX, "no", "length"),
    "quad-width": (MAXIMIZE_MIN, "yes", "length"),
    "quad-containing-circle": (MINIMIZE_MAX, "yes", "length"),
    "quad-diameter": (MINIMIZE_MAX, "yes", "length"),
    "quad-inradius": (MAXIMIZE_MIN, "conjectured", "length"),
    "volume-min": (MINIMIZE_MAX, "yes", "volume"),
    "volume-max": (MAXIMIZE_MIN, "yes", "volume"),
    "altitude": (MAXIMIZE_MIN, "yes", "length"),
    "face-area": (MINIMIZE_MAX, "yes", "area"),
    "total-surface": (MINIMIZE_MAX, "yes", "area"),
    "total-edge-length": (MINIMIZE_MAX, "yes", "length"),
    "containing-sphere": (MINIMIZE_MAX, "yes", "length"),
    "dihedral-fixed-axis": (MINIMIZE_MAX, "yes", "rad"),
    "solid-angle-interior": (MAXIMIZE_MIN, "yes", "sr"),
    "solid-angle-exterior": (MAXIMIZE_MIN, "yes", "sr"),
}

CRITERION_NAMES = tuple(_REGISTRY)

# criteria handled by special_solvers rather than the quasiconvex solver
SPECIAL_NAMES = tuple(n for n, v in _REGISTRY.items() if v[1] == "no")


def _kinds_for(name):
    return tuple(k for k in ("tri", "quad", "tet") if (name, k) in CODE)


@dataclass(frozen=True)
class Criterion:
    """Descriptor of one quality measure.

    ``dimension`` is 2 or 3 when the criterion only applies in one
    dimension and ``None`` when it applies in both (``edge-length``).
    """

    kind: str
    sense: str
    weight: float
    quasiconvex: str
    element_kinds: tuple
    dimension: object
    unit: str = "1"

    def __post_init__(self):
        if not (np.isfinite(self.weight) and self.weight > 0):
            raise UsageError(f"criterion weight must be positive, got {self.weight}")

    @property
    def name(self):
        return self.kind

    def code(self, element_kind):
        try:
            return CODE[(self.kind, element_kind)]
        except KeyError:
            raise UsageError(
                f"criterion {self.kind!r} does not apply to {element_kind} elements "
                f"(valid: {', '.join(self.element_kinds)})") from None


def criterion(name, weight=1.0):
    """Look up a criterion by its CLI name."""
    if name not in _REGISTRY:
        raise UsageError(f"unknown criterion {name!r}; valid names: {', '.join(CRITERION_NAMES)}")
    sense, qc, unit = _REGISTRY[name]
    kinds = _kinds_for(name)
    dims = sorted({ELEMENT_DIMENSION[k] for k in kinds})
    return Criterion(kind=name, sense=sense, weight=float(weight), quasiconvex=qc,
                     element_kinds=kinds, dimension=dims[0] if len(dims) == 1 else None,
                     unit=unit)


def parse_criteria(text):
    """Parse ``"NAME[:WEIGHT][,NAME[:WEIGHT]...]"`` into a list of criteria."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty criterion in {text!r}")
        name, _, w = item.partition(":")
        try:
            weight = float(w) if w else 1.0
        except ValueError:
            raise UsageError(f"bad weight {w!r} for criterion {name!r}") from None
        out.append(criterion(name.strip(), weight))
    if len({c.kind for c in out}) != len(out):
        raise UsageError(f"criterion listed twice in {text!r}")
    return out


@dataclass(frozen=True)
class ElementStencil:
    """Fixed vertices of one element incident to the moving vertex.

    Orientation: with the moving vertex ``x`` prepended, triangles
    ``(x, a, b)`` and quads ``(x, v1, v2, v3)`` are counterclockwise and
    tetrahedra ``(x, a, b, c)`` have ``(a-x) . ((b-x) x (c-x)) > 0``.
    """

    fixed_vertices: np.ndarray
    element_kind: str

    def __post_init__(self):
        if self.element_kind not in NFIXED:
            raise UsageError(f"unknown element kind {self.element_kind!r}")
        F = np.array([as_point(p) for p in self.fixed_vertices], dtype=float)
        k = NFIXED[self.element_kind]
        if F.shape[0] != k:
            raise UsageError(f"{self.element_kind} stencil needs {k} fixed vertices, got {F.shape[0]}")
        if F.shape[1] != ELEMENT_DIMENSION[self.element_kind]:
            raise UsageError(f"{self.element_kind} stencil must be {ELEMENT_DIMENSION[self.element_kind]}-d")
        for i in range(k):
            for j in range(i):
                if np.array_equal(F[i], F[j]):
                    raise UsageError("stencil fixed vertices must be distinct")
        F.setflags(write=False)
        object.__setattr__(self, "fixed_vertices", F)

    @property
    def dimension(self):
        return self.fixed_vertices.shape[1]


@dataclass(frozen=True)
class CostTerm:
    criterion: Criterion
    stencil: ElementStencil

    def __post_init__(self):
        self.criterion.code(self.stencil.element_kind)  # compatibility check

    @property
    def code(self):
        return self.criterion.code(self.stencil.element_kind)

    @property
    def npieces(self):
        return NPIECES[self.code]


def pack_terms(terms):
    """Arrays ``(codes, weights, fixed)`` consumed by the kernels."""
    terms = list(terms)
    codes = np.array([t.code for t in terms], dtype=np.int32)
    weights = np.array([t.criterion.weight for t in terms], dtype=float)
    d = terms[0].stencil.dimension if terms else 2
    fixed = np.zeros((len(terms), 3, d))
    for i, t in enumerate(terms):
        F = t.stencil.fixed_vertices
        if F.shape[1] != d:
            raise UsageError("all terms of a program must share a dimension")
        fixed[i, :F.shape[0]] = F
    return codes, weights, fixed


def _points(x, d):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != d:
        raise UsageError(f"expected {d}-d points, got {X.shape[1]}-d")
    return X, single


def element_cost(term, x):
    """Unweighted canonical cost of ``term`` at ``x`` (a point or ``(m, d)`` array)."""
    codes, _, fixed = pack_terms([term])
    X, single = _points(x, term.stencil.dimension)
    c = kernels.eval_costs(codes, np.ones(1), fixed, X)
    return float(c[0]) if single else c


def patch_cost(terms, x):
    """``max_i w_i * element_cost_i(x)``; ``+inf`` if any element is degenerate."""
    terms = list(terms)
    if not terms:
        raise UsageError("patch_cost needs at least one term")
    codes, weights, fixed = pack_terms(terms)
    X, single = _points(x, terms[0].stencil.dimension)
    c = kernels.eval_costs(codes, weights, fixed, X)
    return float(c[0]) if single else c


def bank_smith_quality(a, b, c):
    """``4*sqrt(3) * area / (sum of squared edge lengths)``; 1 for equilateral."""
    a, b, c = as_point(a, 2), as_point(b, 2), as_point(c, 2)
    s2 = float(np.sum((b - a) ** 2) + np.sum((c - b) ** 2) + np.sum((a - c) ** 2))
    if s2 == 0.0:
        return 0.0
    area = 0.5 * abs(orient2d(a, b, c))
    if area <= 0.5e-13 * s2:
        return 0.0
    return 4.0 * np.sqrt(3.0) * area / s2


def quad_domain_constraints(stencil):
    """Halfplanes keeping quad ``(x, v1, v2, v3)`` convex and counterclockwise.

    ``x`` must lie across the diagonal ``v1 v3`` from ``v2`` and on the
    inner side of the edge lines ``v1 v2`` and ``v2 v3``.
    """
    if stencil.element_kind != "quad":
        raise UsageError("quad_domain_constraints needs a quad stencil")
    v1, v2, v3 = stencil.fixed_vertices
    scale = max(np.sum((v2 - v1) ** 2), np.sum((v3 - v2) ** 2), np.sum((v3 - v1) ** 2))
    if orient2d(v1, v2, v3) <= 1e-12 * scale:
        raise DegenerateElementError("quad fixed vertices are collinear or clockwise")
    return [Halfspace.left_of(v1, v3), Halfspace.left_of(v1, v2), Halfspace.left_of(v2, v3)]


# moving-vertex choices preserving orientation: (moving, fixed...)
_ROTATIONS = {
    "tri": ((0, 1, 2), (1, 2, 0), (2, 0, 1)),
    "quad": ((0, 1, 2, 3), (1, 2, 3, 0), (2, 3, 0, 1), (3, 0, 1, 2)),
    "tet": ((0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)),
}


def element_quality(crit, vertices, element_kind):
    """Natural-unit quality of whole elements.

    ``vertices`` is ``(n, k, d)``: ``n`` elements of ``k`` vertices in the
    element's own orientation. Each vertex takes a turn as the moving one
    and the worst value is reported, so the result is the element's
    minimum (``maximize_min``) or maximum (``minimize_max``) of the measure.
    Degenerate elements report ``-inf`` or ``+inf`` respectively.
    """
    if isinstance(crit, str):
        crit = criterion(crit)
    V = np.asarray(vertices, dtype=float)
    if V.ndim == 2:
        V = V[None]
    code = crit.code(element_kind)
    n, k, d = V.shape
    if n == 0:
        return np.zeros(0)
    codes = np.full(n, code, dtype=np.int32)
    worst = np.full(n, -np.inf)
    for rot in _ROTATIONS[element_kind]:
        fixed = np.zeros((n, 3, d))
        fixed[:, :k - 1] = V[:, list(rot[1:])]
        c = kernels.paired_costs(codes, np.ones(n), fixed, V[:, rot[0]])
        worst = np.maximum(worst, c)
    return -worst if crit.sense == MAXIMIZE_MIN else worst
