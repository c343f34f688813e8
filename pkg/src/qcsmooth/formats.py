"""Triangle-style ``.node``/``.ele`` meshes and JSON patch fixtures.

``.node``: header ``<n> <dim> <nattr> <nmarkers>`` then
``<index> <coords...> [attrs...] [marker]`` per vertex. ``.ele``: header
``<m> <nodes per element> <nattr>`` then ``<index> <vertex indices...>``.
Indexing is 0- or 1-based, detected from the first vertex line; element
indices use the same base. ``#`` starts a comment. A ``# kind: quad``
comment in the ``.ele`` file marks 4-node planar elements as quads (the
only reading for 4 nodes in 2-d; in 3-d 4 nodes are tetrahedra).
"""

import json
import math
import re

import numpy as np

from .errors import ParseError, UsageError
from .mesh import Mesh, patch_from_faces, patch_from_polygon, patch_from_stencils
from .criteria import ElementStencil

_KIND_RE = re.compile(r"#\s*kind\s*:\s*(\w+)", re.IGNORECASE)


def _lines(path):
    """``(line number, tokens)`` for non-blank lines, plus header comments."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path) from None
    out, comments = [], []
    for i, line in enumerate(raw, start=1):
        body, _, comment = line.partition("#")
        if comment:
            comments.append("#" + comment)
        toks = body.split()
        if toks:
            out.append((i, toks))
    return out, comments


def _ints(toks, path, line):
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(toks)!r}", path, line) from None


def _floats(toks, path, line):
    try:
        vals = [float(t) for t in toks]
    except ValueError:
        raise ParseError(f"expected numbers, got {' '.join(toks)!r}", path, line) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite coordinate", path, line)
    return vals


def read_node(path):
    """Return ``(points, markers or None, base)``."""
    lines, _ = _lines(path)
    if not lines:
        raise ParseError("empty node file", path)
    ln, head = lines[0]
    if len(head) < 2:
        raise ParseError("header needs at least <count> <dimension>", path, ln)
    head = _ints(head[:4], path, ln) + [0] * (4 - len(head[:4]))
    n, dim, nattr, nmark = head
    if dim not in (2, 3):
        raise ParseError(f"dimension must be 2 or 3, got {dim}", path, ln)
    if n < 0 or nattr < 0 or nmark not in (0, 1):
        raise ParseError("bad header counts", path, ln)
    body = lines[1:]
    if len(body) != n:
        where = body[n][0] if len(body) > n else (body[-1][0] if body else ln)
        raise ParseError(f"header declares {n} vertices, found {len(body)}", path, where)
    pts = np.zeros((n, dim))
    marks = np.zeros(n, dtype=np.int64) if nmark else None
    base = None
    for k, (i, toks) in enumerate(body):
        if len(toks) != 1 + dim + nattr + nmark:
            raise ParseError(f"expected {1 + dim + nattr + nmark} fields, got {len(toks)}", path, i)
        idx = _ints(toks[:1], path, i)[0]
        if base is None:
            if idx not in (0, 1):
                raise ParseError(f"first vertex index must be 0 or 1, got {idx}", path, i)
            base = idx
        if idx != k + base:
            raise ParseError(f"vertex index {idx} out of sequence (expected {k + base})", path, i)
        pts[k] = _floats(toks[1:1 + dim], path, i)
        if nmark:
            marks[k] = _ints(toks[-1:], path, i)[0]
    return pts, marks, 0 if base is None else base


def read_ele(path, n_vertices, base):
    """Return ``(elements, kind tag or None)`` with 0-based indices."""
    lines, comments = _lines(path)
    kind = None
    for c in comments:
        m = _KIND_RE.match(c.strip())
        if m:
            kind = m.group(1).lower()
    if not lines:
        raise ParseError("empty element file", path)
    ln, head = lines[0]
    head = _ints(head[:3], path, ln)
    if len(head) < 2:
        raise ParseError("header needs <count> <nodes per element>", path, ln)
    m, k = head[0], head[1]
    nattr = head[2] if len(head) > 2 else 0
    if k not in (3, 4):
        raise ParseError(f"nodes per element must be 3 or 4, got {k}", path, ln)
    body = lines[1:]
    if len(body) != m:
        where = body[m][0] if len(body) > m else (body[-1][0] if body else ln)
        raise ParseError(f"header declares {m} elements, found {len(body)}", path, where)
    elems = np.zeros((m, k), dtype=np.int64)
    for e, (i, toks) in enumerate(body):
        if len(toks) != 1 + k + nattr:
            raise ParseError(f"expected {1 + k + nattr} fields, got {len(toks)}", path, i)
        vals = _ints(toks[:1 + k], path, i)
        for v in vals[1:]:
            if not base <= v < n_vertices + base:
                raise ParseError(f"vertex {v} out of range ({base}..{n_vertices + base - 1})", path, i)
        elems[e] = np.array(vals[1:]) - base
    return elems, kind


def read_mesh(node_path, ele_path):
    """Read a mesh; nonzero boundary markers become fixed vertices.

    Without markers, boundary vertices are fixed (the :class:`Mesh` default).
    Boundary vertices are never moved whatever their marker says.
    """
    pts, marks, base = read_node(node_path)
    elems, kind = read_ele(ele_path, len(pts), base)
    d, k = pts.shape[1], elems.shape[1]
    if kind is not None and kind not in ("tri", "quad", "tet"):
        raise ParseError(f"unknown element kind {kind!r}", ele_path)
    expected = {(3, 2): "tri", (4, 2): "quad", (4, 3): "tet"}.get((k, d))
    if expected is None or (kind is not None and kind != expected):
        raise ParseError(f"{k}-node elements do not fit {d}-d vertices"
                         + (f" as {kind}" if kind else ""), ele_path)
    fixed = None if marks is None else marks != 0
    return Mesh(pts, elems, expected, fixed=fixed)


def _fmt(v):
    return "%.17g" % v


def write_mesh(mesh, node_path, ele_path):
    """Write 1-based files with a fixed-flag marker column."""
    n, d = mesh.points.shape
    rows = [f"{n} {d} 0 1"]
    for i, (p, f) in enumerate(zip(mesh.points, mesh.fixed), start=1):
        rows.append(" ".join([str(i), *(_fmt(c) for c in p), "1" if f else "0"]))
    with open(node_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    m, k = mesh.elements.shape
    rows = [f"# kind: {mesh.kind}", f"{m} {k} 0"]
    for i, elem in enumerate(mesh.elements, start=1):
        rows.append(" ".join([str(i), *(str(int(u) + 1) for u in elem)]))
    with open(ele_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


# ----------------------------------------------------------------------------
# patch fixtures
# ----------------------------------------------------------------------------

def load_patch(path):
    """Read a JSON patch fixture; returns ``(patch, fixture dict)``.

    Keys: ``dimension``, ``element_kind`` and one of ``boundary`` (ccw
    polygon, tri/quad), ``points`` + ``faces`` (tet) or ``stencils`` (list
    of fixed-vertex lists). ``position`` and ``expected`` are optional.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read fixture ({exc.strerror})", path) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    return patch_from_dict(data, path), data


def patch_from_dict(data, path=None):
    if not isinstance(data, dict):
        raise ParseError("fixture must be a JSON object", path)
    kind = data.get("element_kind")
    dim = data.get("dimension")
    if kind not in ("tri", "quad", "tet"):
        raise ParseError(f"element_kind must be tri, quad or tet, got {kind!r}", path)
    if dim != (3 if kind == "tet" else 2):
        raise ParseError(f"dimension {dim!r} does not match element kind {kind}", path)
    pos = data.get("position")
    try:
        if "stencils" in data:
            stencils = [ElementStencil(np.array(s, float), kind) for s in data["stencils"]]
            if not stencils:
                raise ParseError("empty stencil list", path)
            return patch_from_stencils(stencils, pos)
        if kind == "tet":
            if "points" not in data or "faces" not in data:
                raise ParseError("tet fixture needs points and faces (or stencils)", path)
            return patch_from_faces(data["points"], data["faces"], pos)
        if "boundary" not in data:
            raise ParseError("fixture needs boundary (or stencils)", path)
        return patch_from_polygon(data["boundary"], kind, pos)
    except (UsageError, ValueError, TypeError, IndexError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad fixture geometry: {exc}", path) from None
