"""Regenerate the shipped fixtures: ``python3 fixtures/make_fixtures.py``."""

import json
import math
from pathlib import Path

import numpy as np

from qcsmooth.formats import write_mesh
from qcsmooth.generators import grid_mesh
from qcsmooth.mesh import Mesh

HERE = Path(__file__).resolve().parent


def dump(name, data):
    (HERE / name).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def patches():
    dump("square.json", {
        "dimension": 2, "element_kind": "tri",
        "boundary": [[-1, -1], [1, -1], [1, 1], [-1, 1]],
        "position": [0.3, 0.2],
        "expected": {"min-angle": {"point": [0, 0], "objective": -math.pi / 4},
                     "area-max": {"point": [0, 0], "objective": -1.0},
                     "max-angle": {"point": [0, 0], "objective": math.pi / 2}},
    })
    hexagon = [[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)] for k in range(6)]
    dump("hexagon.json", {
        "dimension": 2, "element_kind": "tri", "boundary": hexagon,
        "position": [0.2, -0.1],
        "expected": {"min-angle": {"point": [0, 0], "objective": -math.pi / 3}},
    })
    dump("quad_star.json", {
        "dimension": 2, "element_kind": "quad",
        "boundary": [[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]],
        "position": [0.25, 0.1],
        "expected": {"quad-width": {"point": [0, 0], "objective": -1.0}},
    })
    pts = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    faces = []
    for sx, ix in ((1, 0), (-1, 1)):
        for sy, iy in ((1, 2), (-1, 3)):
            for sz, iz in ((1, 4), (-1, 5)):
                # orient so the origin sees each face positively
                f = [ix, iy, iz]
                if sx * sy * sz < 0:
                    f = [ix, iz, iy]
                faces.append(f)
    dump("octahedron.json", {
        "dimension": 3, "element_kind": "tet", "points": pts, "faces": faces,
        "position": [0.1, 0.05, -0.1],
        "expected": {"solid-angle-interior": {"point": [0, 0, 0], "objective": -math.pi / 2}},
    })


def meshes():
    write_mesh(Mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [(0, 1, 2), (0, 2, 3)], "tri"),
               HERE / "unit_square.node", HERE / "unit_square.ele")
    write_mesh(Mesh([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], [(0, 1, 2)], "tri"),
               HERE / "equilateral.node", HERE / "equilateral.ele")
    g = grid_mesh(10, noise=0.3, seed=0)
    write_mesh(g, HERE / "grid10_noisy.node", HERE / "grid10_noisy.ele")
    n = 3
    P = np.array([[i, j] for j in range(n + 1) for i in range(n + 1)], float)
    P[5] += [0.2, 0.15]
    P[10] += [-0.1, 0.2]
    quads = [(j * (n + 1) + i, j * (n + 1) + i + 1, (j + 1) * (n + 1) + i + 1, (j + 1) * (n + 1) + i)
             for j in range(n) for i in range(n)]
    write_mesh(Mesh(P, quads, "quad"), HERE / "quad3.node", HERE / "quad3.ele")
    oct_pts = [[0.2, -0.1, 0.15], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    data = json.loads((HERE / "octahedron.json").read_text())
    tets = [(0, *(v + 1 for v in f)) for f in data["faces"]]
    write_mesh(Mesh(oct_pts, tets, "tet"), HERE / "octahedron.node", HERE / "octahedron.ele")


if __name__ == "__main__":
    patches()
    meshes()
