"""Integer codes shared by the compiled and pure-Python kernels.

Each code identifies one (criterion, element kind) pair. The kernels return,
for every term, a fixed number of smooth "pieces" whose maximum is the
term's canonical cost. The table below is mirrored by a C switch in
``_ckernels.pyx``; ``tests/test_kernels.py`` checks the two agree.
"""

# (code, criterion name, element kind, number of pieces)
KERNEL_TABLE = (
    (0, "min-angle", "tri", 3),
    (1, "max-angle-ext", "tri", 2),
    (2, "max-angle", "tri", 3),
    (3, "area-min", "tri", 1),
    (4, "area-max", "tri", 1),
    (5, "ext-altitude-min", "tri", 1),
    (6, "ext-altitude-max", "tri", 1),
    (7, "int-altitude-min", "tri", 2),
    (8, "edge-length", "tri", 2),
    (9, "diameter", "tri", 3),
    (10, "aspect-ratio", "tri", 3),
    (11, "perimeter", "tri", 1),
    (12, "perimeter-max-min", "tri", 1),
    (13, "containing-circle", "tri", 1),
    (14, "inradius", "tri", 1),
    (15, "bank-smith", "tri", 1),
    (16, "circumradius", "tri", 1),
    (17, "quad-width", "quad", 8),
    (18, "quad-containing-circle", "quad", 4),
    (19, "quad-diameter", "quad", 6),
    (20, "quad-inradius", "quad", 1),
    (21, "min-angle", "quad", 4),
    (22, "area-min", "quad", 1),
    (23, "area-max", "quad", 1),
    (24, "edge-length", "quad", 2),
    (25, "perimeter", "quad", 1),
    (26, "volume-min", "tet", 1),
    (27, "volume-max", "tet", 1),
    (28, "altitude", "tet", 4),
    (29, "edge-length", "tet", 3),
    (30, "face-area", "tet", 4),
    (31, "total-surface", "tet", 1),
    (32, "total-edge-length", "tet", 1),
    (33, "containing-sphere", "tet", 1),
    (34, "dihedral-fixed-axis", "tet", 3),
    (35, "solid-angle-interior", "tet", 1),
    (36, "solid-angle-exterior", "tet", 3),
)

CODE = {(name, kind): code for code, name, kind, _ in KERNEL_TABLE}
NPIECES = tuple(n for _, _, _, n in KERNEL_TABLE)
ELEMENT_KIND = tuple(kind for _, _, kind, _ in KERNEL_TABLE)

# number of fixed vertices per element kind
NFIXED = {"tri": 2, "quad": 3, "tet": 3}

# an element is degenerate when its normalized signed measure falls below this
DEGENERATE_TOL = 1e-13
