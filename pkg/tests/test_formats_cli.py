import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcsmooth.cli import main
from qcsmooth.errors import ParseError
from qcsmooth.formats import load_patch, read_mesh, write_mesh
from qcsmooth.generators import grid_mesh
from qcsmooth.geometry import is_ccw
from qcsmooth.mesh import Mesh


def write(path, text):
    path.write_text(text)
    return str(path)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out=out, err=err)
    return code, out.getvalue(), err.getvalue()


UNIT_NODE = "4 2 0 1\n1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n"
UNIT_ELE = "2 3 0\n1 1 2 3\n2 1 3 4\n"


# -- mesh files -----------------------------------------------------------------------

def test_unit_square_file(tmp_path):
    mesh = read_mesh(write(tmp_path / "a.node", UNIT_NODE), write(tmp_path / "a.ele", UNIT_ELE))
    assert mesh.kind == "tri" and mesh.elements.tolist() == [[0, 1, 2], [0, 2, 3]]
    assert all(is_ccw(*mesh.points[e]) for e in mesh.elements)
    assert mesh.fixed.all()


def test_zero_based_autodetect(tmp_path):
    node = "# zero based\n3 2 0 0\n0 0 0\n1 1 0\n2 0 1\n"
    ele = "1 3 0\n0 0 1 2\n"
    mesh = read_mesh(write(tmp_path / "z.node", node), write(tmp_path / "z.ele", ele))
    assert mesh.elements.tolist() == [[0, 1, 2]]


def test_out_of_range_vertex_names_line(tmp_path):
    ele = "2 3 0\n1 1 2 3\n2 1 3 99\n"
    with pytest.raises(ParseError) as info:
        read_mesh(write(tmp_path / "a.node", UNIT_NODE), write(tmp_path / "a.ele", ele))
    assert info.value.line == 3
    assert "99" in str(info.value) and "a.ele:3:" in str(info.value)


@pytest.mark.parametrize("node,ele,line", [
    ("5 2 0 1\n1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n", UNIT_ELE, None),   # too few vertices
    (UNIT_NODE, "3 3 0\n1 1 2 3\n2 1 3 4\n", None),                      # too few elements
    ("4 4 0 0\n1 0 0 0 0\n2 1 0 0 0\n3 1 1 0 0\n4 0 1 0 0\n", UNIT_ELE, 1),  # dimension 4
    ("4 2 0 1\n1 0 0 1\n2 1 zero 1\n3 1 1 1\n4 0 1 1\n", UNIT_ELE, 3),  # not a number
    ("4 2 0 1\n1 0 0 1\n3 1 0 1\n3 1 1 1\n4 0 1 1\n", UNIT_ELE, 3),     # index out of sequence
    (UNIT_NODE, "2 5 0\n1 1 2 3 4 1\n2 1 3 4 1 2\n", 1),               # 5 nodes per element
])
def test_parse_errors(tmp_path, node, ele, line):
    with pytest.raises(ParseError) as info:
        read_mesh(write(tmp_path / "b.node", node), write(tmp_path / "b.ele", ele))
    assert info.value.line is not None
    if line is not None:
        assert info.value.line == line


def test_quad_kind_header(tmp_path, fixtures_dir):
    mesh = read_mesh(fixtures_dir / "quad3.node", fixtures_dir / "quad3.ele")
    assert mesh.kind == "quad" and mesh.elements.shape == (9, 4)
    # 4-node elements in 2-d need the tag; a tet tag on planar vertices is rejected
    text = (fixtures_dir / "quad3.ele").read_text().replace("# kind: quad", "# kind: tet")
    with pytest.raises(ParseError):
        read_mesh(fixtures_dir / "quad3.node", write(tmp_path / "q.ele", text))


@pytest.mark.parametrize("name", ["unit_square", "equilateral", "grid10_noisy", "quad3",
                                  "octahedron"])
def test_fixture_roundtrip(tmp_path, fixtures_dir, name):
    a = read_mesh(fixtures_dir / f"{name}.node", fixtures_dir / f"{name}.ele")
    write_mesh(a, tmp_path / "o.node", tmp_path / "o.ele")
    b = read_mesh(tmp_path / "o.node", tmp_path / "o.ele")
    assert a.kind == b.kind
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.elements, b.elements)
    assert np.array_equal(a.fixed, b.fixed)


@given(n=st.integers(1, 6), noise=st.floats(0.0, 0.3), seed=st.integers(0, 2 ** 16),
       scale=st.floats(1e-6, 1e6), flags=st.integers(0, 2 ** 16))
def test_roundtrip_property(tmp_path_factory, n, noise, seed, scale, flags):
    mesh = grid_mesh(n, spacing=scale, noise=noise, seed=seed)
    fixed = mesh.fixed | (np.arange(len(mesh.points)) % 17 == flags % 17)
    mesh = Mesh(mesh.points, mesh.elements, "tri", fixed=fixed)
    d = tmp_path_factory.mktemp("rt")
    write_mesh(mesh, d / "m.node", d / "m.ele")
    back = read_mesh(d / "m.node", d / "m.ele")
    assert np.array_equal(back.points, mesh.points)
    assert np.array_equal(back.elements, mesh.elements)
    assert np.array_equal(back.fixed, mesh.fixed)


def test_patch_fixtures_parse(fixtures_dir):
    for name in ("square", "hexagon", "quad_star", "octahedron"):
        patch, data = load_patch(fixtures_dir / f"{name}.json")
        assert patch.element_kind == data["element_kind"]
        assert not patch.kernel_empty()


def test_bad_patch_fixture(tmp_path):
    with pytest.raises(ParseError):
        load_patch(write(tmp_path / "p.json", "{not json"))
    with pytest.raises(ParseError):
        load_patch(write(tmp_path / "p.json", json.dumps({"element_kind": "tri", "dimension": 3,
                                                          "boundary": [[0, 0]]})))


# -- CLI ----------------------------------------------------------------------------------

def test_place_square(fixtures_dir):
    code, out, _ = run("place", "--patch", fixtures_dir / "square.json", "--criterion", "min-angle")
    assert code == 0
    res = json.loads(out)
    assert np.allclose(res["point"], 0.0, atol=1e-6)
    assert res["objective"] == pytest.approx(-math.pi / 4, abs=1e-9)
    assert res["method"] == "qcp"


def test_quality_equilateral(fixtures_dir):
    args = ["quality", "--node", fixtures_dir / "equilateral.node", "--ele",
            fixtures_dir / "equilateral.ele", "--criterion", "min-angle"]
    code, out, _ = run(*args)
    assert code == 0
    assert json.loads(out)["min-angle"]["min"] == pytest.approx(1.0472, abs=1e-4)
    code, out, _ = run(*args, "--format", "csv")
    assert code == 0
    head, row = out.strip().splitlines()
    assert head.startswith("criterion,") and row.startswith("min-angle,")


def test_smooth_routing_and_outputs(tmp_path, fixtures_dir):
    mesh = ["--node", fixtures_dir / "grid10_noisy.node", "--ele", fixtures_dir / "grid10_noisy.ele"]
    code, out, _ = run("smooth", *mesh, "--criterion", "max-angle", "--passes", "1",
                       "--out", tmp_path / "s")
    assert code == 0
    stats = json.loads(out)
    assert stats["method"] == "optimize" and stats["valid"] is True
    assert json.loads((tmp_path / "s.json").read_text()) == stats
    smoothed = read_mesh(tmp_path / "s.node", tmp_path / "s.ele")
    assert np.array_equal(smoothed.elements, read_mesh(*mesh[1::2]).elements)
    code, _, err = run("smooth", *mesh, "--criterion", "max-angle,min-angle", "--out", tmp_path / "t")
    assert code == 2 and "usage" in err


def test_smooth_laplacian_flags(tmp_path, fixtures_dir):
    mesh = ["--node", fixtures_dir / "unit_square.node", "--ele", fixtures_dir / "unit_square.ele"]
    code, out, _ = run("smooth", *mesh, "--laplacian", "--out", tmp_path / "l")
    assert code == 0 and json.loads(out)["method"] == "laplacian"
    code, _, _ = run("smooth", *mesh, "--laplacian", "--unguarded-laplacian", "--out", tmp_path / "l")
    assert code == 2


def test_exit_codes(tmp_path, fixtures_dir):
    code, _, err = run("place", "--patch", fixtures_dir / "square.json", "--criterion", "no-such")
    assert code == 2 and "min-angle" in err  # valid names are listed
    assert run("frobnicate")[0] == 2
    assert run()[0] == 2
    bad = write(tmp_path / "x.ele", "2 3 0\n1 1 2 3\n2 1 3 99\n")
    code, _, err = run("validate", "--node", fixtures_dir / "unit_square.node", "--ele", bad)
    assert code == 1 and "x.ele:3:" in err
    node = write(tmp_path / "inv.node", "3 2 0 0\n1 0 0\n2 0 1\n3 1 0\n")
    ele = write(tmp_path / "inv.ele", "1 3 0\n1 1 2 3\n")
    code, out, _ = run("validate", "--node", node, "--ele", ele)
    assert code == 1 and json.loads(out)["ok"] is False
    code, out, _ = run("validate", "--node", fixtures_dir / "unit_square.node",
                       "--ele", fixtures_dir / "unit_square.ele")
    assert code == 0 and json.loads(out)["ok"] is True


@pytest.mark.parametrize("fixture,crit", [("square", "min-angle"), ("square", "area-max"),
                                          ("square", "max-angle"), ("hexagon", "min-angle"),
                                          ("quad_star", "quad-width"),
                                          ("octahedron", "solid-angle-interior")])
def test_place_agrees_with_oracle(fixtures_dir, fixture, crit):
    path = fixtures_dir / f"{fixture}.json"
    code, out, _ = run("place", "--patch", path, "--criterion", crit)
    assert code == 0
    placed = json.loads(out)
    code, out, _ = run("oracle", "--patch", path, "--criterion", crit, "--levels", "8")
    assert code == 0
    ref = json.loads(out)
    assert abs(placed["objective"] - ref["objective"]) <= max(1e-3, 1e-3 * abs(ref["objective"]))
    expected = json.loads(path.read_text()).get("expected", {}).get(crit)
    if expected is not None:
        assert placed["objective"] == pytest.approx(expected["objective"], abs=1e-6)
