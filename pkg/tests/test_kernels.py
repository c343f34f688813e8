"""The compiled and pure-Python kernels must agree."""

import numpy as np
import pytest

from qcsmooth import _pykernels, kernels
from qcsmooth._codes import ELEMENT_KIND, KERNEL_TABLE, NFIXED, NPIECES

compiled = pytest.importorskip("qcsmooth._ckernels")

DIM = {"tri": 2, "quad": 2, "tet": 3}


def random_terms(rng, kind, n):
    d = DIM[kind]
    fixed = np.zeros((n, 3, d))
    for j in range(n):
        if kind == "tri":
            fixed[j, :2] = rng.uniform(-1, 1, (2, d))
        elif kind == "quad":
            # three consecutive corners of a convex ccw quad
            ang = np.sort(rng.uniform(0, 2 * np.pi, 4))
            P = np.stack([np.cos(ang), np.sin(ang)], 1) * rng.uniform(0.5, 1.5)
            fixed[j] = P[1:]
        else:
            fixed[j] = rng.normal(size=(3, 3))
    return fixed


def test_piece_table_matches():
    assert tuple(compiled.npieces_table()) == NPIECES


@pytest.mark.parametrize("code", [c for c, *_ in KERNEL_TABLE])
def test_backends_agree_per_code(code):
    rng = np.random.default_rng(code)
    kind = ELEMENT_KIND[code]
    n, m = 6, 200
    fixed = random_terms(rng, kind, n)
    codes = np.full(n, code, dtype=np.int32)
    w = rng.uniform(0.5, 2.0, n)
    X = rng.uniform(-1.5, 1.5, (m, DIM[kind]))
    py = _pykernels.eval_pieces(codes, w, fixed, X)
    cc = compiled.eval_pieces(codes, w, fixed, X)
    assert py.shape == cc.shape == (m, n * NPIECES[code])
    assert np.array_equal(np.isinf(py), np.isinf(cc))
    fin = np.isfinite(py)
    assert np.allclose(py[fin], cc[fin], rtol=1e-9, atol=1e-12)
    c_py = _pykernels.eval_costs(codes, w, fixed, X)
    c_cc = compiled.eval_costs(codes, w, fixed, X)
    fin = np.isfinite(c_py)
    assert np.array_equal(fin, np.isfinite(c_cc))
    assert np.allclose(c_py[fin], c_cc[fin], rtol=1e-9, atol=1e-12)
    # paired evaluation: point j against term j
    Xp = X[:n]
    p_py = _pykernels.paired_costs(codes, w, fixed, Xp)
    p_cc = compiled.paired_costs(codes, w, fixed, Xp)
    fin = np.isfinite(p_py)
    assert np.array_equal(fin, np.isfinite(p_cc))
    assert np.allclose(p_py[fin], p_cc[fin], rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("kind", ["tri", "quad", "tet"])
def test_grid_argmin_agrees(kind):
    rng = np.random.default_rng(7)
    codes_for_kind = [c for c, _, k, _ in KERNEL_TABLE if k == kind]
    for code in codes_for_kind:
        n = 5
        fixed = random_terms(rng, kind, n)
        codes = np.full(n, code, dtype=np.int32)
        w = np.ones(n)
        X = rng.uniform(-1, 1, (3000, DIM[kind]))
        A = np.vstack([np.eye(DIM[kind]), -np.eye(DIM[kind])])
        b = np.full(2 * DIM[kind], 0.8)
        i_py, v_py = _pykernels.grid_argmin(codes, w, fixed, X, A, b, 1e-9)
        i_cc, v_cc = compiled.grid_argmin(codes, w, fixed, X, A, b, 1e-9)
        if np.isfinite(v_py):
            assert v_cc == pytest.approx(v_py, rel=1e-9, abs=1e-12)
        else:
            assert not np.isfinite(v_cc)


def test_backend_switch_roundtrip():
    prev = kernels.use_backend("python")
    try:
        assert kernels.backend_name() == "python"
    finally:
        kernels.use_backend(prev)
    assert kernels.backend_name() == prev
    with pytest.raises(ValueError):
        kernels.use_backend("gpu")


def test_degenerate_costs_are_infinite():
    codes = np.array([0], dtype=np.int32)
    fixed = np.zeros((1, 3, 2))
    fixed[0, :2] = [[0, 0], [1, 0]]
    X = np.array([[0.5, 0.0], [0.5, -0.3]])  # collinear, then clockwise
    for mod in (_pykernels, compiled):
        assert np.all(np.isinf(mod.eval_costs(codes, np.ones(1), fixed, X)))
