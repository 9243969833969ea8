import numpy as np
import pytest
from scipy.optimize import linprog

from ictk.polytope import (
    MAX_ENUM_INPUTS,
    EnumerationLimitError,
    InfeasibleTargetError,
    PreimagePolytope,
    enumerate_vertices,
    is_feasible,
    lp_maximize,
)
from ictk.prob import push_forward

from conftest import random_cond


def test_simplex_vertices_are_unit_vectors():
    vs = enumerate_vertices(PreimagePolytope.simplex(4))
    assert vs.exact
    assert np.array_equal(np.sort(vs.vertices, axis=0), np.sort(np.eye(4), axis=0))


def test_identity_channel_has_a_single_point():
    g = np.array([0.2, 0.3, 0.5])
    vs = enumerate_vertices(PreimagePolytope(np.eye(3), g))
    assert len(vs) == 1
    assert np.allclose(vs.vertices[0], g)


def test_constant_rows_only_admit_their_row():
    w = np.tile([0.3, 0.7], (3, 1))
    assert is_feasible(PreimagePolytope(w, [0.3, 0.7]))[0]
    assert not is_feasible(PreimagePolytope(w, [0.31, 0.69]))[0]
    with pytest.raises(InfeasibleTargetError):
        enumerate_vertices(PreimagePolytope(w, [0.5, 0.5]))


def test_witness_and_vertices_satisfy_constraints(rng):
    for _ in range(30):
        nx, nz = rng.integers(2, 6), rng.integers(2, 4)
        w = random_cond(rng, nx, nz, sparsity=0.3)
        poly = PreimagePolytope(w, push_forward(rng.dirichlet(np.ones(nx)), w))
        ok, wit = is_feasible(poly)
        assert ok and poly.contains(wit)
        vs = enumerate_vertices(poly)
        assert len(vs) >= 1
        for v in vs:
            assert poly.contains(v)
            assert (v > 1e-12).sum() <= vs.rank


def test_vertex_scan_matches_an_lp_solver(rng):
    for _ in range(30):
        nx, nz = rng.integers(2, 7), rng.integers(2, 4)
        w = random_cond(rng, nx, nz)
        poly = PreimagePolytope(w, push_forward(rng.dirichlet(np.ones(nx)), w))
        c = rng.normal(size=nx)
        _, val = lp_maximize(poly, c)
        a, b = poly.equality_system()
        ref = linprog(-c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        assert val == pytest.approx(-ref.fun, abs=1e-8)


def test_vertices_are_sorted_and_distinct(rng):
    w = random_cond(rng, 5, 2)
    vs = enumerate_vertices(PreimagePolytope(w, push_forward(np.full(5, 0.2), w))).vertices
    assert [tuple(v) for v in vs] == sorted(tuple(v) for v in vs)
    d = np.abs(vs[:, None, :] - vs[None, :, :]).sum(-1)
    assert np.all(d[~np.eye(len(vs), dtype=bool)] > 1e-8)


def test_enumeration_guard():
    poly = PreimagePolytope.simplex(MAX_ENUM_INPUTS + 1)
    with pytest.raises(EnumerationLimitError, match="enumeration limit"):
        enumerate_vertices(poly)
    # feasibility does not need enumeration
    assert is_feasible(poly)[0]


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError):
        PreimagePolytope(np.eye(2), [0.2, 0.3, 0.5])
