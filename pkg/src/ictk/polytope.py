"""The pre-image polytope {P_X in simplex : P_X W_Z = G_Z}.

Feasibility is decided by a phase-one LP. Vertices are found by scanning
every basis of the equality system, which is exact and cheap for the small
input alphabets this package targets (at most ``MAX_ENUM_INPUTS`` symbols).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from .prob import as_cond_pmf, as_pmf, push_forward, total_variation

#: a package limit on |X| for exhaustive enumeration, not a property of the problem
MAX_ENUM_INPUTS = 24
_CHUNK = 50_000
_NEG_TOL = 1e-12
_DEDUP_TV = 1e-8


class InfeasibleTargetError(ValueError):
    """The target type has an empty pre-image."""


class EnumerationLimitError(ValueError):
    """The input alphabet is too large for exhaustive basis enumeration."""


@dataclass(frozen=True)
class PreimagePolytope:
    channel_z: np.ndarray
    target: np.ndarray
    equality_tolerance: float = 1e-9

    def __post_init__(self):
        w = as_cond_pmf(self.channel_z)
        g = as_pmf(self.target)
        if w.shape[1] != g.size:
            raise ValueError(
                f"channel has {w.shape[1]} outputs but the target has {g.size} entries"
            )
        if not self.equality_tolerance > 0:
            raise ValueError("equality_tolerance must be positive")
        object.__setattr__(self, "channel_z", w)
        object.__setattr__(self, "target", g)

    @classmethod
    def simplex(cls, n_inputs: int) -> "PreimagePolytope":
        """The unconstrained case: every input pmf is admissible."""
        return cls(np.ones((n_inputs, 1)), np.ones(1))

    @property
    def n_inputs(self) -> int:
        return self.channel_z.shape[0]

    def equality_system(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with A p = b encoding normalization and the push-forward."""
        a = np.vstack([np.ones(self.n_inputs), self.channel_z.T])
        b = np.concatenate([[1.0], self.target])
        return a, b

    def contains(self, p, tol: float | None = None) -> bool:
        tol = self.equality_tolerance if tol is None else tol
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n_inputs,) or np.any(p < -_NEG_TOL) or abs(p.sum() - 1) > tol:
            return False
        return total_variation(push_forward(p, self.channel_z), self.target) <= tol


@dataclass(frozen=True)
class VertexSet:
    vertices: np.ndarray  # (k, |X|), lexicographically sorted rows
    exact: bool = True  # False when some vertex is degenerate
    rank: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


def _polish(poly: PreimagePolytope, p: np.ndarray) -> np.ndarray | None:
    """Least-norm correction of ``p`` on its support so the equalities hold tightly."""
    a, b = poly.equality_system()
    p = np.clip(p, 0.0, None)
    support = p > 1e-13
    if not support.any():
        return None
    a_s = a[:, support]
    d = np.linalg.lstsq(a_s, b - a_s @ p[support], rcond=None)[0]
    q = p.copy()
    q[support] += d
    if np.any(q < -_NEG_TOL):
        return None
    q = np.clip(q, 0.0, None)
    return q / q.sum()


def is_feasible(poly: PreimagePolytope) -> tuple[bool, np.ndarray | None]:
    """Decide whether the pre-image is non-empty; return a witness if so.

    Infeasibility is a normal answer, not an error. A witness always
    re-verifies ``TV(push_forward(w), target) <= equality_tolerance``.
    """
    a, b = poly.equality_system()
    nx, nz = poly.n_inputs, poly.target.size
    # min sum(s+ + s-)  s.t.  sum p = 1,  W^T p + s+ - s- = g,  p, s >= 0
    a_eq = np.zeros((1 + nz, nx + 2 * nz))
    a_eq[:, :nx] = a
    a_eq[1:, nx:nx + nz] = np.eye(nz)
    a_eq[1:, nx + nz:] = -np.eye(nz)
    c = np.concatenate([np.zeros(nx), np.ones(2 * nz)])
    res = linprog(c, A_eq=a_eq, b_eq=b, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0 or res.fun > 1e-6:
        return False, None
    w = _polish(poly, res.x[:nx])
    if w is not None and poly.contains(w):
        return True, w
    if nx <= MAX_ENUM_INPUTS:
        verts = _basic_feasible_solutions(poly)
        if len(verts.vertices):
            return True, verts.vertices[0]
    return False, None


def _independent_rows(a: np.ndarray) -> np.ndarray:
    _, r, piv = linalg.qr(a.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int((diag > 1e-10 * max(diag[0], 1.0)).sum())
    return np.sort(piv[:rank])


def _dedup_sorted(verts: np.ndarray) -> np.ndarray:
    if len(verts) == 0:
        return verts
    order = np.lexsort(np.round(verts, 12).T[::-1])
    verts = verts[order]
    keep: list[np.ndarray] = []
    for v in verts:
        if all(0.5 * np.abs(v - k).sum() > _DEDUP_TV for k in keep):
            keep.append(v)
    return np.array(keep)


def _basic_feasible_solutions(poly: PreimagePolytope) -> VertexSet:
    a, b = poly.equality_system()
    rows = _independent_rows(a)
    a_r, b_r = a[rows], b[rows]
    r, nx = a_r.shape
    tol = poly.equality_tolerance
    found: list[np.ndarray] = []
    degenerate = False
    combos = itertools.combinations(range(nx), r)
    while True:
        idx = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64)
        if idx.size == 0:
            break
        bases = np.transpose(a_r[:, idx], (1, 0, 2))  # (k, r, r)
        s = np.linalg.svd(bases, compute_uv=False)
        ok = s[:, -1] > 1e-10 * np.maximum(s[:, 0], 1.0)
        if not ok.any():
            continue
        idx, bases = idx[ok], bases[ok]
        xb = np.linalg.solve(bases, np.broadcast_to(b_r, (len(idx), r))[..., None])[..., 0]
        ok = np.all(xb >= -_NEG_TOL, axis=1)
        for basis, x in zip(idx[ok], xb[ok]):
            p = np.zeros(nx)
            p[basis] = np.clip(x, 0.0, None)
            if np.max(np.abs(a @ p - b)) > tol:
                continue
            p /= p.sum()
            if (p > _NEG_TOL).sum() < r:
                degenerate = True
            found.append(p)
    verts = _dedup_sorted(np.array(found).reshape(-1, nx))
    for v in verts:
        v.setflags(write=False)
    verts.setflags(write=False)
    return VertexSet(verts, exact=not degenerate, rank=r)


def enumerate_vertices(poly: PreimagePolytope) -> VertexSet:
    """All basic feasible solutions of the pre-image, deduplicated and sorted.

    The polytope is the convex hull of the returned vertices.
    """
    if poly.n_inputs > MAX_ENUM_INPUTS:
        raise EnumerationLimitError(
            f"|X| = {poly.n_inputs} exceeds the enumeration limit of {MAX_ENUM_INPUTS} "
            "(a package limit, not a property of the problem)"
        )
    verts = _basic_feasible_solutions(poly)
    if len(verts.vertices) == 0:
        raise InfeasibleTargetError("the target interference type has an empty pre-image")
    return verts


def lp_maximize(poly: PreimagePolytope, objective, vertices: VertexSet | None = None):
    """Maximize a linear function over the polytope by scanning its vertices.

    Returns ``(argmax, value)``; ties go to the lexicographically first vertex.
    """
    verts = enumerate_vertices(poly) if vertices is None else vertices
    c = np.asarray(objective, dtype=float)
    if c.shape != (poly.n_inputs,):
        raise ValueError(f"objective must have {poly.n_inputs} entries")
    vals = verts.vertices @ c
    i = int(np.argmax(vals))
    return verts.vertices[i], float(vals[i])
