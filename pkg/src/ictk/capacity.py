"""Single-user capacity under an interference-type constraint.

``C(G_Z) = max { I(X;Y) : P_X W_Z = G_Z }`` is a concave maximization over
a polytope. It is solved with away-step Frank-Wolfe plus a corrective
re-weighting of the active vertices: the linear subproblem is a scan of the
exactly enumerated vertices, and the Frank-Wolfe gap
``max_v <grad, v - p>`` bounds the suboptimality, so it doubles as the
stopping certificate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .polytope import PreimagePolytope, enumerate_vertices, is_feasible
from .prob import (
    as_cond_pmf,
    as_pmf,
    mutual_information,
    mutual_information_gradient,
    push_forward,
)
from ._parallel import parallel_map

log = logging.getLogger(__name__)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LINE_SEARCH_STEPS = 60


@dataclass(frozen=True)
class SingleUserChannel:
    """DMC with intended output Y and interference output Z.

    Only the marginals ``P_{Y|X}`` and ``P_{Z|X}`` matter for the region.
    """

    p_y_given_x: np.ndarray
    p_z_given_x: np.ndarray

    def __post_init__(self):
        wy = as_cond_pmf(self.p_y_given_x)
        wz = as_cond_pmf(self.p_z_given_x)
        if wy.shape[0] != wz.shape[0]:
            raise ValueError(
                f"P_Y|X has {wy.shape[0]} inputs but P_Z|X has {wz.shape[0]}"
            )
        object.__setattr__(self, "p_y_given_x", wy)
        object.__setattr__(self, "p_z_given_x", wz)

    @property
    def n_inputs(self) -> int:
        return self.p_y_given_x.shape[0]


@dataclass(frozen=True)
class CapacityResult:
    rate: float  # bits per channel use; nan when infeasible
    optimizer: np.ndarray | None
    duality_gap: float
    iterations: int
    feasible: bool
    converged: bool = True
    trace: tuple = ()  # objective value after each iteration


def _infeasible() -> CapacityResult:
    return CapacityResult(math.nan, None, math.nan, 0, feasible=False, converged=False)


def _dot(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """<v, g> that treats 0 * inf as 0 (unsupported directions of the gradient)."""
    return np.where(v > 0, v * g, 0.0).sum(axis=-1)


def _line_search(f, p: np.ndarray, d: np.ndarray, gmax: float, f0: float):
    """Golden-section maximization of the concave ``f(p + t d)`` on [0, gmax]."""
    lo, hi = 0.0, gmax
    a = hi - _GOLDEN * (hi - lo)
    b = lo + _GOLDEN * (hi - lo)
    fa, fb = f(p + a * d), f(p + b * d)
    for _ in range(_LINE_SEARCH_STEPS):
        if fa < fb:
            lo, a, fa = a, b, fb
            b = lo + _GOLDEN * (hi - lo)
            fb = f(p + b * d)
        else:
            hi, b, fb = b, a, fa
            a = hi - _GOLDEN * (hi - lo)
            fa = f(p + a * d)
    # endpoints matter: gmax is a drop step, 0 guards monotonicity
    best_t, best_f = 0.0, f0
    fend = f(p + gmax * d)
    for t, ft in ((a, fa), (b, fb), (gmax, fend)):
        if ft > best_f:
            best_t, best_f = t, ft
    return best_t, best_f


def _correct(f, wy: np.ndarray, verts: np.ndarray, alpha: np.ndarray, fp: float):
    """Re-optimize the weights of the active vertices (fully-corrective step).

    Plain away-step iterations zig-zag when the optimum sits on a face spanned
    by several vertices; a small SLSQP solve over the face removes that. The
    result is accepted only if it improves the objective.
    """
    active = np.flatnonzero(alpha > 0)
    if len(active) < 2:
        return alpha, fp
    va = verts[active]

    def neg(a):
        return -f(a @ va)

    def neg_grad(a):
        g = mutual_information_gradient(np.clip(a @ va, 0.0, None), wy)
        return -np.minimum(_dot(va, g), 1e3)

    res = optimize.minimize(
        neg, alpha[active], jac=neg_grad, method="SLSQP",
        bounds=[(0.0, 1.0)] * len(active),
        constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0,
                      "jac": lambda a: np.ones_like(a)}],
        options={"ftol": 1e-16, "maxiter": 200},
    )
    a = np.clip(res.x, 0.0, None)
    a[a < 1e-15] = 0.0
    if a.sum() <= 0:
        return alpha, fp
    a /= a.sum()
    fa = f(a @ va)
    if fa <= fp:
        return alpha, fp
    out = np.zeros_like(alpha)
    out[active] = a
    return out, fa


def _frank_wolfe(wy: np.ndarray, verts: np.ndarray, tol: float, max_iter: int):
    k = len(verts)
    alpha = np.full(k, 1.0 / k)
    p = alpha @ verts

    def f(x):
        return mutual_information(np.clip(x, 0.0, None), wy)

    fp = f(p)
    trace = [fp]
    gap = math.inf
    it = 0
    for it in range(max_iter + 1):
        g = mutual_information_gradient(p, wy)
        scores = _dot(verts, g)
        ref = float(_dot(p, g))
        s = int(np.argmax(scores))
        gap = float(scores[s] - ref)
        if gap <= tol or it == max_iter:
            break
        active = np.flatnonzero(alpha > 0)
        a = int(active[np.argmin(scores[active])])
        away_gap = ref - float(scores[a])
        if gap >= away_gap or alpha[a] >= 1.0:
            d = verts[s] - p
            t, fp = _line_search(f, p, d, 1.0, fp)
            alpha *= 1.0 - t
            alpha[s] += t
        else:
            gmax = alpha[a] / (1.0 - alpha[a])
            d = p - verts[a]
            t, fp = _line_search(f, p, d, gmax, fp)
            alpha *= 1.0 + t
            alpha[a] -= t
            if t == gmax:
                alpha[a] = 0.0
        alpha = np.clip(alpha, 0.0, None)
        alpha /= alpha.sum()
        alpha, fp = _correct(f, wy, verts, alpha, f(alpha @ verts))
        p = alpha @ verts
        trace.append(fp)
    return p, gap, it, tuple(trace)


def _solve(wy: np.ndarray, poly: PreimagePolytope, tol: float, max_iter: int) -> CapacityResult:
    if not tol > 0:
        raise ValueError("tol must be positive")
    ok, _ = is_feasible(poly)
    if not ok:
        return _infeasible()
    verts = enumerate_vertices(poly).vertices
    p, gap, it, trace = _frank_wolfe(wy, verts, tol, max_iter)
    converged = gap <= tol
    if not converged:
        log.warning("Frank-Wolfe stopped after %d iterations with gap %.3g > %.3g", it, gap, tol)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    p.setflags(write=False)
    return CapacityResult(
        rate=mutual_information(p, wy),
        optimizer=p,
        duality_gap=max(gap, 0.0),
        iterations=it,
        feasible=True,
        converged=converged,
        trace=trace,
    )


def constrained_capacity(ch: SingleUserChannel, g_z, tol: float = 1e-7,
                         max_iter: int = 10_000) -> CapacityResult:
    """Largest rate compatible with interference type ``g_z``.

    An empty pre-image is reported as ``feasible=False`` with ``rate=nan``
    rather than raised, so sweeps can mix feasible and infeasible targets.
    A run that hits ``max_iter`` returns its best iterate with
    ``converged=False``.
    """
    g = as_pmf(g_z)
    if g.size != ch.p_z_given_x.shape[1]:
        raise ValueError(
            f"target has {g.size} entries but the channel has {ch.p_z_given_x.shape[1]} Z outputs"
        )
    return _solve(ch.p_y_given_x, PreimagePolytope(ch.p_z_given_x, g), tol, max_iter)


def unconstrained_capacity(p_y_given_x, tol: float = 1e-7, max_iter: int = 10_000) -> CapacityResult:
    """Ordinary channel capacity, i.e. the constraint set is the whole simplex."""
    wy = as_cond_pmf(p_y_given_x)
    return _solve(wy, PreimagePolytope.simplex(wy.shape[0]), tol, max_iter)


def capacity_curve(ch: SingleUserChannel, targets: Sequence, tol: float = 1e-7,
                   max_iter: int = 10_000) -> list[tuple[np.ndarray, CapacityResult]]:
    """Evaluate ``constrained_capacity`` for every target; infeasible ones are kept."""
    gs = [as_pmf(t) for t in targets]
    results = parallel_map(lambda g: constrained_capacity(ch, g, tol, max_iter), gs)
    return list(zip(gs, results))


def image_of_vertices(ch: SingleUserChannel) -> list[np.ndarray]:
    """Interference types induced by deterministic inputs (always feasible)."""
    return [push_forward(e, ch.p_z_given_x) for e in np.eye(ch.n_inputs)]
