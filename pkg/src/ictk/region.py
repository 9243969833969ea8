"""Two-user coordination region.

A coordination distribution ``P_U P_{X1|U} P_{X2|U}`` yields the rate tuple

    R1 = I(X1;Y1),  R2 = [I(X2;Y2) - I(U;X2)]^+,  Rc = I(U;X1)

together with the interference type ``Q_Z``. Tuples are reported at these
boundary values; every strictly interior tuple is achievable, and convex
combinations follow by time sharing. Larger ``|U|`` can only enlarge the
inner bound.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .prob import (
    as_cond_pmf,
    as_pmf,
    binary_entropy,
    mutual_information,
    total_variation,
)
from ._parallel import parallel_map

log = logging.getLogger(__name__)

FEASIBILITY_TV = 1e-6


@dataclass(frozen=True)
class TwoUserChannel:
    """Orthogonal links ``P_{Y1|X1}``, ``P_{Y2|X2}`` and a shared observer ``P_{Z|X1,X2}``."""

    p_y1_given_x1: np.ndarray
    p_y2_given_x2: np.ndarray
    p_z_given_x1x2: np.ndarray  # (|X1|, |X2|, |Z|)

    def __post_init__(self):
        w1 = as_cond_pmf(self.p_y1_given_x1)
        w2 = as_cond_pmf(self.p_y2_given_x2)
        wz = np.array(self.p_z_given_x1x2, dtype=float)
        if wz.ndim != 3:
            raise ValueError(f"P_Z|X1,X2 must be a 3-axis array, got shape {wz.shape}")
        if wz.shape[:2] != (w1.shape[0], w2.shape[0]):
            raise ValueError(
                f"P_Z|X1,X2 is indexed by {wz.shape[:2]} but |X1|, |X2| = "
                f"{w1.shape[0]}, {w2.shape[0]}"
            )
        wz = as_cond_pmf(wz.reshape(-1, wz.shape[2])).reshape(wz.shape)
        wz.setflags(write=False)
        object.__setattr__(self, "p_y1_given_x1", w1)
        object.__setattr__(self, "p_y2_given_x2", w2)
        object.__setattr__(self, "p_z_given_x1x2", wz)

    @property
    def sizes(self) -> tuple[int, int, int]:
        """(|X1|, |X2|, |Z|)"""
        return self.p_z_given_x1x2.shape


@dataclass(frozen=True)
class CoordinationDist:
    p_u: np.ndarray
    p_x1_given_u: np.ndarray
    p_x2_given_u: np.ndarray

    def __post_init__(self):
        pu = as_pmf(self.p_u)
        b = as_cond_pmf(self.p_x1_given_u, in_size=pu.size)
        c = as_cond_pmf(self.p_x2_given_u, in_size=pu.size)
        object.__setattr__(self, "p_u", pu)
        object.__setattr__(self, "p_x1_given_u", b)
        object.__setattr__(self, "p_x2_given_u", c)

    @property
    def u_size(self) -> int:
        return self.p_u.size

    def joint(self) -> np.ndarray:
        """P(u, x1, x2) with X1 - U - X2 by construction."""
        return np.einsum("u,ua,ub->uab", self.p_u, self.p_x1_given_u, self.p_x2_given_u)

    def p_x1(self) -> np.ndarray:
        return self.p_u @ self.p_x1_given_u

    def p_x2(self) -> np.ndarray:
        return self.p_u @ self.p_x2_given_u

    def key(self) -> tuple:
        return tuple(np.concatenate([self.p_u, self.p_x1_given_u.ravel(),
                                     self.p_x2_given_u.ravel()]).round(12))


@dataclass(frozen=True)
class RegionPoint:
    r1: float
    r2: float
    rc: float
    q_z: np.ndarray
    dist: CoordinationDist

    @property
    def rates(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.rc)


def interference_type(ch: TwoUserChannel, dist: CoordinationDist) -> np.ndarray:
    return np.einsum("uab,abz->z", dist.joint(), ch.p_z_given_x1x2)


def rate_tuple(ch: TwoUserChannel, dist: CoordinationDist) -> RegionPoint:
    nx1, nx2, _ = ch.sizes
    if dist.p_x1_given_u.shape[1] != nx1 or dist.p_x2_given_u.shape[1] != nx2:
        raise ValueError(
            f"distribution is over ({dist.p_x1_given_u.shape[1]}, {dist.p_x2_given_u.shape[1]}) "
            f"inputs but the channel has ({nx1}, {nx2})"
        )
    r1 = mutual_information(dist.p_x1(), ch.p_y1_given_x1)
    i2 = mutual_information(dist.p_x2(), ch.p_y2_given_x2)
    penalty = mutual_information(dist.p_u, dist.p_x2_given_u)
    rc = mutual_information(dist.p_u, dist.p_x1_given_u)
    q = interference_type(ch, dist)
    q.setflags(write=False)
    return RegionPoint(r1, max(i2 - penalty, 0.0), rc, q, dist)


# ---------------------------------------------------------------- constellation example

#: positions of the 4 inner (red-diamond) points of the 4x4 constellation
EXAMPLE1_RED = (5, 6, 9, 10)
EXAMPLE1_BLACK = tuple(i for i in range(16) if i not in EXAMPLE1_RED)


def example1_channel() -> TwoUserChannel:
    """16-ary noiseless links; ``z = 1`` iff both users send a black-circle symbol.

    The observer constraint is then "zero mass on z = 1", see
    :func:`example1_target`.
    """
    black = np.zeros(16, dtype=bool)
    black[list(EXAMPLE1_BLACK)] = True
    both = black[:, None] & black[None, :]
    wz = np.stack([~both, both], axis=-1).astype(float)
    return TwoUserChannel(np.eye(16), np.eye(16), wz)


def example1_target() -> np.ndarray:
    return as_pmf([1.0, 0.0])


def _uniform_on(idx, size=16) -> np.ndarray:
    p = np.zeros(size)
    p[list(idx)] = 1.0 / len(idx)
    return p


def example1_distribution(coordinated: bool = True) -> CoordinationDist:
    """The operating points of the example.

    Coordinated: U flags whether Encoder 1 sends a red symbol (prob 1/4); Encoder 2
    then uses the black symbols, otherwise the red ones. Uncoordinated: ``|U| = 1``,
    Encoder 2 is confined to the red symbols.
    """
    if not coordinated:
        return CoordinationDist([1.0], [np.full(16, 1 / 16)], [_uniform_on(EXAMPLE1_RED)])
    return CoordinationDist(
        [0.75, 0.25],
        [_uniform_on(EXAMPLE1_BLACK), _uniform_on(EXAMPLE1_RED)],
        [_uniform_on(EXAMPLE1_RED), _uniform_on(EXAMPLE1_BLACK)],
    )


def example1_rates() -> tuple[float, float, float, float]:
    """(R1, R2 uncoordinated, R2 coordinated, Rc) for the constellation example.

    Closed forms: 4, 2, 1.5 + 0.25 log2 12 and H2(0.25).
    """
    ch = example1_channel()
    unc = rate_tuple(ch, example1_distribution(coordinated=False))
    coo = rate_tuple(ch, example1_distribution(coordinated=True))
    return unc.r1, unc.r2, coo.r2, coo.rc


def example1_closed_form() -> tuple[float, float, float, float]:
    return 4.0, 2.0, 1.5 + 0.25 * math.log2(12), binary_entropy(0.25)


# ---------------------------------------------------------------- hulls


@dataclass(frozen=True)
class Hull:
    """Convex hull of rate tuples ``(r1, r2, rc)``.

    ``vertices`` are the extreme points of the plain convex hull (time
    sharing). ``facets`` describe the hull of the dominated closure, where a
    tuple is dominated if it has no more of r1, r2 and no less rc; each row is
    ``(n1, n2, n3, c)`` with ``n . x + c <= 0`` inside. ``facets`` is empty when
    that closure is not full-dimensional.
    """

    vertices: np.ndarray
    facets: np.ndarray
    rc_top: float

    def contains(self, point, tol: float = 1e-9, dominated: bool = True) -> bool:
        """Whether ``point`` is achievable by time sharing the vertices.

        With ``dominated=True`` (default), smaller r1/r2 and larger rc also count.
        """
        v = self.vertices
        x = np.asarray(point, dtype=float)
        k = len(v)
        if dominated:
            # sum l v_r1 >= x_r1, sum l v_r2 >= x_r2, sum l v_rc <= x_rc
            a_ub = np.vstack([-v[:, 0], -v[:, 1], v[:, 2]])
            b_ub = np.array([-x[0] + tol, -x[1] + tol, x[2] + tol])
            res = linprog(np.zeros(k), A_ub=a_ub, b_ub=b_ub, A_eq=np.ones((1, k)),
                          b_eq=[1.0], bounds=(0, None), method="highs")
            return res.status == 0
        return _in_convex_hull(x, v, tol)


def _in_convex_hull(x: np.ndarray, pts: np.ndarray, tol: float) -> bool:
    k = len(pts)
    if k == 0:
        return False
    # min sum|s| s.t. pts^T l + s+ - s- = x, sum l = 1
    d = pts.shape[1]
    a_eq = np.zeros((d + 1, k + 2 * d))
    a_eq[:d, :k] = pts.T
    a_eq[:d, k:k + d] = np.eye(d)
    a_eq[:d, k + d:] = -np.eye(d)
    a_eq[d, :k] = 1.0
    c = np.concatenate([np.zeros(k), np.ones(2 * d)])
    res = linprog(c, A_eq=a_eq, b_eq=np.concatenate([x, [1.0]]), bounds=(0, None),
                  method="highs")
    return res.status == 0 and res.fun <= tol


def _extreme_points(pts: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    keep = []
    for i in range(len(pts)):
        others = np.delete(pts, i, axis=0)
        if not _in_convex_hull(pts[i], others, tol):
            keep.append(i)
    return pts[keep]


def _sorted_unique(pts: np.ndarray) -> np.ndarray:
    pts = np.unique(np.round(pts, 12), axis=0)
    return pts[np.lexsort(pts.T[::-1])]


def convex_hull_3d(points) -> Hull:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    pts = _sorted_unique(pts)
    verts = _extreme_points(pts) if len(pts) > 1 else pts
    rc_top = float(pts[:, 2].max())
    corners = np.array([
        (r1 * i, r2 * j, rc if k == 0 else rc_top)
        for r1, r2, rc in verts for i in (0, 1) for j in (0, 1) for k in (0, 1)
    ])
    corners = _sorted_unique(corners)
    facets = np.empty((0, 4))
    centered = corners - corners.mean(axis=0)
    if len(corners) >= 4 and np.linalg.matrix_rank(centered, tol=1e-10) == 3:
        eq = ConvexHull(corners).equations
        facets = _sorted_unique(eq)
    verts.setflags(write=False)
    facets.setflags(write=False)
    return Hull(verts, facets, rc_top)


@dataclass(frozen=True)
class RegionFrontier:
    points: list  # RegionPoint, one per weight vector that found a feasible point
    hull: Hull | None
    weights: list
    failed_weights: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return bool(self.points)


# ---------------------------------------------------------------- search


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every last-axis slice onto the simplex."""
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - theta, 0.0)


_LOG_CLIP = 50.0


def _safe_log2(x):
    return np.log2(np.where(x > 0, x, 1.0))


def _log2_ratio(num, den):
    r = np.where(num > 0, _safe_log2(num), -_LOG_CLIP) - np.where(den > 0, _safe_log2(den), -_LOG_CLIP)
    return np.clip(r, -_LOG_CLIP, _LOG_CLIP)


def _plogp_ratio(p, q):
    return np.where(p > 0, p * (_safe_log2(p) - _safe_log2(q)), 0.0)


def _mi_channel(px, w):
    """Batched I(X;Y) and its gradient for inputs px (R, X) and fixed w (X, Y)."""
    q = px @ w  # (R, Y)
    d = _plogp_ratio(w[None], q[:, None, :]).sum(-1)  # (R, X): D(w_x || q)
    mi = (px * d).sum(-1)
    return mi, d - np.log2(np.e)


def _mix(a, b):
    """sum_u a_u b_u for a (R, U), b (R, U, X)."""
    return (a[:, None, :] @ b)[:, 0]


def _mi_mixture(a, b):
    """Batched I(U;X) for P_U = a (R, U), P_X|U = b (R, U, X), with gradients."""
    px = _mix(a, b)
    d = _plogp_ratio(b, px[:, None, :]).sum(-1)  # (R, U)
    mi = (a * d).sum(-1)
    grad_a = d - np.log2(np.e)
    grad_b = a[..., None] * _log2_ratio(b, px[:, None, :])
    return mi, grad_a, grad_b


class _Problem:
    """Smooth augmented-Lagrangian surrogate for one weight vector, batched over restarts."""

    def __init__(self, ch: TwoUserChannel, weights, target):
        self.w1 = ch.p_y1_given_x1
        self.w2 = ch.p_y2_given_x2
        nx1, nx2, nz = ch.sizes
        self.shape = (nx1, nx2)
        self.wz = ch.p_z_given_x1x2.reshape(nx1 * nx2, nz)
        self.k1, self.k2, self.kc = (float(x) for x in weights)
        self.target = target

    def rates(self, a, b, c):
        r1, g1 = _mi_channel(_mix(a, b), self.w1)
        i2, g2 = _mi_channel(_mix(a, c), self.w2)
        pen, pa_pen, pc_pen = _mi_mixture(a, c)
        rc, pa_rc, pb_rc = _mi_mixture(a, b)
        return (r1, g1, i2, g2, pen, pa_pen, pc_pen, rc, pa_rc, pb_rc)

    def qz(self, a, b, c):
        joint = (a[..., None] * b).transpose(0, 2, 1) @ c  # (R, X1, X2)
        return joint.reshape(len(a), -1) @ self.wz

    def value(self, a, b, c, lam, mu):
        r1, _ = _mi_channel(_mix(a, b), self.w1)
        i2, _ = _mi_channel(_mix(a, c), self.w2)
        pen = _mi_mixture(a, c)[0]
        rc = _mi_mixture(a, b)[0]
        f = self.k1 * r1 + self.k2 * (i2 - pen) - self.kc * rc
        if self.target is not None:
            r = self.qz(a, b, c) - self.target
            f = f - (lam * r).sum(-1) - 0.5 * mu * (r * r).sum(-1)
        return f

    def gradient(self, a, b, c, lam, mu):
        r1, g1, i2, g2, pen, pa_pen, pc_pen, rc, pa_rc, pb_rc = self.rates(a, b, c)
        ga = (self.k1 * (b @ g1[..., None])[..., 0]
              + self.k2 * ((c @ g2[..., None])[..., 0] - pa_pen) - self.kc * pa_rc)
        gb = self.k1 * a[..., None] * g1[:, None, :] - self.kc * pb_rc
        gc = self.k2 * (a[..., None] * g2[:, None, :] - pc_pen)
        if self.target is not None:
            s = lam + mu * (self.qz(a, b, c) - self.target)  # (R, Z)
            wz_s = (s @ self.wz.T).reshape((len(a),) + self.shape)  # (R, X1, X2)
            bw = b @ wz_s  # (R, U, X2)
            ga = ga - (bw * c).sum(-1)
            gb = gb - a[..., None] * (c @ wz_s.transpose(0, 2, 1))
            gc = gc - a[..., None] * bw
        return ga, gb, gc


def _ascend(prob: _Problem, x: list, lam, mu, sweeps: int, step0: float = 0.1):
    """Block-coordinate projected gradient ascent on (P_U, P_X1|U, P_X2|U)."""
    n_restarts = x[0].shape[0]
    steps = np.full((3, n_restarts), step0)
    cur = prob.value(*x, lam, mu)
    for _ in range(sweeps):
        before = cur.copy()
        for blk in range(3):
            g = prob.gradient(*x, lam, mu)[blk]
            scale = np.abs(g).reshape(n_restarts, -1).max(-1)
            scale = np.where(scale > 0, scale, 1.0)
            shape = (n_restarts,) + (1,) * (g.ndim - 1)
            cand = _project_simplex(x[blk] + (steps[blk] / scale).reshape(shape) * g)
            trial = list(x)
            trial[blk] = cand
            val = prob.value(*trial, lam, mu)
            better = val > cur
            x[blk] = np.where(better.reshape(shape), cand, x[blk])
            cur = np.where(better, val, cur)
            steps[blk] = np.where(better, np.minimum(steps[blk] * 1.5, step0), steps[blk] * 0.5)
        if np.all((cur - before) <= 1e-13 * np.maximum(1.0, np.abs(cur))) and np.all(steps < 1e-9):
            break
    return x


def _initial_points(rng, restarts: int, u_size: int, nx1: int, nx2: int) -> list:
    return [rng.dirichlet(np.ones(u_size), restarts),
            rng.dirichlet(np.ones(nx1), (restarts, u_size)),
            rng.dirichlet(np.ones(nx2), (restarts, u_size))]


def _stack_dists(dists) -> list:
    return [np.array([d.p_u for d in dists]),
            np.array([d.p_x1_given_u for d in dists]),
            np.array([d.p_x2_given_u for d in dists])]


def _optimize(ch: TwoUserChannel, weights, target, x: list, sweeps: int, stages: int,
              mu0: float):
    prob = _Problem(ch, weights, target)
    n = x[0].shape[0]
    lam = np.zeros((n, ch.sizes[2]))
    mu = mu0 * max(1.0, max(abs(w) for w in weights))
    for _ in range(stages if target is not None else 1):
        x = _ascend(prob, x, lam, mu, sweeps)
        if target is not None:
            lam = lam + mu * (prob.qz(*x) - target)
            mu *= 10.0
    if target is not None:
        # pull the residual interference mismatch to (numerical) zero
        x = _ascend(_Problem(ch, (0.0, 0.0, 0.0), target), x, np.zeros_like(lam), 1.0, sweeps)
    return x


def _best_point(ch: TwoUserChannel, weights, target, x: list, incumbent=None):
    best = incumbent
    for i in range(x[0].shape[0]):
        dist = CoordinationDist(x[0][i], x[1][i], x[2][i])
        pt = rate_tuple(ch, dist)
        if target is not None and total_variation(pt.q_z, target) > FEASIBILITY_TV:
            continue
        score = weights[0] * pt.r1 + weights[1] * pt.r2 - weights[2] * pt.rc
        if best is None or score > best[0] + 1e-12 or (
                abs(score - best[0]) <= 1e-12 and dist.key() < best[1].dist.key()):
            best = (score, pt)
    return best


def frontier_search(ch: TwoUserChannel, q_z_target=None,
                    weights: Sequence[tuple[float, float, float]] = ((1, 0, 0), (0, 1, 0), (1, 1, 0)),
                    u_size: int | None = None, restarts: int = 64, seed: int = 0,
                    sweeps: int = 400, stages: int = 5, mu0: float = 1.0) -> RegionFrontier:
    """Inner-bound frontier points at a fixed interference type.

    For each ``(w1, w2, wc)`` maximizes ``w1 R1 + w2 R2 - wc Rc`` over coordination
    distributions whose ``Q_Z`` is within ``FEASIBILITY_TV`` of ``q_z_target``
    (``None`` leaves ``Q_Z`` free). The constraint is handled by an augmented
    Lagrangian whose penalty grows tenfold per stage; the inner problem is
    nonconvex, so the returned points are lower bounds on the true frontier.
    Weight vectors for which no restart ends feasible are listed in
    ``failed_weights``.
    """
    nx1, nx2, nz = ch.sizes
    if u_size is None:
        u_size = min(nx1, nx2) + 1
    if u_size < 1:
        raise ValueError("u_size must be at least 1")
    target = None if q_z_target is None else as_pmf(q_z_target, size=nz)
    weights = [tuple(float(v) for v in w) for w in weights]
    if any(len(w) != 3 for w in weights):
        raise ValueError("weights must be (w1, w2, wc) triples")

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, u_size])))
    starts = _initial_points(rng, restarts, u_size, nx1, nx2)

    def first_pass(w):
        x = _optimize(ch, w, target, [v.copy() for v in starts], sweeps, stages, mu0)
        return _best_point(ch, w, target, x)

    found = parallel_map(first_pass, weights)
    # second pass: every weight also starts from the other weights' optima, with
    # the penalty already stiff so the warm start keeps its structure
    seeds = [b[1].dist for b in found if b is not None]
    if len(weights) > 1 and seeds:
        def second_pass(item):
            w, incumbent = item
            x = _optimize(ch, w, target, _stack_dists(seeds), sweeps, 2,
                          mu0 * 10.0 ** (stages - 1))
            return _best_point(ch, w, target, x, incumbent)

        found = parallel_map(second_pass, list(zip(weights, found)))

    points, failed = [], []
    for w, best in zip(weights, found):
        if best is None:
            log.warning("no feasible coordination distribution found for weights %s", w)
            failed.append(w)
        else:
            points.append(best[1])
    hull = convex_hull_3d([p.rates for p in points]) if points else None
    return RegionFrontier(points, hull, weights, failed)
