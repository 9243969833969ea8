"""Finite-alphabet probability primitives.

Distributions are plain read-only ``float64`` numpy arrays: a pmf is a 1-D
vector, a conditional pmf is a row-stochastic matrix (one row per input
symbol) and a joint pmf is an n-D table. The ``as_*`` helpers validate and
freeze them. All information quantities are in bits.
"""
from __future__ import annotations

import numpy as np

#: inputs whose total mass is off by more than this are rejected
MASS_TOLERANCE = 1e-9
#: inputs whose total mass is off by more than this are renormalized
_RENORM_THRESHOLD = 1e-12

LOG2E = np.log2(np.e)


class ProbabilityError(ValueError):
    """Raised for arrays that are not valid (conditional) distributions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _normalize_last_axis(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ProbabilityError(f"{what} has non-finite entries")
    if np.any(a < 0):
        idx = tuple(int(i) for i in np.argwhere(a < 0)[0])
        raise ProbabilityError(f"{what} has a negative entry at {idx}")
    sums = a.sum(axis=-1, keepdims=True)
    dev = np.abs(sums - 1.0)
    if np.any(dev > MASS_TOLERANCE):
        idx = tuple(int(i) for i in np.argwhere(dev[..., 0] > MASS_TOLERANCE)[0])
        where = f" (row {idx})" if idx else ""
        raise ProbabilityError(
            f"{what}{where} sums to {float(sums[idx][0]):.12g}, not 1"
        )
    # only touch rows that need it so that re-validation is bitwise idempotent
    return np.where(dev > _RENORM_THRESHOLD, a / sums, a)


def as_pmf(p, size: int | None = None) -> np.ndarray:
    """Validate ``p`` as a pmf and return a frozen float array.

    Entries must be non-negative and sum to one within ``MASS_TOLERANCE``;
    small deviations are renormalized away.
    """
    a = np.array(p, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ProbabilityError(f"pmf must be a non-empty vector, got shape {a.shape}")
    if size is not None and a.size != size:
        raise ProbabilityError(f"pmf has {a.size} entries, expected {size}")
    return _frozen(_normalize_last_axis(a, "pmf"))


def as_cond_pmf(w, in_size: int | None = None, out_size: int | None = None) -> np.ndarray:
    """Validate a row-stochastic matrix; rows are indexed by the input symbol."""
    a = np.array(w, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ProbabilityError(f"conditional pmf must be a 2-D matrix, got shape {a.shape}")
    if in_size is not None and a.shape[0] != in_size:
        raise ProbabilityError(f"conditional pmf has {a.shape[0]} rows, expected {in_size}")
    if out_size is not None and a.shape[1] != out_size:
        raise ProbabilityError(f"conditional pmf has {a.shape[1]} columns, expected {out_size}")
    return _frozen(_normalize_last_axis(a, "conditional pmf"))


def as_joint_pmf(t) -> np.ndarray:
    """Validate an n-D table of non-negative reals with total mass one."""
    a = np.array(t, dtype=float)
    if a.size == 0:
        raise ProbabilityError("joint pmf is empty")
    flat = _normalize_last_axis(a.reshape(-1), "joint pmf")
    return _frozen(flat.reshape(a.shape))


def as_sequence(seq, alphabet_size: int) -> np.ndarray:
    s = np.asarray(seq)
    if s.ndim != 1:
        raise ValueError(f"sequence must be 1-D, got shape {s.shape}")
    if s.size and not np.issubdtype(s.dtype, np.integer):
        if not np.all(s == np.floor(s)):
            raise ValueError("sequence entries must be integer symbol indices")
        s = s.astype(np.int64)
    s = s.astype(np.int64, copy=False)
    if s.size and (s.min() < 0 or s.max() >= alphabet_size):
        raise ValueError(f"sequence has symbols outside [0, {alphabet_size})")
    return s


def total_variation(p, q) -> float:
    """Half the L1 distance between two distributions of the same shape."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def empirical_type(seq, alphabet_size: int) -> np.ndarray:
    """Normalized symbol histogram of ``seq``."""
    s = as_sequence(seq, alphabet_size)
    if s.size == 0:
        raise ValueError("empirical type of an empty sequence is undefined")
    return _frozen(np.bincount(s, minlength=alphabet_size) / s.size)


def joint_empirical_type(seq_a, seq_b, sizes: tuple[int, int]) -> np.ndarray:
    """Joint type of a pair of equal-length sequences, shape ``sizes``."""
    na, nb = sizes
    a = as_sequence(seq_a, na)
    b = as_sequence(seq_b, nb)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("joint type of empty sequences is undefined")
    counts = np.bincount(a * nb + b, minlength=na * nb)
    return _frozen((counts / a.size).reshape(na, nb))


def is_typical(seq, p, epsilon: float) -> bool:
    """True iff the type of ``seq`` is strictly closer than ``epsilon`` to ``p``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    p = np.asarray(p, dtype=float)
    return total_variation(empirical_type(seq, p.size), p) < epsilon


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).reshape(-1)
    nz = p[p > 0]
    return float(max(-(nz * np.log2(nz)).sum(), 0.0))


def push_forward(p_x, p_z_given_x) -> np.ndarray:
    """Output distribution of ``p_x`` through the channel ``p_z_given_x``."""
    p_x = np.asarray(p_x, dtype=float)
    w = np.asarray(p_z_given_x, dtype=float)
    if w.ndim != 2 or w.shape[0] != p_x.shape[-1]:
        raise ValueError(f"dimension mismatch: pmf of size {p_x.shape[-1]} vs channel {w.shape}")
    return p_x @ w


def _xlogy_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num * log2(num / den) elementwise, 0 where num == 0."""
    out = np.zeros(np.broadcast_shapes(num.shape, den.shape))
    num, den = np.broadcast_arrays(num, den)
    mask = num > 0
    out[mask] = num[mask] * np.log2(num[mask] / den[mask])
    return out


def mutual_information(p_x, p_y_given_x) -> float:
    """I(X;Y) in bits for input ``p_x`` through channel ``p_y_given_x``."""
    p_x = np.asarray(p_x, dtype=float)
    w = np.asarray(p_y_given_x, dtype=float)
    joint = p_x[:, None] * w
    q = joint.sum(axis=0)
    # sum over p(x,y) > 0 of p(x,y) log W(y|x)/q(y); q >= p(x,y) there, so no
    # product of small masses can underflow to zero
    mask = joint > 0
    qq = np.broadcast_to(q, w.shape)
    return float(max((joint[mask] * np.log2(w[mask] / qq[mask])).sum(), 0.0))


def mutual_information_joint(joint) -> float:
    """I(A;B) in bits from a 2-D joint table."""
    t = np.asarray(joint, dtype=float)
    pa = np.broadcast_to(t.sum(axis=1)[:, None], t.shape)
    pb = np.broadcast_to(t.sum(axis=0)[None, :], t.shape)
    m = t > 0
    terms = t[m] * (np.log2(t[m]) - np.log2(pa[m]) - np.log2(pb[m]))
    return float(max(terms.sum(), 0.0))


def divergence_rows(w, q) -> np.ndarray:
    """D(W(.|x) || q) in bits for every row of ``w``; +inf where unsupported."""
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        bad = (w > 0) & (q[None, :] <= 0)
        d = _xlogy_ratio(w, np.where(q > 0, q, 1.0)[None, :]).sum(axis=1)
    d[bad.any(axis=1)] = np.inf
    return d


def mutual_information_gradient(p_x, p_y_given_x) -> np.ndarray:
    """Gradient of I(X;Y) with respect to the input pmf (bits).

    ``dI/dp(x) = D(W(.|x) || pW) - log2(e)``. The constant shift is irrelevant
    on the simplex but keeps this an honest partial derivative.
    """
    w = np.asarray(p_y_given_x, dtype=float)
    q = push_forward(p_x, w)
    return divergence_rows(w, q) - LOG2E


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])
