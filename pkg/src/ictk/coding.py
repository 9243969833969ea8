"""Monte Carlo random-coding experiments at small blocklengths.

Every trial draws from its own counter-based stream derived from
``(seed, trial)``, so reports are bit-identical for a given seed no matter
how trials are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import SingleUserChannel
from .prob import as_pmf, entropy, mutual_information, push_forward
from .region import (
    EXAMPLE1_BLACK,
    EXAMPLE1_RED,
    CoordinationDist,
    TwoUserChannel,
    example1_channel,
    interference_type,
)
from ._parallel import parallel_map

#: max codewords x blocklength per codebook
MEMORY_CAP = 2 ** 26
DEFAULT_EPSILONS = (0.05, 0.1)
_CHUNK_ENTRIES = 2 ** 20
_KEY_SCALE = 2.0 ** 30  # log-likelihoods are compared on this integer grid
_IMPOSSIBLE = -(2 ** 60)  # score of a word with a zero-probability transition
_MAX_SUPPORT = 20_000_000
_SMALL_ALPHABET = 16


class MemoryCapError(ValueError):
    """Codebook would exceed ``MEMORY_CAP`` entries."""


class EmptyTypicalSetError(ValueError):
    """No length-n sequence can be epsilon-typical for some required distribution."""


def trial_streams(seed: int, trial: int, k: int = 3) -> list[np.random.Generator]:
    """Independent Philox streams for one trial."""
    children = np.random.SeedSequence([seed, trial]).spawn(k)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def default_epsilon(n: int) -> float:
    return 2.0 / math.sqrt(n)


def codebook_size(n: int, rate: float, floor: bool = False) -> int:
    v = 2.0 ** (n * rate)
    if not math.isfinite(v):
        return math.inf
    # guard against 2**k evaluating a hair above an integer
    r = round(v)
    if abs(v - r) < 1e-9 * max(1.0, v):
        return int(r)
    return int(math.floor(v) if floor else math.ceil(v))


def _check_cap(m, n: int, cap: int, what: str):
    if m == math.inf or m * n > cap:
        raise MemoryCapError(
            f"{what}: {m} codewords x n={n} exceeds the cap of {cap} entries"
        )


def sample_iid(p, shape, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. draws from ``p``; compact unsigned dtype for small alphabets."""
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(shape)
    if len(cdf) <= _SMALL_ALPHABET:
        out = np.zeros(u.shape, dtype=np.uint8)
        for c in cdf[:-1]:
            out += u >= c
        return out
    return np.searchsorted(cdf, u, side="right")


def sample_channel(x: np.ndarray, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pass the symbols ``x`` through ``w`` with independent noise per symbol."""
    cdf = np.cumsum(w, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(x.shape)
    return (u[..., None] >= cdf[x]).sum(-1).astype(np.intp)


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray  # (messages, n)
    n: int
    rate: float
    seed: int


def random_codebook(p_x, n: int, rate: float, seed: int, memory_cap: int = MEMORY_CAP) -> Codebook:
    """ceil(2^{nR}) i.i.d. codewords drawn from ``p_x``."""
    m = codebook_size(n, rate)
    _check_cap(m, n, memory_cap, "codebook")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    cw = sample_iid(as_pmf(p_x), (m, n), rng)
    cw.setflags(write=False)
    return Codebook(cw, n, rate, seed)


def _joint_tv(a: np.ndarray, b: np.ndarray, p_ab: np.ndarray) -> np.ndarray:
    """TV between the joint type of each row of ``a`` with ``b`` and ``p_ab``.

    ``a`` is (M, n) or (n,); ``b`` is (n,) or (M, n). Rows are processed in chunks.
    """
    na, nb = p_ab.shape
    a = np.atleast_2d(a)
    b = np.broadcast_to(b, a.shape) if b.ndim == 1 else b
    m, n = a.shape
    out = np.empty(m)
    rows = max(1, _CHUNK_ENTRIES // max(n, 1))
    flat_p = p_ab.reshape(-1)
    cells = na * nb
    for s in range(0, m, rows):
        idx = a[s:s + rows].astype(np.intp) * nb + b[s:s + rows]
        k = len(idx)
        if cells <= _SMALL_ALPHABET:
            counts = np.stack([(idx == c).sum(1) for c in range(cells)], axis=1)
        else:
            offs = (np.arange(k) * cells)[:, None]
            counts = np.bincount((idx + offs).ravel(), minlength=k * cells).reshape(k, -1)
        out[s:s + k] = 0.5 * np.abs(counts / n - flat_p).sum(1)
    return out


def min_type_distance(p, n: int) -> float:
    """Smallest TV between ``p`` and any type with denominator ``n``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    scaled = p * n
    base = np.floor(scaled)
    rem = int(round(n - base.sum()))
    frac = scaled - base
    order = np.argsort(-frac, kind="stable")
    base[order[:rem]] += 1
    return float(0.5 * np.abs(base / n - p).sum())


def _random_choice(candidates: np.ndarray, rng: np.random.Generator) -> int:
    return int(candidates[rng.integers(len(candidates))])


# ------------------------------------------------------------ single user


@dataclass(frozen=True)
class SimReport:
    n: int
    trials: int
    error_rate: float
    mean_tv: float
    tv_exceed_frac: dict
    seed: int
    tv_std_err: float = 0.0
    errors: int = 0

    @property
    def error_std_err(self) -> float:
        p = self.error_rate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials) if self.trials else math.nan


def _loglik_keys(w: np.ndarray) -> np.ndarray:
    """Integer-grid log-likelihoods; impossible transitions map to a sentinel."""
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    keys = np.where(np.isfinite(lw), np.round(lw * _KEY_SCALE), _IMPOSSIBLE)
    return keys.astype(np.int64)


def _merge(keys: np.ndarray, probs: np.ndarray):
    uk, inv = np.unique(keys, return_inverse=True)
    return uk, np.bincount(inv.ravel(), weights=probs.ravel(), minlength=len(uk))


def _convolve(a, b):
    ka, pa = a
    kb, pb = b
    if len(ka) * len(kb) > _MAX_SUPPORT:
        raise MemoryError("score distribution too large for exact ensemble evaluation")
    keys = np.maximum(ka[:, None] + kb[None, :], _IMPOSSIBLE)
    return _merge(keys, pa[:, None] * pb[None, :])


def _power(atom, count: int):
    result = (np.zeros(1, dtype=np.int64), np.ones(1))
    base = atom
    while count:
        if count & 1:
            result = _convolve(result, base)
        count >>= 1
        if count:
            base = _convolve(base, base)
    return result


class _EnsembleML:
    """Exact error draws for ML decoding over an i.i.d. random codebook.

    Given the received word, a competing codeword's log-likelihood is a sum of
    independent per-symbol terms whose law depends only on the counts of each
    output symbol. With ``M - 1`` competitors, the probability that the sent
    codeword wins (ties broken uniformly) has a closed form in the probabilities
    that one competitor scores strictly higher or exactly equal.
    """

    def __init__(self, p_x: np.ndarray, w: np.ndarray):
        self.keys = _loglik_keys(w)
        self.p_x = p_x
        self._cache: dict = {}
        self._symbol_cache: dict = {}

    def _symbol_dist(self, b: int, count: int):
        if (b, count) not in self._symbol_cache:
            support = self.p_x > 0
            atom = _merge(self.keys[support, b], self.p_x[support])
            self._symbol_cache[b, count] = _power(atom, count)
        return self._symbol_cache[b, count]

    def score_dist(self, counts: tuple):
        if counts not in self._cache:
            dist = (np.zeros(1, dtype=np.int64), np.ones(1))
            for b, c in enumerate(counts):
                if c:
                    dist = _convolve(dist, self._symbol_dist(b, c))
            self._cache[counts] = dist
        return self._cache[counts]

    def p_correct(self, x: np.ndarray, y: np.ndarray, m: int) -> float:
        counts = tuple(np.bincount(y, minlength=self.keys.shape[1]).tolist())
        keys, probs = self.score_dist(counts)
        s = max(int(self.keys[x, y].sum()), _IMPOSSIBLE)
        p_gt = float(probs[keys > s].sum())
        p_eq = float(probs[keys == s].sum())
        return _p_win(p_gt, p_eq, m)


def _p_win(p_gt: float, p_eq: float, m) -> float:
    """P(sent codeword is decoded) against m - 1 i.i.d. competitors."""
    if m <= 1:
        return 1.0
    p_gt = min(max(p_gt, 0.0), 1.0)
    if p_gt >= 1.0:
        return 0.0
    none_better = math.exp((m - 1) * math.log1p(-p_gt))
    r = min(p_eq / (1.0 - p_gt), 1.0)
    if r <= 0.0:
        return none_better
    if r >= 1.0:
        return none_better / m
    # E[1 / (1 + K)], K ~ Bin(m - 1, r)
    tie = -math.expm1(m * math.log1p(-r)) / (m * r)
    return none_better * tie


def _ml_decode(codewords: np.ndarray, y: np.ndarray, logw: np.ndarray,
               rng: np.random.Generator) -> int:
    m, n = codewords.shape
    ly = logw[:, y]  # (X, n)
    cols = np.arange(n)
    rows = max(1, _CHUNK_ENTRIES // max(n, 1))
    scores = np.empty(m)
    for s in range(0, m, rows):
        scores[s:s + rows] = ly[codewords[s:s + rows], cols].sum(1)
    best = np.flatnonzero(scores == scores.max())
    return _random_choice(best, rng)


def _typ_decode(codewords: np.ndarray, y: np.ndarray, p_xy: np.ndarray, eps: float) -> int | None:
    hits = np.flatnonzero(_joint_tv(codewords, y, p_xy) < eps)
    return int(hits[0]) if len(hits) == 1 else None


def _tv_stats(tvs: np.ndarray, epsilons) -> tuple[float, dict, float]:
    mean = float(tvs.mean())
    se = float(tvs.std(ddof=1) / math.sqrt(len(tvs))) if len(tvs) > 1 else 0.0
    return mean, {float(e): float((tvs >= e).mean()) for e in epsilons}, se


def simulate_single_user(ch: SingleUserChannel, p_x, n: int, rate: float | None, trials: int,
                         decoder: str | None = "ml", seed: int = 0, epsilon: float | None = None,
                         codebook: str = "explicit", epsilons=DEFAULT_EPSILONS,
                         memory_cap: int = MEMORY_CAP) -> SimReport:
    """Random-coding trials over the single-user channel.

    Each trial draws a fresh i.i.d. ``p_x`` codebook of ``ceil(2^{nR})`` words,
    sends a uniform message, decodes ``Y^n`` and records the interference
    distance ``TV(T_{Z^n}, p_x W_Z)``.

    ``decoder`` is ``"ml"``, ``"typicality"`` (joint typicality at ``epsilon``,
    default ``2/sqrt(n)``) or ``None`` for interference statistics only.
    ``codebook="explicit"`` materializes the codebook and refuses sizes above
    ``memory_cap``. ``codebook="ensemble"`` (ML only) never stores it and draws
    the error event from its exact law over the codebook ensemble instead.
    """
    p_x = as_pmf(p_x, size=ch.n_inputs)
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    if decoder not in ("ml", "typicality", None):
        raise ValueError(f"unknown decoder {decoder!r}")
    if codebook not in ("explicit", "ensemble"):
        raise ValueError(f"unknown codebook mode {codebook!r}")
    if decoder is not None:
        if rate is None or not rate > 0:
            raise ValueError("rate must be positive")
        if codebook == "ensemble" and decoder != "ml":
            raise ValueError("ensemble evaluation is only available for ML decoding")
    eps = default_epsilon(n) if epsilon is None else float(epsilon)
    if decoder == "typicality" and not eps > 0:
        raise ValueError("epsilon must be positive")

    wy, wz = ch.p_y_given_x, ch.p_z_given_x
    g_z = push_forward(p_x, wz)
    m = codebook_size(n, rate) if decoder is not None else 1
    if decoder is not None and codebook == "explicit":
        _check_cap(m, n, memory_cap, "codebook")
    with np.errstate(divide="ignore"):
        logw = np.log(wy)
    p_xy = p_x[:, None] * wy
    ensemble = _EnsembleML(p_x, wy) if decoder == "ml" and codebook == "ensemble" else None

    def trial(t: int):
        r_tx, r_book, r_dec = trial_streams(seed, t)
        x = sample_iid(p_x, n, r_tx)
        y = sample_channel(x, wy, r_tx)
        z = sample_channel(x, wz, r_tx)
        tv = 0.5 * np.abs(np.bincount(z, minlength=wz.shape[1]) / n - g_z).sum()
        if decoder is None:
            return False, tv
        if ensemble is not None:
            err = r_dec.random() >= ensemble.p_correct(x, y, m)
            return bool(err), tv
        msg = int(r_book.integers(m))
        cw = sample_iid(p_x, (m, n), r_book)
        cw[msg] = x
        if decoder == "ml":
            guess = _ml_decode(cw, y, logw, r_dec)
        else:
            guess = _typ_decode(cw, y, p_xy, eps)
        return guess != msg, tv

    results = parallel_map(trial, range(trials))
    errs = np.array([r[0] for r in results])
    tvs = np.array([r[1] for r in results])
    mean, exceed, se = _tv_stats(tvs, epsilons)
    return SimReport(n=n, trials=trials,
                     error_rate=float(errs.mean()) if decoder is not None else math.nan,
                     mean_tv=mean, tv_exceed_frac=exceed, seed=seed, tv_std_err=se,
                     errors=int(errs.sum()))


@dataclass(frozen=True)
class ProfileRow:
    n: int
    mean_tv: float
    tv_exceed_frac: dict
    tv_std_err: float


def tv_convergence_profile(ch: SingleUserChannel, p_x, n_list, trials: int, seed: int = 0,
                           epsilons=DEFAULT_EPSILONS) -> list[ProfileRow]:
    """Interference-type distance statistics over a sweep of blocklengths."""
    rows = []
    for n in n_list:
        rep = simulate_single_user(ch, p_x, int(n), None, trials, decoder=None, seed=seed,
                                   epsilons=epsilons)
        rows.append(ProfileRow(rep.n, rep.mean_tv, rep.tv_exceed_frac, rep.tv_std_err))
    return rows


# ------------------------------------------------------------ two users


@dataclass(frozen=True)
class TwoUserSimReport:
    n: int
    trials: int
    error_rate_1: float
    error_rate_2: float
    cover_fail_1: float  # no u-sequence jointly typical with x1
    cover_fail_2: float  # no x2-sequence in the bin jointly typical with u
    mean_tv: float
    tv_exceed_frac: dict
    seed: int
    epsilon: float
    sizes: dict = field(default_factory=dict)


def simulate_two_user(ch: TwoUserChannel, dist: CoordinationDist, n: int, r1: float, r2: float,
                      rc: float, trials: int, epsilon: float | None = None, seed: int = 0,
                      margin: float = 0.1, epsilons=DEFAULT_EPSILONS,
                      memory_cap: int = MEMORY_CAP) -> TwoUserSimReport:
    """Superposition of covering and typicality decoding, as in the achievability argument.

    Codebooks: ``floor(2^{n Rc})`` u-words from ``P_U``, ``ceil(2^{n R1})`` x1-words
    from ``P_X1`` and ``ceil(2^{n R2})`` bins of ``ceil(2^{n (I(U;X2) + margin)})``
    x2-words from ``P_X2``. Encoder 1 picks a u-word jointly typical with its
    codeword (uniformly among candidates, index 0 if none); Encoder 2 picks a
    word in its message bin jointly typical with that u-word the same way.
    Both receivers decode by unique joint typicality.
    """
    if min(r1, r2, rc) <= 0:
        raise ValueError("rates must be positive")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    eps = default_epsilon(n) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if margin < 0:
        raise ValueError("margin must be non-negative")

    w1, w2, wz = ch.p_y1_given_x1, ch.p_y2_given_x2, ch.p_z_given_x1x2
    nx1, nx2, nzz = ch.sizes
    if dist.p_x1_given_u.shape[1] != nx1 or dist.p_x2_given_u.shape[1] != nx2:
        raise ValueError("coordination distribution does not match the channel alphabets")
    p_u = dist.p_u
    p_x1, p_x2 = dist.p_x1(), dist.p_x2()
    p_ux1 = p_u[:, None] * dist.p_x1_given_u
    p_ux2 = p_u[:, None] * dist.p_x2_given_u
    p_x1y1 = p_x1[:, None] * w1
    p_x2y2 = p_x2[:, None] * w2
    q_z = interference_type(ch, dist)
    wz_flat = wz.reshape(nx1 * nx2, nzz)

    need = max(min_type_distance(p, n) for p in (p_ux1, p_ux2, p_x1y1, p_x2y2))
    if eps <= need:
        raise EmptyTypicalSetError(
            f"epsilon={eps:.4g} leaves a typical set empty at n={n}; need epsilon > {need:.4g}"
        )

    penalty = mutual_information(p_u, dist.p_x2_given_u)
    mc = max(codebook_size(n, rc, floor=True), 1)
    m1 = codebook_size(n, r1)
    m2 = codebook_size(n, r2)
    nl = codebook_size(n, penalty + margin)
    _check_cap(mc, n, memory_cap, "coordination codebook")
    _check_cap(m1, n, memory_cap, "user-1 codebook")
    _check_cap(m2 * nl if nl != math.inf and m2 != math.inf else math.inf, n, memory_cap,
               "user-2 codebook")

    def trial(t: int):
        r_book, r_enc, r_ch = trial_streams(seed, t)
        u_book = sample_iid(p_u, (mc, n), r_book)
        x1_book = sample_iid(p_x1, (m1, n), r_book)
        x2_book = sample_iid(p_x2, (m2 * nl, n), r_book)  # row = m2 * nl + l
        msg1 = int(r_enc.integers(m1))
        msg2 = int(r_enc.integers(m2))
        x1 = x1_book[msg1]
        cand = np.flatnonzero(_joint_tv(u_book, x1, p_ux1) < eps)
        fail1 = len(cand) == 0
        k = 0 if fail1 else _random_choice(cand, r_enc)
        u = u_book[k]
        bin_rows = x2_book[msg2 * nl:(msg2 + 1) * nl]
        cand = np.flatnonzero(_joint_tv(bin_rows, u, p_ux2.T) < eps)
        fail2 = len(cand) == 0
        l = 0 if fail2 else _random_choice(cand, r_enc)
        x2 = bin_rows[l]
        y1 = sample_channel(x1, w1, r_ch)
        y2 = sample_channel(x2, w2, r_ch)
        z = sample_channel(x1.astype(np.intp) * nx2 + x2, wz_flat, r_ch)
        hat1 = _typ_decode(x1_book, y1, p_x1y1, eps)
        hits = np.flatnonzero(_joint_tv(x2_book, y2, p_x2y2) < eps) // nl
        hits = np.unique(hits)
        hat2 = int(hits[0]) if len(hits) == 1 else None
        tv = 0.5 * np.abs(np.bincount(z, minlength=nzz) / n - q_z).sum()
        return hat1 != msg1, hat2 != msg2, fail1, fail2, tv

    res = parallel_map(trial, range(trials))
    arr = np.array([r[:4] for r in res], dtype=float)
    tvs = np.array([r[4] for r in res])
    mean, exceed, _ = _tv_stats(tvs, epsilons)
    return TwoUserSimReport(
        n=n, trials=trials,
        error_rate_1=float(arr[:, 0].mean()), error_rate_2=float(arr[:, 1].mean()),
        cover_fail_1=float(arr[:, 2].mean()), cover_fail_2=float(arr[:, 3].mean()),
        mean_tv=mean, tv_exceed_frac=exceed, seed=seed, epsilon=eps,
        sizes={"coordination": mc, "user1": m1, "user2": m2, "bin": nl},
    )


# ------------------------------------------------------------ constellation protocol


@dataclass(frozen=True)
class ProtocolReport:
    n: int
    trials: int
    error_rate_1: float
    error_rate_2: float
    violation_rate: float  # fraction of trials with any z = 1
    coord_bits_per_action: float  # enumerative code length for u^n, per symbol
    u_type_entropy: float  # mean H(T_{u^n})
    seed: int


def enumerative_code_length(u: np.ndarray) -> int:
    """Bits to losslessly describe a binary block: its type, then its index in the type class."""
    n, k = len(u), int(u.sum())
    log2_binom = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)
    return math.ceil(math.log2(n + 1)) + math.ceil(log2_binom - 1e-9)


def simulate_example1_protocol(n: int, trials: int, seed: int = 0) -> ProtocolReport:
    """The partition-declaration scheme on the 16-point constellation.

    Encoder 1 sends uniform symbols and announces, for a whole block, which of
    its symbols are red; Encoder 2 uses the black symbols exactly there and the
    red ones elsewhere. The announcement is charged at the length of an
    enumerative lossless code.
    """
    ch = example1_channel()
    red = np.array(EXAMPLE1_RED)
    black = np.array(EXAMPLE1_BLACK)
    is_red = np.zeros(16, dtype=bool)
    is_red[red] = True
    wz_flat = ch.p_z_given_x1x2.reshape(256, 2)

    def trial(t: int):
        r_msg, r_ch, _ = trial_streams(seed, t)
        x1 = r_msg.integers(16, size=n)
        u = is_red[x1].astype(np.int64)
        # per-use message indices into the constellation Encoder 2 is allowed
        idx_black = r_msg.integers(len(black), size=n)
        idx_red = r_msg.integers(len(red), size=n)
        x2 = np.where(u == 1, black[idx_black], red[idx_red])
        y1 = sample_channel(x1, ch.p_y1_given_x1, r_ch)
        y2 = sample_channel(x2, ch.p_y2_given_x2, r_ch)
        z = sample_channel(x1 * 16 + x2, wz_flat, r_ch)
        # Decoder 2 infers the constellation from the received symbol itself
        got_black = ~is_red[y2]
        dec_idx = np.where(got_black, np.searchsorted(black, y2), np.searchsorted(red, y2))
        sent_idx = np.where(u == 1, idx_black, idx_red)
        err1 = bool(np.any(y1 != x1))
        err2 = bool(np.any((got_black != (u == 1)) | (dec_idx != sent_idx)))
        bits = enumerative_code_length(u) / n
        h = entropy(np.bincount(u, minlength=2) / n)
        return err1, err2, bool(z.any()), bits, h

    res = np.array(parallel_map(trial, range(trials)), dtype=float)
    return ProtocolReport(n, trials, *(float(v) for v in res.mean(axis=0)), seed=seed)
