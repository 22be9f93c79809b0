"""Exact random-coding error probability by joint-type enumeration.

Given a sent block ``x`` and received ``y``, only two numbers matter for the
error event of an independent competitor: the probability ``p_plus`` that it
scores strictly higher and the probability ``p_zero`` that it ties.  The
probability of error with ``M`` codewords and uniform tie-breaking is then a
closed form ``q_M(p_plus, p_zero)``, and both probabilities depend on the
pair only through its joint type.  Averaging ``q_M`` over joint types gives
``P_RC`` with no sampling at all.

In lattice mode every ``log nu(x, y)`` is ``offset_y + k h`` with an integer
``k``, so scores and thresholds are compared as integers.  In nonlattice mode
score values are merged and matched with a relative tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import Channel
from .errors import DomainError, ResourceError
from .gfun import GContext, log_g_eval
from .lattice import LatticeClassification, classify_nu_lattice
from .tilting import ZFamily, solve_exponent

ATOM_CAP = 2_000_000
TYPE_CAP = 10_000_000
#: relative tolerance for merging score atoms in nonlattice mode
MERGE_TOL = 1e-12
#: relative tolerance for matching a threshold to a score atom in nonlattice mode
MATCH_TOL = 1e-10
#: relative residual allowed when snapping log-likelihoods onto the lattice
SNAP_TOL = 1e-6
#: below ``log M + log p`` of this size ``q_M`` is replaced by its first-order form
LOG_SMALL = -30.0


# --- q_M ---------------------------------------------------------------------

def _one_minus_phi(x: np.ndarray) -> np.ndarray:
    """``1 - (1 - e^-x)/x`` for ``x >= 0``."""
    out = np.empty_like(x)
    small = x < 0.5
    xs = x[small]
    acc = np.zeros_like(xs)
    term = np.ones_like(xs)
    for k in range(1, 20):
        term = term * xs / (k + 1) if k > 1 else xs / 2.0
        acc += term if k % 2 == 1 else -term
    out[small] = acc
    xl = x[~small]
    out[~small] = 1.0 + np.expm1(-xl) / xl
    return out


def _kappa_minus_one(theta: np.ndarray) -> np.ndarray:
    """``-log(1 - theta)/theta - 1`` for ``0 <= theta < 1``."""
    out = np.empty_like(theta)
    small = theta < 0.1
    ts = theta[small]
    acc = np.zeros_like(ts)
    power = np.ones_like(ts)
    for k in range(1, 25):
        power = power * ts
        acc += power / (k + 1)
    out[small] = acc
    tl = theta[~small]
    out[~small] = -np.log1p(-tl) / tl - 1.0
    return out


def _check_probs(p_plus, p_zero):
    if np.any(p_plus < 0) or np.any(p_zero < 0):
        raise DomainError("p_plus and p_zero must be nonnegative")
    if np.any(p_plus + p_zero > 1 + 1e-12):
        raise DomainError("p_plus + p_zero must not exceed 1")


def q_m_exact(M: int, p_plus, p_zero):
    """``q_M = 1 - ((1-p_plus)^M - (1-p_plus-p_zero)^M) / (M p_zero)``, evaluated stably.

    Written as ``T + (1 - T) G`` with ``T = 1 - (1-p_plus)^(M-1)`` and ``G``
    the tie contribution conditioned on no strict winner, every piece is a
    sum of positive terms, so relative accuracy is kept down to underflow.
    Accepts scalars or arrays.
    """
    if M < 1 or int(M) != M:
        raise DomainError(f"M must be a positive integer, got {M}")
    pp = np.atleast_1d(np.asarray(p_plus, dtype=np.float64))
    p0 = np.atleast_1d(np.asarray(p_zero, dtype=np.float64))
    pp, p0 = np.broadcast_arrays(pp, p0)
    _check_probs(pp, p0)
    out = np.zeros(pp.shape)
    if M > 1:
        M = float(M)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.log1p(-np.minimum(pp, 1.0))
            T = -np.expm1((M - 1) * lp)
            rest = 1.0 - pp
            theta = np.where(rest > 0, p0 / np.where(rest > 0, rest, 1.0), 1.0)
        G = np.zeros(pp.shape)
        full = theta >= 1.0 - 1e-15
        G[full] = (M - 1) / M
        mid = (~full) & (theta > 0)
        if np.any(mid):
            th = theta[mid]
            x = -M * np.log1p(-th)
            omp = _one_minus_phi(x)
            phi = 1.0 - omp
            G[mid] = omp - phi * _kappa_minus_one(th)
        out = T + (1.0 - T) * G
        out[pp >= 1.0] = 1.0
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(p_plus) == 0 and np.ndim(p_zero) == 0 else out


def log_q_m(M: int, log_p_plus, log_p_zero):
    """``log q_M`` from log-probabilities, accurate when ``q_M`` underflows."""
    lpp = np.atleast_1d(np.asarray(log_p_plus, dtype=np.float64))
    lp0 = np.atleast_1d(np.asarray(log_p_zero, dtype=np.float64))
    lpp, lp0 = np.broadcast_arrays(lpp, lp0)
    out = np.full(lpp.shape, -np.inf)
    if M > 1:
        big = np.maximum(lpp, lp0)
        small = math.log(M) + big < LOG_SMALL
        # q_M = (M-1)(p_plus + p_zero/2) (1 + O(M p))
        out[small] = math.log(M - 1) + np.logaddexp(lpp[small], lp0[small] - math.log(2.0))
        rest = ~small
        if np.any(rest):
            with np.errstate(divide="ignore"):
                out[rest] = np.log(q_m_exact(M, np.exp(lpp[rest]), np.exp(lp0[rest])))
    scalar = np.ndim(log_p_plus) == 0 and np.ndim(log_p_zero) == 0
    return float(out[0]) if scalar else out


def q_m_approx(M: int, p_plus, p_zero, lattice: bool = True):
    """Large-M forms: ``1 - e^{-M p_plus}(1 - e^{-M p_zero})/(M p_zero)`` when ties
    matter, ``1 - e^{-M p_plus}`` when they do not."""
    pp = np.asarray(p_plus, dtype=np.float64)
    p0 = np.asarray(p_zero, dtype=np.float64)
    if not lattice:
        out = -np.expm1(-M * pp)
    else:
        x = M * p0
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(x > 0, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0)
        # 1 - e^{-a} phi  computed as -expm1(-a + log phi)
        out = -np.expm1(-M * pp + np.log(phi))
    return float(out) if out.ndim == 0 else out


# --- score distributions -------------------------------------------------------

@dataclass(frozen=True)
class ScoreDistribution:
    """Law of ``sum_i log nu(X'_i, y_i)`` for i.i.d. ``X'_i ~ Px``.

    ``values`` is strictly increasing and finite; ``log_inf_mass`` is the log
    probability of the ``-inf`` atom (competitors that cannot produce some
    ``y_i``).  In lattice mode ``values = base + h * index``.
    """

    values: np.ndarray
    log_probs: np.ndarray
    log_inf_mass: float
    n: int
    y_type: tuple[int, ...]
    h: float = 0.0
    base: float = 0.0
    index: np.ndarray | None = None

    @property
    def atoms(self) -> list[tuple[float, float]]:
        out = [(-math.inf, self.log_inf_mass)] if self.log_inf_mass > -math.inf else []
        return out + list(zip(self.values.tolist(), self.log_probs.tolist()))

    @property
    def total_log_mass(self) -> float:
        return float(np.logaddexp(logsumexp(self.log_probs) if self.values.size else -np.inf, self.log_inf_mass))

    def log_tail(self) -> np.ndarray:
        """``log P[S >= values[i]]``; one trailing ``-inf`` entry for "beyond the top"."""
        rev = np.logaddexp.accumulate(self.log_probs[::-1])[::-1]
        return np.concatenate((rev, [-np.inf]))


def _lattice_grid(ch: Channel, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer index of each finite ``log nu(x, y)`` above the smallest one in its column."""
    off = np.zeros(ch.num_outputs)
    idx = np.full(ch.log_nu.shape, -1, dtype=np.int64)
    for y in range(ch.num_outputs):
        col = ch.log_nu[:, y]
        live = (ch.Px > 0) & np.isfinite(col)
        off[y] = col[live].min()
        k = (col[live] - off[y]) / h
        kr = np.round(k)
        if np.any(np.abs(k - kr) > SNAP_TOL * np.maximum(1.0, np.abs(k))):
            raise DomainError(f"log-likelihoods of output {y} do not lie on the lattice of span {h}")
        idx[live, y] = kr.astype(np.int64)
    return off, idx


class _ScoreCache:
    """Per-output convolution powers, built incrementally and reused across types."""

    def __init__(self, ch: Channel, h: float, merge_tol: float, atom_cap: int):
        self.ch = ch
        self.h = h
        self.merge_tol = merge_tol
        self.atom_cap = atom_cap
        self.powers: list[list] = [[] for _ in range(ch.num_outputs)]
        self.single = []
        #: log of the probability that a competitor symbol can produce each output
        self.log_finite = np.zeros(ch.num_outputs)
        if h > 0:
            self.offset, self.grid = _lattice_grid(ch, h)
        for y in range(ch.num_outputs):
            col = ch.log_nu[:, y]
            live = ch.Px > 0
            fin = live & np.isfinite(col)
            self.log_finite[y] = math.log1p(-ch.Px[live & ~np.isfinite(col)].sum())
            if h > 0:
                k = self.grid[fin, y]
                dense = np.full(int(k.max()) + 1, -np.inf)
                for kk, p in zip(k, ch.Px[fin]):
                    dense[kk] = np.logaddexp(dense[kk], math.log(p))
                self.single.append(dense)
                self.powers[y].append(np.zeros(1))
            else:
                self.single.append(self._merge(col[fin], np.log(ch.Px[fin])))
                self.powers[y].append((np.zeros(1), np.zeros(1)))

    def _merge(self, v, lp):
        order = np.argsort(v, kind="stable")
        v, lp = v[order], lp[order]
        if v.size == 0:
            return v, lp
        gap = np.diff(v) > self.merge_tol * np.maximum(1.0, np.abs(v[1:]))
        starts = np.flatnonzero(np.concatenate(([True], gap)))
        return v[starts], np.logaddexp.reduceat(lp, starts)

    def _conv_dense(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.size < b.size:
            a, b = b, a
        out = np.full(a.size + b.size - 1, -np.inf)
        for j in np.flatnonzero(np.isfinite(b)):
            seg = out[j : j + a.size]
            np.logaddexp(seg, a + b[j], out=seg)
        return out

    def _conv_atoms(self, a, b):
        v = (a[0][:, None] + b[0][None, :]).ravel()
        if v.size > self.atom_cap:
            raise ResourceError(
                f"score support would reach {v.size} atoms (cap {self.atom_cap}); raise the atom cap or coarsen the merge tolerance"
            )
        lp = (a[1][:, None] + b[1][None, :]).ravel()
        return self._merge(v, lp)

    def power(self, y: int, m: int):
        pw = self.powers[y]
        while len(pw) <= m:
            if self.h > 0:
                pw.append(self._conv_dense(pw[-1], self.single[y]))
            else:
                pw.append(self._conv_atoms(pw[-1], self.single[y]))
        return pw[m]

    def distribution(self, y_type: Sequence[int]) -> ScoreDistribution:
        y_type = tuple(int(c) for c in y_type)
        n = sum(y_type)
        log_fin = float(np.dot(y_type, self.log_finite))
        log_inf_mass = math.log(-math.expm1(log_fin)) if log_fin < 0 else -math.inf
        if self.h > 0:
            acc = np.zeros(1)
            for y, c in enumerate(y_type):
                if c:
                    acc = self._conv_dense(acc, self.power(y, c))
            keep = np.flatnonzero(np.isfinite(acc))
            base = float(np.dot(y_type, self.offset))
            return ScoreDistribution(
                values=base + self.h * keep, log_probs=acc[keep], log_inf_mass=log_inf_mass,
                n=n, y_type=y_type, h=self.h, base=base, index=keep,
            )
        acc = (np.zeros(1), np.zeros(1))
        for y, c in enumerate(y_type):
            if c:
                acc = self._conv_atoms(acc, self.power(y, c))
        v, lp = acc
        return ScoreDistribution(values=v, log_probs=lp, log_inf_mass=log_inf_mass, n=n, y_type=y_type)


def _resolve_span(ch: Channel, lattice) -> float:
    if lattice is None:
        return classify_nu_lattice(ch)[0]
    if isinstance(lattice, LatticeClassification):
        return lattice.h
    return float(lattice)


def score_distribution(
    ch: Channel, y_type: Sequence[int], lattice: LatticeClassification | float | None = None,
    merge_tol: float = MERGE_TOL, atom_cap: int = ATOM_CAP,
) -> ScoreDistribution:
    """Exact law of the competitor score given the output type ``y_type``."""
    if len(y_type) != ch.num_outputs or any(c < 0 for c in y_type):
        raise DomainError(f"y_type must be {ch.num_outputs} nonnegative counts")
    return _ScoreCache(ch, _resolve_span(ch, lattice), merge_tol, atom_cap).distribution(y_type)


@dataclass(frozen=True)
class PairwiseErrorStats:
    p_plus: float
    p_zero: float
    threshold: float
    log_p_plus: float
    log_p_zero: float


def _lookup(sd: ScoreDistribution, thresholds: np.ndarray, t_index: np.ndarray | None = None):
    """Log-probabilities of strictly exceeding and of tying each threshold."""
    tail = sd.log_tail()
    if sd.index is not None and t_index is not None:
        # dense lattice: position of index k is k minus nothing, since index is sorted
        pos = np.searchsorted(sd.index, t_index)
        hit = (pos < sd.index.size) & (sd.index[np.minimum(pos, sd.index.size - 1)] == t_index)
        lp0 = np.where(hit, sd.log_probs[np.minimum(pos, sd.index.size - 1)], -np.inf)
        lpp = tail[pos + hit.astype(np.int64)]
        return lpp, lp0
    tol = MATCH_TOL * np.maximum(1.0, np.abs(thresholds))
    lo = np.searchsorted(sd.values, thresholds - tol, side="left")
    hi = np.searchsorted(sd.values, thresholds + tol, side="right")
    lpp = tail[hi]
    lp0 = np.full(thresholds.shape, -np.inf)
    one = hi - lo == 1
    lp0[one] = sd.log_probs[lo[one]]
    for i in np.flatnonzero(hi - lo > 1):
        lp0[i] = logsumexp(sd.log_probs[lo[i] : hi[i]])
    return lpp, lp0


# --- joint types -------------------------------------------------------------

@dataclass(frozen=True)
class JointType:
    counts: np.ndarray
    log_prob: float

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def y_type(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.counts.sum(axis=0))


@lru_cache(maxsize=4096)
def compositions(m: int, parts: int) -> np.ndarray:
    """All vectors of ``parts`` nonnegative integers summing to ``m``, lexicographic, shape ``(C, parts)``."""
    if parts == 1:
        return np.array([[m]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(m + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(m + parts - 1 - prev - 1)
        rows.append(row)
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


def count_joint_types(ch: Channel, n: int) -> int:
    k = int(np.count_nonzero(ch.joint > 0))
    return math.comb(n + k - 1, k - 1)


@dataclass
class _TypeBatch:
    y_type: tuple[int, ...]
    log_prob: np.ndarray
    threshold: np.ndarray
    threshold_index: np.ndarray | None
    zbar: np.ndarray | None
    zbar1: np.ndarray | None
    cells: list  # per output (support inputs, compositions) for reconstructing counts
    picks: np.ndarray  # (batch, |Y|) row index into each output's composition table


def _outer_sum(parts: list[np.ndarray]) -> np.ndarray:
    acc = parts[0]
    for p in parts[1:]:
        acc = (acc[:, None] + p[None, :]).ravel()
    return acc


def _type_batches(
    ch: Channel, n: int, h: float = 0.0, eta: float | None = None, type_cap: int = TYPE_CAP
) -> Iterator[_TypeBatch]:
    """Joint types grouped by output type, with additive per-type statistics vectorised."""
    if n < 1:
        raise DomainError("block length n must be >= 1")
    total = count_joint_types(ch, n)
    if total > type_cap:
        raise ResourceError(f"{total} joint types exceed the type cap {type_cap}; lower n or raise the cap")
    P = ch.joint
    logP = ch.log_joint
    grid = _lattice_grid(ch, h)[1] if h > 0 else None
    if eta is not None:
        Z, Z1, _, _ = ZFamily(ch).evaluate(eta)
    support = [np.flatnonzero(P[:, y] > 0) for y in range(ch.num_outputs)]
    log_n_fact = float(gammaln(n + 1))
    ny = ch.num_outputs
    for y_type in compositions(n, ny):
        y_type = tuple(int(c) for c in y_type)
        if any(c > 0 and support[y].size == 0 for y, c in enumerate(y_type)):
            continue
        lp_parts, t_parts, ti_parts, z_parts, z1_parts, cells = [], [], [], [], [], []
        for y, c in enumerate(y_type):
            xs = support[y]
            comp = compositions(c, xs.size)
            cells.append((xs, comp))
            lp_parts.append(comp @ logP[xs, y] - gammaln(comp + 1).sum(axis=1))
            t_parts.append(comp @ ch.log_nu[xs, y])
            if grid is not None:
                ti_parts.append(comp @ grid[xs, y])
            if eta is not None:
                z_parts.append(comp @ Z[xs, y])
                z1_parts.append(comp @ Z1[xs, y])
        sizes = [len(c[1]) for c in cells]
        picks = np.stack(np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij"), axis=-1).reshape(-1, ny)
        yield _TypeBatch(
            y_type=y_type,
            log_prob=log_n_fact + _outer_sum(lp_parts),
            threshold=_outer_sum(t_parts),
            threshold_index=_outer_sum(ti_parts) if grid is not None else None,
            zbar=_outer_sum(z_parts) / n if eta is not None else None,
            zbar1=_outer_sum(z1_parts) / n if eta is not None else None,
            cells=cells,
            picks=picks,
        )


def enumerate_joint_types(ch: Channel, n: int, type_cap: int = TYPE_CAP) -> Iterator[JointType]:
    """Every joint type of positive probability with its multinomial log-probability."""
    for batch in _type_batches(ch, n, type_cap=type_cap):
        for row, lp in zip(batch.picks, batch.log_prob):
            counts = np.zeros((ch.num_inputs, ch.num_outputs), dtype=np.int64)
            for y, ((xs, comp), r) in enumerate(zip(batch.cells, row)):
                counts[xs, y] = comp[r]
            yield JointType(counts=counts, log_prob=float(lp))


def pairwise_stats(ch: Channel, jt: JointType, sd: ScoreDistribution) -> PairwiseErrorStats:
    """``p_plus``, ``p_zero`` and the threshold ``sum counts * log nu`` for one joint type."""
    if tuple(sd.y_type) != jt.y_type:
        raise DomainError("score distribution was built for a different output type")
    mask = jt.counts > 0
    if np.any(~np.isfinite(ch.log_nu[mask])):
        raise DomainError("joint type puts mass on a pair with W(y|x) = 0")
    t = float(np.sum(jt.counts[mask] * ch.log_nu[mask]))
    t_index = None
    if sd.index is not None:
        grid = _lattice_grid(ch, sd.h)[1]
        t_index = np.array([int(np.sum(jt.counts[mask] * grid[mask]))])
    lpp, lp0 = _lookup(sd, np.array([t]), t_index)
    return PairwiseErrorStats(
        p_plus=float(np.exp(lpp[0])), p_zero=float(np.exp(lp0[0])), threshold=t,
        log_p_plus=float(lpp[0]), log_p_zero=float(lp0[0]),
    )


def exact_prc(
    ch: Channel, n: int, M: int, lattice: LatticeClassification | float | None = None,
    merge_tol: float = MERGE_TOL, atom_cap: int = ATOM_CAP, type_cap: int = TYPE_CAP,
) -> float:
    """``log P_RC(n, M)``: the random-coding error probability averaged exactly over joint types.

    Returns ``-inf`` for ``M = 1``.
    """
    if M < 1 or int(M) != M:
        raise DomainError(f"M must be a positive integer, got {M}")
    if M == 1:
        return -math.inf
    h = _resolve_span(ch, lattice)
    cache = _ScoreCache(ch, h, merge_tol, atom_cap)
    terms = []
    for batch in _type_batches(ch, n, h, type_cap=type_cap):
        sd = cache.distribution(batch.y_type)
        lpp, lp0 = _lookup(sd, batch.threshold, batch.threshold_index)
        terms.append(logsumexp(batch.log_prob + log_q_m(M, lpp, lp0)))
    return float(logsumexp(terms))


def theorem1_bounds(
    ch: Channel, n: int, R: float, eps: float, delta2: float,
    lattice: LatticeClassification | float | None = None, type_cap: int = TYPE_CAP,
) -> tuple[float, float]:
    """Log of the two smoothed expectations that sandwich ``P_RC`` for large ``n``.

    For each joint type the argument of ``g_h`` is
    ``(1 -/+ eps) exp(n (Zbar + R - Zbar'^2 / (2 (mu2 -/+ delta2)))) / (eta sqrt(2 pi n mu2))``
    with ``Zbar``, ``Zbar'`` the type averages of ``Z(eta)`` and ``Z'(eta)``.
    """
    if eps < 0 or eps >= 1:
        raise DomainError("eps must lie in [0, 1)")
    ts = solve_exponent(ch, R)
    if not 0 <= delta2 < ts.mu2:
        raise DomainError(f"delta2 must lie in [0, mu2) = [0, {ts.mu2})")
    h = _resolve_span(ch, lattice)
    ctx = GContext(h, ts.eta)
    norm = math.log(ts.eta * math.sqrt(2 * math.pi * n * ts.mu2))
    out = []
    for sign in (-1.0, 1.0):
        scale = math.log1p(sign * eps)
        curv = 2.0 * (ts.mu2 + sign * delta2)
        terms = []
        for batch in _type_batches(ch, n, eta=ts.eta, type_cap=type_cap):
            log_u = scale + n * (batch.zbar + R - batch.zbar1**2 / curv) - norm
            terms.append(logsumexp(batch.log_prob + np.atleast_1d(log_g_eval(ctx, log_u))))
        out.append(scale + float(logsumexp(terms)))
    return out[0], out[1]
