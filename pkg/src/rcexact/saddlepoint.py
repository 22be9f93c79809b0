"""Leading-order saddlepoint approximations of ``p_zero`` and ``p_plus``.

For a joint type with output counts ``c_y`` the competitor score is a sum of
independent ``V_i = log nu(X'_i, y_i)``; its cumulant generating function is
``Lambda_V(lam) = sum_y c_y L_y(lam)``.  ``Lambda_V(0)`` is the log of the
probability that every competitor symbol is possible at all, so atoms at
``-inf`` are handled without special cases.  The approximations are compared
against the exact convolution in :mod:`rcexact.exact`; no higher-order
correction terms are included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel
from .errors import DomainError
from .exact import JointType
from .lattice import LatticeClassification
from .tilting import ZFamily, tilted_weights

LAMBDA_RTOL = 1e-12
MAX_ITER = 200


@dataclass(frozen=True)
class SaddleResult:
    lambda_star: float
    log_point_mass: float
    log_tail: float
    Lambda: float
    LambdaPP: float
    threshold: float
    span: float

    @property
    def log_rate(self) -> float:
        """``lambda* x - Lambda_V(lambda*)``, the tilting cost."""
        return self.lambda_star * self.threshold - self.Lambda


class _SumCGF:
    def __init__(self, ch: Channel, y_type):
        self.counts = np.asarray(y_type, dtype=np.float64)
        self.zf = ZFamily(ch)
        maxima = []
        for v, _ in self.zf._cols:
            maxima.append(v.max())
        self.sup = float(self.counts @ np.array(maxima))

    def __call__(self, lam: float) -> np.ndarray:
        """``(Lambda, Lambda', Lambda'')`` at ``lam``."""
        return self.zf.output_cumulants(lam)[:3] @ self.counts


def solve_lambda_star(ch: Channel, jt: JointType | tuple, x: float) -> float:
    """Root ``lam > 0`` of ``Lambda_V'(lam) = x`` by safeguarded Newton iteration.

    ``jt`` may be a joint type or a plain tuple of output counts.
    """
    y_type = jt.y_type if isinstance(jt, JointType) else tuple(jt)
    cgf = _SumCGF(ch, y_type)
    return _solve(cgf, x)


def _solve(cgf: _SumCGF, x: float) -> float:
    mean = cgf(0.0)[1]
    if not x > mean:
        raise DomainError(f"threshold {x} does not exceed the competitor mean {mean}")
    if x >= cgf.sup - 1e-12 * max(1.0, abs(cgf.sup)):
        raise DomainError(f"threshold {x} is at or beyond the largest attainable score {cgf.sup}")
    lo, hi = 0.0, 1.0
    while cgf(hi)[1] < x:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            raise DomainError("saddlepoint equation has no finite root")
    lam = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        _, d1, d2 = cgf(lam)
        f = d1 - x
        if f > 0:
            hi = lam
        else:
            lo = lam
        step = lam - f / d2 if d2 > 0 else 0.5 * (lo + hi)
        new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(new - lam) <= LAMBDA_RTOL * max(lam, 1e-300) or hi - lo <= LAMBDA_RTOL * lo:
            return new
        lam = new
    return lam


def effective_span(lc: LatticeClassification, y_type) -> float:
    """Span of the competitor sum for this output type: ``h`` times the gcd of
    the multipliers of the outputs that occur and carry more than one value."""
    if lc.h <= 0:
        return 0.0
    mults = [s.multiplier for s in lc.per_y if y_type[s.y] > 0 and s.multiplier]
    return lc.h * math.gcd(*mults) if mults else lc.h


def saddle_pair_probability(ch: Channel, jt: JointType, lattice: LatticeClassification) -> SaddleResult:
    """Approximate ``log p_zero`` and ``log p_plus`` of a joint type.

    With ``I = lam* x - Lambda_V(lam*)`` and ``V = Lambda_V''(lam*)``:
    lattice span ``h``:  ``p_zero ~ h e^{-I} / sqrt(2 pi V)`` and
    ``p_plus = P[S >= x + h] ~ h e^{-I} / ((e^{h lam*} - 1) sqrt(2 pi V))``;
    nonlattice: ``P[S >= x] ~ e^{-I} / (lam* sqrt(2 pi V))``, with no point mass.
    """
    mask = jt.counts > 0
    x = float(np.sum(jt.counts[mask] * ch.log_nu[mask]))
    cgf = _SumCGF(ch, jt.y_type)
    lam = _solve(cgf, x)
    L, _, L2 = cgf(lam)
    rate = lam * x - L
    half = 0.5 * math.log(2 * math.pi * L2)
    h = effective_span(lattice, jt.y_type)
    if h > 0:
        log_point = math.log(h) - rate - half
        log_tail = log_point - math.log(math.expm1(h * lam))
    else:
        log_point = -math.inf
        log_tail = -rate - math.log(lam) - half
    return SaddleResult(
        lambda_star=lam, log_point_mass=log_point, log_tail=log_tail,
        Lambda=float(L), LambdaPP=float(L2), threshold=x, span=h,
    )


def round_to_type(weights: np.ndarray, n: int) -> np.ndarray:
    """Counts summing to ``n`` closest to ``n * weights`` (largest-remainder rounding)."""
    target = n * np.asarray(weights, dtype=np.float64)
    base = np.floor(target).astype(np.int64)
    short = n - int(base.sum())
    order = np.argsort(-(target - base).ravel(), kind="stable")
    flat = base.ravel()
    flat[order[:short]] += 1
    return flat.reshape(base.shape)


def typical_joint_type(ch: Channel, rho: float, n: int) -> JointType:
    """The joint type nearest ``n P_rho``, where the dominant error events live."""
    P = tilted_weights(ch, rho, 1.0 / (1.0 + rho))
    counts = round_to_type(P, n)
    mask = counts > 0
    log_prob = (
        math.lgamma(n + 1)
        - sum(math.lgamma(c + 1) for c in counts[mask])
        + float(np.sum(counts[mask] * ch.log_joint[mask]))
    )
    return JointType(counts=counts, log_prob=log_prob)
