"""Cumulants of the pairwise score and the random-coding exponent.

For a sent symbol ``x`` received as ``y`` and an independent competitor
``X' ~ Px`` the pairwise score is ``r = log nu(X', y) - log nu(x, y)`` and

    Z_{xy}(lam) = log E_{X'} exp(lam * r).

Everything here is a pure function of an immutable :class:`Channel`; sums
over ``(x, y)`` run in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .channel import Channel, mutual_information
from .errors import DomainError, SingularChannelError

ALPHA_MIN = 1e-8
CAPACITY_GAP = 1e-8
SINGULAR_MU2 = 1e-14
CRITICAL_TOL = 1e-10


class Regime(str, Enum):
    ABOVE_CRITICAL = "above_critical"
    AT_CRITICAL = "at_critical"
    BELOW_CRITICAL = "below_critical"


class ZFamily:
    """Evaluator for ``(Z, Z', Z'', Z''')`` on every ``(x, y)`` of positive probability.

    ``Z_{xy}(lam) = L_y(lam) - lam * log nu(x, y)`` where ``L_y`` is the
    cumulant generating function of ``log nu(X', y)``.  Competitors with
    ``W(y|x') = 0`` carry score ``-inf`` and drop out of every sum.
    """

    def __init__(self, ch: Channel):
        self.ch = ch
        self.support = ch.joint > 0
        self._cols = []
        for y in range(ch.num_outputs):
            col = ch.log_nu[:, y]
            ok = (ch.Px > 0) & np.isfinite(col)
            self._cols.append((col[ok], np.log(ch.Px[ok])))

    def output_cumulants(self, lam: float) -> np.ndarray:
        """``(L_y, L_y', L_y'', L_y''')`` at ``lam``, shape ``(4, |Y|)``."""
        out = np.empty((4, self.ch.num_outputs))
        for y, (v, logw) in enumerate(self._cols):
            a = lam * v + logw
            L = logsumexp(a)
            q = np.exp(a - L)
            m1 = q @ v
            d = v - m1
            out[:, y] = (L, m1, q @ d**2, q @ d**3)
        return out

    def evaluate(self, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``Z, Z', Z'', Z'''`` of shape ``(|X|, |Y|)``; NaN off the support."""
        L = self.output_cumulants(lam)
        with np.errstate(invalid="ignore"):
            lognu = np.where(self.support, self.ch.log_nu, np.nan)
        Z = L[0][None, :] - lam * lognu
        Z1 = L[1][None, :] - lognu
        Z2 = np.where(self.support, L[2][None, :], np.nan)
        Z3 = np.where(self.support, L[3][None, :], np.nan)
        return Z, Z1, Z2, Z3


def log_mgf(ch: Channel, alpha: float, lam: float, zf: ZFamily | None = None) -> float:
    """``log E[exp(alpha * Z(lam))]`` under the joint law of ``(X, Y)``."""
    zf = zf or ZFamily(ch)
    Z = zf.evaluate(lam)[0]
    s = zf.support
    return float(logsumexp(ch.log_joint[s] + alpha * Z[s]))


def lambda_of_alpha(ch: Channel, alpha: float, zf: ZFamily | None = None) -> float:
    """Gallager-type objective ``Lambda(alpha) = log E[exp(alpha Z(1/(1+alpha)))]``."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    return log_mgf(ch, alpha, 1.0 / (1.0 + alpha), zf)


@dataclass(frozen=True)
class TiltedMoments:
    LambdaRho: float
    mu0: float
    mu1: float
    mu2: float
    mu3: float
    sigma00: float
    sigma01: float
    sigma11: float

    @property
    def detSigma01(self) -> float:
        return self.sigma00 * self.sigma11 - self.sigma01**2


def tilted_weights(ch: Channel, rho: float, eta: float, zf: ZFamily | None = None) -> np.ndarray:
    """Probabilities ``P_rho(x, y)`` (zero off the support), summing to one."""
    zf = zf or ZFamily(ch)
    Z = zf.evaluate(eta)[0]
    s = zf.support
    a = np.full(Z.shape, -np.inf)
    a[s] = ch.log_joint[s] + rho * Z[s]
    return np.exp(a - logsumexp(a[s]))


def tilted_moments(ch: Channel, rho: float, eta: float, zf: ZFamily | None = None) -> TiltedMoments:
    """Means of ``Z^(i)(eta)`` and covariances of ``(Z(eta), Z'(eta))`` under ``P_rho``."""
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    zf = zf or ZFamily(ch)
    s = zf.support
    Z, Z1, Z2, Z3 = (a[s] for a in zf.evaluate(eta))
    a = ch.log_joint[s] + rho * Z
    Lam = float(logsumexp(a))
    w = np.exp(a - Lam)
    mu = [float(w @ z) for z in (Z, Z1, Z2, Z3)]
    d0 = Z - mu[0]
    d1 = Z1 - mu[1]
    return TiltedMoments(
        LambdaRho=Lam, mu0=mu[0], mu1=mu[1], mu2=mu[2], mu3=mu[3],
        sigma00=float(w @ (d0 * d0)), sigma01=float(w @ (d0 * d1)), sigma11=float(w @ (d1 * d1)),
    )


@dataclass(frozen=True)
class TiltedSolution:
    R: float
    rho: float
    eta: float
    LambdaRho: float
    Er: float
    regime: Regime
    mu0: float
    mu1: float
    mu2: float
    mu3: float
    sigma00: float
    sigma01: float
    sigma11: float

    @property
    def detSigma01(self) -> float:
        return self.sigma00 * self.sigma11 - self.sigma01**2

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["regime"] = self.regime.value
        d["detSigma01"] = self.detSigma01
        return d


def _objective_slope(ch: Channel, R: float, alpha: float, zf: ZFamily) -> float:
    # d/dalpha [alpha R + Lambda(alpha)] = R + mu0(alpha), since mu1 = 0 at eta = 1/(1+alpha)
    return R + tilted_moments(ch, alpha, 1.0 / (1.0 + alpha), zf).mu0


def solve_exponent(ch: Channel, R: float) -> TiltedSolution:
    """Minimise ``alpha R + Lambda(alpha)`` over ``(0, 1]`` and tilt at the optimum.

    The objective is convex, so its minimiser is the root of the analytic slope
    ``R + mu0(alpha)``; when the slope is still negative at ``alpha = 1`` the
    optimum is clamped to ``rho = 1`` (rates at or below the critical rate).
    """
    I = mutual_information(ch)
    if not 0 < R < I - CAPACITY_GAP:
        raise DomainError(f"rate {R} outside (0, I(X;Y)) = (0, {I})")
    zf = ZFamily(ch)
    slope1 = _objective_slope(ch, R, 1.0, zf)
    if slope1 <= CRITICAL_TOL:
        rho = 1.0
        regime = Regime.AT_CRITICAL if abs(slope1) <= CRITICAL_TOL else Regime.BELOW_CRITICAL
    else:
        if _objective_slope(ch, R, ALPHA_MIN, zf) >= 0:
            raise DomainError(f"rate {R} too close to I(X;Y) = {I}")
        rho = brentq(lambda a: _objective_slope(ch, R, a, zf), ALPHA_MIN, 1.0, xtol=1e-15, rtol=1e-15, maxiter=500)
        regime = Regime.ABOVE_CRITICAL
    eta = 1.0 / (1.0 + rho)
    tm = tilted_moments(ch, rho, eta, zf)
    if tm.mu2 <= SINGULAR_MU2:
        raise SingularChannelError(
            "mu2 vanishes: the channel violates the non-singular assumption"
        )
    return TiltedSolution(
        R=R, rho=rho, eta=eta, LambdaRho=tm.LambdaRho, Er=-(rho * R + tm.LambdaRho), regime=regime,
        mu0=tm.mu0, mu1=tm.mu1, mu2=tm.mu2, mu3=tm.mu3,
        sigma00=tm.sigma00, sigma01=tm.sigma01, sigma11=tm.sigma11,
    )


def critical_rate(ch: Channel) -> float:
    """Largest rate whose exponent optimiser is ``rho = 1``: ``-mu0`` at ``rho = 1``."""
    tm = tilted_moments(ch, 1.0, 0.5)
    if tm.mu2 <= SINGULAR_MU2:
        raise SingularChannelError("mu2 vanishes at rho = 1; critical rate undefined")
    return -tm.mu0


def error_exponent(ch: Channel, R: float) -> float:
    return solve_exponent(ch, R).Er


@dataclass(frozen=True)
class GallagerMoments:
    omega: np.ndarray  # shape (3, |Y|): omega_0, omega_1, omega_2
    mu2_prime: float
    mu2_check: float


def gallager_moments(ch: Channel) -> GallagerMoments:
    """``omega_m(y) = sum_x Px (log W)^m sqrt(W)`` for ``m = 0, 1, 2`` and the derived curvatures.

    Entries with ``W(y|x) = 0`` contribute 0: the ``sqrt(W)`` factor dominates
    the logarithmic singularity.
    """
    W = ch.W
    pos = W > 0
    logW = np.where(pos, np.log(np.where(pos, W, 1.0)), 0.0)
    root = np.sqrt(W)
    omega = np.stack([ch.Px @ (logW**m * root * pos) for m in range(3)])
    w0, w1, w2 = omega
    mu2_prime = 2.0 * np.sum(w0 * w2 - w1**2) / np.sum(w0**2)
    return GallagerMoments(omega=omega, mu2_prime=float(mu2_prime), mu2_check=float(mu2_prime / 2.0))
