"""Independent reference computations used by the tests.

Nothing here imports the numerical kernels under test: each oracle recomputes
its quantity from first principles (exact rationals, brute-force sequence
enumeration, high-precision quadrature or a plain grid search).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath as mp
import numpy as np


# --- q_M ---------------------------------------------------------------------

def q_m_direct(M: int, p_plus, p_zero) -> Fraction:
    """Error probability with ``M`` codewords by the defining sum, in exact rationals.

    A strict winner among the ``M - 1`` competitors causes an error; otherwise
    ``i`` ties with no strict winner cause an error with probability ``i/(i+1)``.
    """
    pp = Fraction(p_plus)
    p0 = Fraction(p_zero)
    rest = 1 - pp - p0
    total = 1 - (1 - pp) ** (M - 1)
    for i in range(1, M):
        total += math.comb(M - 1, i) * p0**i * rest ** (M - 1 - i) * (1 - Fraction(1, i + 1))
    return total


# --- brute-force random coding -----------------------------------------------

def naive_prc(W, Px, n: int, M: int, tie_tol: float = 1e-9) -> float:
    """``P_RC(n, M)`` by enumerating every sent block, received block and competitor block."""
    W = np.asarray(W, dtype=float)
    Px = np.asarray(Px, dtype=float)
    nx, ny = W.shape
    Py = Px @ W
    with np.errstate(divide="ignore"):
        lnu = np.log(W) - np.log(Py)
    xs = np.array(list(itertools.product(range(nx), repeat=n)))
    ys = np.array(list(itertools.product(range(ny), repeat=n)))
    px_blocks = np.prod(Px[xs], axis=1)
    total = 0.0
    for x, px in zip(xs, px_blocks):
        if px == 0:
            continue
        for y in ys:
            pxy = px * np.prod(W[x, y])
            if pxy == 0:
                continue
            own = lnu[x, y].sum()
            comp = lnu[xs, y].sum(axis=1)  # every competitor block at once
            with np.errstate(invalid="ignore"):
                diff = comp - own
            tie = np.isfinite(diff) & (np.abs(diff) <= tie_tol)
            win = np.isfinite(diff) & (diff > tie_tol)
            p_plus = float(px_blocks[win].sum())
            p_zero = float(px_blocks[tie].sum())
            q = float(q_m_direct(M, p_plus, p_zero))
            total += pxy * q
    return total


def naive_score_law(W, Px, y_block) -> dict:
    """Exact law of ``sum_i log nu(X'_i, y_i)`` by enumerating competitor blocks (values rounded to 1e-9)."""
    W = np.asarray(W, dtype=float)
    Px = np.asarray(Px, dtype=float)
    Py = Px @ W
    law: dict = {}
    for xb in itertools.product(range(W.shape[0]), repeat=len(y_block)):
        p = float(np.prod([Px[x] for x in xb]))
        if p == 0:
            continue
        if any(W[x, y] == 0 for x, y in zip(xb, y_block)):
            key = -math.inf
        else:
            key = round(sum(math.log(W[x, y] / Py[y]) for x, y in zip(xb, y_block)), 9)
        law[key] = law.get(key, 0.0) + p
    return law


# --- exponent ------------------------------------------------------------------

def gallager_lambda(W, Px, alpha: np.ndarray) -> np.ndarray:
    """``log sum_y (sum_x Px W^{1/(1+alpha)})^{1+alpha}`` vectorised over ``alpha``."""
    W = np.asarray(W, dtype=float)
    Px = np.asarray(Px, dtype=float)
    a = np.asarray(alpha, dtype=float)[:, None, None]
    inner = np.sum(Px[None, :, None] * W[None] ** (1.0 / (1.0 + a)), axis=1)
    return np.log(np.sum(inner ** (1.0 + a[:, :, 0]), axis=1))


def grid_exponent(W, Px, R: float, step: float = 1e-6) -> tuple[float, float]:
    """Brute-force ``max over alpha in (0, 1]`` of ``-(alpha R + Lambda(alpha))`` on a uniform grid."""
    alpha = np.arange(step, 1.0 + step / 2, step)
    vals = -(alpha * R + gallager_lambda(W, Px, alpha))
    i = int(np.argmax(vals))
    return float(alpha[i]), float(vals[i])


def bisect_root(f, lo: float, hi: float, tol: float = 1e-14) -> float:
    flo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# --- g_h and its integrals -----------------------------------------------------

def g_mp(h, eta, u, dps: int | None = 50):
    """``g_h(u)`` from its defining formula at ``dps`` digits (``None`` keeps the current precision).

    The formula cancels twice for small ``u``, so the working precision grows
    with ``-log10 u`` to keep ``dps`` significant digits in the result.
    """
    dps = dps or mp.mp.dps
    u = mp.mpf(u)
    extra = 0 if u == 0 or u >= 1 else int(2 * -mp.log10(u)) + 10
    with mp.workdps(dps + extra):
        h, eta, u = mp.mpf(h), mp.mpf(eta), mp.mpf(u)
        if u == 0:
            return mp.mpf(0)
        if h == 0:
            return 1 - mp.e ** (-u)
        a = h * eta
        b = a / mp.expm1(a)
        return +(1 - mp.e ** (-b * u) * (1 - mp.e ** (-a * u)) / (a * u))


def g_prime_mp(h, eta, u, dps: int = 50):
    with mp.workdps(dps):
        return mp.diff(lambda t: g_mp(h, eta, t, None), mp.mpf(u))


def _quad_near_zero(f, rho):
    """``integral_0^1 f(z) dz`` for ``f(z) ~ z^{-rho}``, via ``z = t^k`` with ``k = 1/(1 - rho)``."""
    k = 1 / (1 - rho)
    return mp.quad(lambda t: k * t ** (k - 1) * f(t**k), [0, mp.mpf("0.01"), 1])


def psi_quad(rho, h, eta, dps: int = 30):
    """``integral over the real line of e^{-rho w} g_h(e^w) dw``, taken in ``z = e^w``."""
    with mp.workdps(dps):
        rho = mp.mpf(rho)
        f = lambda z: z ** (-rho - 1) * g_mp(h, eta, z, dps)
        body = _quad_near_zero(f, rho) + mp.quad(f, [1, 10, 100])
        # beyond z = 100 write g = 1 - (1 - g): the constant part integrates in closed form
        tail = mp.mpf(100) ** (-rho) / rho - mp.quad(lambda z: z ** (-rho - 1) * (1 - g_mp(h, eta, z, dps)), [100, mp.inf])
        return body + tail


def psi_derivative_quad(rho, h, eta, dps: int = 30):
    """``(1/rho) integral_0^inf z^{-rho} g_h'(z) dz`` with a closed-form derivative."""
    with mp.workdps(dps):
        h, eta = mp.mpf(h), mp.mpf(eta)
        a = h * eta

        def dg(z):
            if a == 0:
                return mp.e ** (-z)
            b = a / mp.expm1(a)
            t = a * z
            # 1 - e^{-t}(1 + t) is the regularised lower incomplete gamma P(2, t)
            tie = mp.gammainc(2, 0, t, regularized=True)
            return mp.e ** (-b * z) * (b * -mp.expm1(-t) / t + a * tie / t**2)

        f = lambda z: z ** (-rho) * dg(z)
        return (_quad_near_zero(f, mp.mpf(rho)) + mp.quad(f, [1, 10, 100, mp.inf])) / rho


def union_quad(rho, h, eta, dps: int = 30):
    """``integral of e^{-rho w} min(b e^w, 1) dw`` with ``b = h eta/(e^{h eta} - 1)``."""
    with mp.workdps(dps):
        a = mp.mpf(h) * eta
        b = mp.mpf(1) if a == 0 else a / mp.expm1(a)
        kink = -mp.log(b)
        f = lambda w: mp.e ** (-rho * w) * min(b * mp.e**w, mp.mpf(1))
        return mp.quad(f, [-mp.inf, kink, mp.inf])
