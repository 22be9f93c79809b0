"""The smoothing function g_h and the constants built from it.

With ``a = h * eta`` and ``b = a / (e^a - 1)`` (``b = 1`` when ``a = 0``):

    g_h(u) = 1 - exp(-b u) * (1 - exp(-a u)) / (a u),      g_0(u) = 1 - exp(-u).

``g_h(M p_plus / b)`` is the large-M form of the tie-aware error probability
with ``M`` codewords, so every bound in :mod:`rcexact.bounds` passes through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SERIES_CUTOFF = 1e-3


def _expm1_ratio(c: float) -> float:
    """``(e^c - 1) / c`` with value 1 at ``c = 0``."""
    return 1.0 if c == 0 else math.expm1(c) / c


def _log_phi(t: np.ndarray) -> np.ndarray:
    """``log((1 - e^-t) / t)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=np.float64)
    small = t < SERIES_CUTOFF
    out = np.empty_like(t)
    ts = t[small]
    out[small] = -ts / 2 + ts**2 / 24 - ts**4 / 2880
    tl = t[~small]
    out[~small] = np.log(-np.expm1(-tl)) - np.log(tl)
    return out


def _tie_kernel(t: np.ndarray) -> np.ndarray:
    """``(1 - e^-t (1 + t)) / t^2`` for ``t >= 0`` (value 1/2 at 0)."""
    t = np.asarray(t, dtype=np.float64)
    small = t < SERIES_CUTOFF
    out = np.empty_like(t)
    ts = t[small]
    out[small] = 0.5 - ts / 3 + ts**2 / 8 - ts**3 / 30
    tl = t[~small]
    out[~small] = -(np.expm1(-tl) + tl * np.exp(-tl)) / tl**2
    return out


@dataclass(frozen=True)
class GContext:
    h: float
    eta: float

    def __post_init__(self):
        if self.h < 0 or not math.isfinite(self.h):
            raise DomainError(f"span h must be finite and >= 0, got {self.h}")
        if not 0 < self.eta < 1:
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")

    @property
    def a(self) -> float:
        return self.h * self.eta

    @property
    def b(self) -> float:
        return 1.0 / _expm1_ratio(self.a)

    @property
    def c_h(self) -> float:
        return 1.0 + self.a


def g_eval(ctx: GContext, u):
    """``g_h(u)`` for ``u >= 0`` (scalar or array); nondecreasing with values in ``[0, 1)``."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0):
        raise DomainError("g_h is defined for u >= 0")
    a, b = ctx.a, ctx.b
    val = -np.expm1(-b * u + _log_phi(a * u))
    return float(val) if val.ndim == 0 else val


def log_g_eval(ctx: GContext, log_u):
    """``log g_h(exp(log_u))``, accurate when ``exp(log_u)`` underflows."""
    log_u = np.asarray(log_u, dtype=np.float64)
    a, b = ctx.a, ctx.b
    out = np.empty_like(log_u)
    tiny = log_u < -600
    # g_h(u) = (b + a/2) u + O(u^2)
    out[tiny] = log_u[tiny] + math.log(b + a / 2)
    u = np.exp(log_u[~tiny])
    out[~tiny] = np.log(-np.expm1(-b * u + _log_phi(a * u)))
    return float(out) if out.ndim == 0 else out


def g_derivative(ctx: GContext, u):
    """Analytic ``d g_h / du``."""
    u = np.asarray(u, dtype=np.float64)
    a, b = ctx.a, ctx.b
    t = a * u
    val = np.exp(-b * u) * (b * np.exp(_log_phi(t)) + a * _tie_kernel(t))
    return float(val) if val.ndim == 0 else val


def _check_rho(rho: float, what: str) -> None:
    if not 0 < rho < 1:
        raise DomainError(
            f"{what} needs 0 < rho < 1, got {rho}; at rho = 1 use the at/below-critical formulas"
        )


def psi_eval(rho: float, h: float, eta: float) -> float:
    """``psi_{rho,h} = integral of e^{-rho w} g_h(e^w) dw`` in closed form.

    For general ``eta`` the integral equals
    ``Gamma(1-rho)/rho * b^(rho+1) * (e^{a(1+rho)} - 1) / (a (1+rho))``, which is
    ``Gamma(1-rho)/rho * b^(rho+1) * (e^h - 1)/h`` at ``eta = 1/(1+rho)``.
    """
    _check_rho(rho, "psi")
    ctx = GContext(h, eta)
    return math.gamma(1.0 - rho) / rho * ctx.b ** (rho + 1.0) * _expm1_ratio(ctx.a * (1.0 + rho))


def union_coefficient(rho: float, h: float, eta: float) -> float:
    """``integral of e^{-rho w} min(b e^w, 1) dw = (1/(1-rho) + 1/rho) b^rho``."""
    _check_rho(rho, "union coefficient")
    b = GContext(h, eta).b
    return (1.0 / (1.0 - rho) + 1.0 / rho) * b**rho


# --- inequality suite --------------------------------------------------------

U_GRID = np.logspace(-6, 3, 401)
H_GRID = (0.0, 0.5, 1.0, math.log(3.0))
ETA_GRID = (0.5, 2.0 / 3.0)
RHO_GRID = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class InequalityResult:
    name: str
    points: int
    violations: int
    worst_excess: float
    worst_at: tuple

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _tally(name, excess, labels):
    excess = np.asarray(excess)
    i = int(np.argmax(excess))
    return InequalityResult(
        name=name, points=int(excess.size), violations=int(np.sum(excess > 0)),
        worst_excess=float(excess.flat[i]), worst_at=labels[i],
    )


def gh_inequality_suite(
    u_grid=U_GRID, h_grid=H_GRID, eta_grid=ETA_GRID, rho_grid=RHO_GRID, fd_step=1e-6, fd_tol=1e-6
) -> list[InequalityResult]:
    """Evaluate the g_h inequalities on a grid and report each one separately.

    The derivative bounds are checked on the analytic derivative, which is in
    turn compared against central finite differences.  A relative slack of
    ``1e-12`` absorbs rounding on the upper bounds.
    """
    slack = 1e-12
    rows: dict[str, list] = {k: [] for k in ("upper_min", "upper_pow", "deriv_nonneg", "deriv_exp", "deriv_const", "deriv_fd")}
    labels: dict[str, list] = {k: [] for k in rows}
    for h in h_grid:
        for eta in eta_grid:
            ctx = GContext(h, eta)
            g = g_eval(ctx, u_grid)
            d = g_derivative(ctx, u_grid)
            c = ctx.c_h
            lab = [(h, eta, float(u)) for u in u_grid]
            bound = np.minimum(1.0, c * u_grid)
            rows["upper_min"].append(g - bound * (1 + slack))
            labels["upper_min"] += lab
            for rho in rho_grid:
                rows["upper_pow"].append(g - c * u_grid**rho * (1 + slack))
                labels["upper_pow"] += [(h, eta, rho, float(u)) for u in u_grid]
            rows["deriv_nonneg"].append(-d)
            labels["deriv_nonneg"] += lab
            rows["deriv_exp"].append(d - (u_grid + ctx.a) * np.exp(-u_grid) * (1 + slack))
            labels["deriv_exp"] += lab
            rows["deriv_const"].append(d - c * (1 + slack))
            labels["deriv_const"] += lab
            step = fd_step * np.maximum(u_grid, 1.0)
            lo = np.maximum(u_grid - step, 0.0)
            fd = (g_eval(ctx, u_grid + step) - g_eval(ctx, lo)) / (u_grid + step - lo)
            rows["deriv_fd"].append(np.abs(fd - d) - fd_tol)
            labels["deriv_fd"] += lab
    names = {
        "upper_min": "g_h(u) <= min(1, c_h u)",
        "upper_pow": "g_h(u) <= c_h u^rho",
        "deriv_nonneg": "g_h'(u) >= 0",
        "deriv_exp": "g_h'(u) <= (u + h eta) e^-u",
        "deriv_const": "g_h'(u) <= c_h",
        "deriv_fd": "analytic g_h' matches finite differences",
    }
    return [_tally(names[k], np.concatenate(rows[k]), labels[k]) for k in rows]
