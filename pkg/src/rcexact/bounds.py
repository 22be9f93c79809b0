"""Closed-form asymptotics of the random-coding error probability and comparison reports.

All functions return natural-log probabilities.  The ``(1 + o(1))`` factors of
the asymptotic statements are never folded in; the report exposes them as
ratios against the exact value instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .channel import Channel
from .errors import DomainError, NotApplicableError, ResourceError
from .exact import ATOM_CAP, TYPE_CAP, count_joint_types, exact_prc, theorem1_bounds
from .gfun import psi_eval, union_coefficient
from .lattice import LatticeClassification, classify
from .tilting import Regime, TiltedSolution, critical_rate, gallager_moments, solve_exponent


class OutsideHypothesesWarning(UserWarning):
    """Raised when an asymptotic formula is evaluated for a channel whose
    score pair is not strongly nonlattice, where it is not known to hold."""


def lattice_factor(h: float, eta: float) -> float:
    """``h / (e^{eta h} - 1)``, equal to ``1/eta`` at ``h = 0``."""
    a = eta * h
    return 1.0 / eta if a == 0 else h / math.expm1(a)


def _flag(lc: LatticeClassification, warn: bool) -> None:
    if warn and not lc.strongly_nonlattice:
        warnings.warn(
            "(Z(eta), Z'(eta)) is not strongly nonlattice; the asymptotic formula is outside its hypotheses",
            OutsideHypothesesWarning,
            stacklevel=3,
        )


def theorem2_asymptotic(ts: TiltedSolution, lc: LatticeClassification, n: int, warn: bool = True) -> float:
    """Leading term of ``log P_RC(n)`` in the regime recorded in ``ts``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    _flag(lc, warn)
    base = -n * ts.Er
    if ts.regime is Regime.ABOVE_CRITICAL:
        if ts.rho >= 1:
            raise DomainError("above-critical regime with rho = 1")
        rho = ts.rho
        coef = (
            psi_eval(rho, lc.h, ts.eta) * ts.mu2 ** ((1 - rho) / 2)
            / (ts.eta**rho * (2 * math.pi * n) ** ((1 + rho) / 2) * math.sqrt(ts.mu2 * ts.sigma00 + rho * ts.detSigma01))
        )
        return math.log(coef) + base
    coef = lattice_factor(lc.h, ts.eta) / math.sqrt(2 * math.pi * n * (ts.mu2 + ts.sigma11))
    if ts.regime is Regime.AT_CRITICAL:
        coef /= 2.0
    return math.log(coef) + base


def lemma6_expectation(
    ch: Channel, ts: TiltedSolution, lc: LatticeClassification, n: int, c1: float, c2: float, warn: bool = True
) -> float:
    """Leading term of ``log E[g_h(exp(n(Zbar + R - Zbar'^2/(2 c1))) / (c2 sqrt n))]``.

    The closed-form asymptote is this expression at ``c1 = mu2`` and ``c2 = eta sqrt(2 pi mu2)``.
    """
    if c1 <= 0 or c2 <= 0:
        raise DomainError("c1 and c2 must be positive")
    _flag(lc, warn)
    base = -n * ts.Er
    scale = c2 * math.sqrt(n)
    if ts.regime is Regime.ABOVE_CRITICAL:
        rho = ts.rho
        coef = psi_eval(rho, lc.h, ts.eta) * scale ** (-rho) / math.sqrt(
            2 * math.pi * n * (ts.sigma00 + rho * ts.detSigma01 / c1)
        )
        return math.log(coef) + base
    coef = ts.eta * lattice_factor(lc.h, ts.eta) / (scale * math.sqrt(1 + ts.sigma11 / c1))
    if ts.regime is Regime.AT_CRITICAL:
        coef /= 2.0
    return math.log(coef) + base


def gallager_asymptotic(ch: Channel, n: int, R: float, lc: LatticeClassification | None = None) -> float:
    """``log(1 / (eta sqrt(2 pi n mu2'))) - n E_r`` for nonlattice channels below the critical rate."""
    lc = lc or classify(ch)
    if lc.h > 0:
        raise NotApplicableError("the Gallager asymptote applies to nonlattice channels only")
    if R >= critical_rate(ch):
        raise NotApplicableError("the Gallager asymptote applies below the critical rate only")
    ts = solve_exponent(ch, R)
    mu2p = gallager_moments(ch).mu2_prime
    return -math.log(ts.eta * math.sqrt(2 * math.pi * n * mu2p)) - n * ts.Er


def union_asymptotic(ts: TiltedSolution, lc: LatticeClassification, n: int, warn: bool = True) -> float:
    """Above-critical leading term of the random-coding union bound."""
    if ts.rho >= 1:
        raise NotApplicableError("the union asymptote is stated for rho < 1 only")
    _flag(lc, warn)
    rho = ts.rho
    coef = (
        union_coefficient(rho, lc.h, ts.eta) * ts.mu2 ** ((1 - rho) / 2)
        / (ts.eta**rho * (2 * math.pi * n) ** ((1 + rho) / 2) * math.sqrt(ts.mu2 * ts.sigma00 + rho * ts.detSigma01))
    )
    return math.log(coef) - n * ts.Er


# --- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class CompareOptions:
    eps: float = 0.1
    #: delta2 as a fraction of mu2
    delta2_fraction: float = 0.1
    with_exact: bool = True
    with_thm1: bool = True
    type_cap: int = TYPE_CAP
    atom_cap: int = ATOM_CAP
    M_override: int | None = None


@dataclass(frozen=True)
class BoundReport:
    """One row of a comparison sweep.

    ``R_eff = log(M)/n`` is the rate actually realised by the integer code size
    and is the rate at which every asymptotic column is evaluated.  Missing
    fields are ``None`` and the reason is recorded in ``notes``.
    """

    n: int
    M: int
    R: float
    R_eff: float
    regime: str
    table1_cell: str
    outside_hypotheses: bool
    log_exact: float | None = None
    log_thm1_lower: float | None = None
    log_thm1_upper: float | None = None
    log_thm2: float | None = None
    log_gallager: float | None = None
    log_union_asym: float | None = None
    notes: tuple[str, ...] = field(default=())

    def ratio(self, log_bound: float | None) -> float | None:
        if self.log_exact is None or log_bound is None:
            return None
        return math.exp(self.log_exact - log_bound)

    @property
    def ratio_thm2(self) -> float | None:
        return self.ratio(self.log_thm2)

    @property
    def ratio_gallager(self) -> float | None:
        return self.ratio(self.log_gallager)

    @property
    def ratio_union(self) -> float | None:
        return self.ratio(self.log_union_asym)


def code_size(n: int, R: float) -> int:
    """``ceil(exp(n R))``, computed so that exact integers are not bumped by rounding."""
    x = n * R
    M = math.ceil(math.exp(x))
    if M > 1 and math.log(M - 1) >= x - 1e-12:
        M -= 1
    return M


def compare_report(
    ch: Channel, R: float, n_list: Sequence[int], options: CompareOptions | None = None
) -> list[BoundReport]:
    """Exact value, smoothed sandwich and closed-form asymptotes for each ``n`` (sorted ascending)."""
    opts = options or CompareOptions()
    rows = []
    for n in sorted(set(int(n) for n in n_list)):
        if n < 1:
            raise DomainError("every n must be >= 1")
        M = opts.M_override or code_size(n, R)
        R_eff = math.log(M) / n
        notes: list[str] = []
        vals: dict[str, float | None] = {}
        try:
            ts = solve_exponent(ch, R_eff)
        except DomainError as exc:
            ts = None
            notes.append(f"exponent: {exc}")
        lc = classify(ch, ts.eta if ts is not None else 0.5)
        if ts is not None:
            vals["log_thm2"] = theorem2_asymptotic(ts, lc, n, warn=False)
            try:
                vals["log_union_asym"] = union_asymptotic(ts, lc, n, warn=False)
            except NotApplicableError as exc:
                notes.append(f"union: {exc}")
            try:
                vals["log_gallager"] = gallager_asymptotic(ch, n, R_eff, lc)
            except NotApplicableError as exc:
                notes.append(f"gallager: {exc}")
        feasible = count_joint_types(ch, n) <= opts.type_cap
        if not feasible:
            notes.append(f"exact: {count_joint_types(ch, n)} joint types exceed cap {opts.type_cap}")
        if feasible and opts.with_exact:
            try:
                vals["log_exact"] = exact_prc(ch, n, M, lc, atom_cap=opts.atom_cap, type_cap=opts.type_cap)
            except ResourceError as exc:
                notes.append(f"exact: {exc}")
        if feasible and opts.with_thm1 and ts is not None:
            lo, hi = theorem1_bounds(ch, n, R_eff, opts.eps, opts.delta2_fraction * ts.mu2, lc, opts.type_cap)
            vals["log_thm1_lower"], vals["log_thm1_upper"] = lo, hi
        rows.append(
            BoundReport(
                n=n, M=M, R=R, R_eff=R_eff,
                regime=ts.regime.value if ts is not None else "undefined",
                table1_cell=lc.table1_cell.value,
                outside_hypotheses=not lc.strongly_nonlattice,
                notes=tuple(notes),
                **vals,
            )
        )
    return rows
