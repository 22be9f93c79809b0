"""Lattice span of the log-likelihood ratio and the strongly-nonlattice test.

Floating-point data cannot certify irrationality.  Two positive reals are
treated as commensurable when their ratio has a continued-fraction convergent
``p/q`` with ``q <= max_denominator`` that reproduces it to within ``tol``
(relative).  With ``tol = 1e-9`` a generic ratio passes by accident with
probability about ``max_denominator**2 * tol``, which fixes the default cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .channel import Channel
from .errors import DomainError
from .tilting import ZFamily

LATTICE_TOL = 1e-9
MAX_DENOMINATOR = 1000
#: largest integer frequency searched when looking for a lattice direction
MAX_FREQUENCY = 60


class LatticeCell(str, Enum):
    LATTICE_NOT_SNL = "lattice_notSNL"
    LATTICE_SNL = "lattice_SNL"
    NONLATTICE_NOT_SNL = "nonlattice_notSNL"
    NONLATTICE_SNL = "nonlattice_SNL"


def table1_cell(h: float, strongly_nonlattice: bool) -> LatticeCell:
    if h > 0:
        return LatticeCell.LATTICE_SNL if strongly_nonlattice else LatticeCell.LATTICE_NOT_SNL
    return LatticeCell.NONLATTICE_SNL if strongly_nonlattice else LatticeCell.NONLATTICE_NOT_SNL


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def commensurate_ratio(r: float, tol: float = LATTICE_TOL, max_denominator: int = MAX_DENOMINATOR) -> Fraction | None:
    """The fraction ``p/q`` (``q <= max_denominator``) matching ``r`` within ``tol``, else ``None``."""
    f = Fraction(r).limit_denominator(max_denominator)
    return f if _close(float(f), r, tol) else None


def real_gcd(values: Sequence[float], tol: float = LATTICE_TOL, max_denominator: int = MAX_DENOMINATOR) -> float:
    """Largest ``g > 0`` with every value an integer multiple of ``g``; 0 if none exists.

    The result is refined by averaging ``v / round(v / g)`` so it does not
    depend on the order in which the values are folded in.
    """
    vals = [abs(float(v)) for v in values]
    if not vals or any(v == 0 for v in vals):
        raise DomainError("real_gcd needs nonzero values")
    g = vals[0]
    for v in vals[1:]:
        f = commensurate_ratio(v / g, tol, max_denominator)
        if f is None:
            return 0.0
        g = g / f.denominator
    mult = [round(v / g) for v in vals]
    # multipliers of a common divisor must themselves be coprime for g maximal
    if math.gcd(*mult) != 1:
        g *= math.gcd(*mult)
        mult = [m // math.gcd(*mult) for m in mult]
    return float(np.mean([v / m for v, m in zip(vals, mult)]))


@dataclass(frozen=True)
class OutputSpan:
    """Grid of ``log nu(., y)``: ``span`` is ``0`` for a nonlattice output and
    ``None`` for an output whose support is a single point."""

    y: int
    span: float | None
    offset: float
    multiplier: int | None
    support_size: int


def distinct_values(values: np.ndarray, tol: float = LATTICE_TOL) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        return v
    keep = np.concatenate(([True], np.diff(v) > tol * np.maximum(1.0, np.abs(v[1:]))))
    return v[keep]


def lattice_span_of_groups(
    groups: Sequence[np.ndarray], tol: float = LATTICE_TOL, max_denominator: int = MAX_DENOMINATOR
) -> tuple[float, list[OutputSpan]]:
    """Common span of several finite value sets, one per output symbol.

    Each group gets its own span (the real gcd of its gaps); the overall span
    is the real gcd of the group spans.  Groups with one point impose nothing.
    """
    per_y = []
    spans = []
    nonlattice = False
    for y, vals in enumerate(groups):
        v = distinct_values(vals, tol)
        if v.size == 0:
            raise DomainError(f"output {y} has no finite log-likelihood values")
        if v.size == 1:
            per_y.append(OutputSpan(y, None, float(v[0]), None, 1))
            continue
        d = real_gcd(v[1:] - v[0], tol, max_denominator)
        per_y.append(OutputSpan(y, d, float(v[0]), None, int(v.size)))
        if d == 0:
            nonlattice = True
        else:
            spans.append(d)
    if not spans and not nonlattice:
        raise DomainError("degenerate pairwise score: every output has a single log-likelihood value")
    h = 0.0 if nonlattice else real_gcd(spans, tol, max_denominator)
    if h > 0:
        per_y = [
            OutputSpan(s.y, s.span, s.offset, None if s.span is None else int(round(s.span / h)), s.support_size)
            for s in per_y
        ]
    return h, per_y


def classify_nu_lattice(
    ch: Channel, tol: float = LATTICE_TOL, max_denominator: int = MAX_DENOMINATOR
) -> tuple[float, list[OutputSpan]]:
    """Span ``h`` of ``log nu`` (``0`` when nonlattice) and the per-output grids."""
    groups = []
    for y in range(ch.num_outputs):
        live = (ch.Px > 0) & (ch.W[:, y] > 0)
        groups.append(ch.log_nu[live, y])
    return lattice_span_of_groups(groups, tol, max_denominator)


def score_support(ch: Channel, eta: float, tol: float = LATTICE_TOL) -> np.ndarray:
    """Distinct points ``(Z(eta), Z'(eta))`` over pairs of positive probability, shape ``(k, 2)``."""
    zf = ZFamily(ch)
    Z, Z1, _, _ = zf.evaluate(eta)
    s = zf.support
    pts = np.column_stack([Z[s], Z1[s]])
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    out: list[np.ndarray] = []
    for p in pts:
        if not any(np.all(np.abs(p - q) <= tol * np.maximum(1.0, np.abs(q))) for q in out):
            out.append(p)
    return np.array(out)


def points_strongly_nonlattice(
    points: np.ndarray, tol: float = LATTICE_TOL, max_frequency: int = MAX_FREQUENCY
) -> bool:
    """Whether a finite planar support is strongly nonlattice.

    The characteristic function has modulus one at some ``xi != 0`` exactly
    when ``<xi, v_i - v_0>`` lies in ``2 pi Z`` for every support point.  For
    collinear supports a perpendicular ``xi`` works.  Otherwise, writing each
    difference in a basis ``(d_1, d_2)`` of two differences as
    ``a_i d_1 + b_i d_2``, such a ``xi`` exists iff some integer pair
    ``(k_a, k_b) != 0`` makes every ``k_a a_i + k_b b_i`` an integer.  Pairs with
    ``|k| <= max_frequency`` are searched.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) <= 3:
        return False
    diffs = pts[1:] - pts[0]
    scale = max(1.0, float(np.max(np.abs(diffs))))
    best = None
    for i, j in itertools.combinations(range(len(diffs)), 2):
        B = np.column_stack([diffs[i], diffs[j]])
        area = abs(np.linalg.det(B))
        if best is None or area > best[0]:
            best = (area, i, j, B)
    area, i, j, B = best
    if area <= tol * scale**2:
        return False  # all points on one line
    coef = np.linalg.solve(B, diffs.T).T  # rows (a_k, b_k)
    others = np.delete(coef, [i, j], axis=0)
    k = np.arange(-max_frequency, max_frequency + 1)
    ka, kb = np.meshgrid(k, k, indexing="ij")
    ka, kb = ka.ravel(), kb.ravel()
    nz = (ka != 0) | (kb != 0)
    ka, kb = ka[nz], kb[nz]
    comb = ka[:, None] * others[None, :, 0] + kb[:, None] * others[None, :, 1]
    resid = np.abs(comb - np.round(comb))
    slack = tol * max_frequency * np.maximum(1.0, np.abs(comb))
    lattice_dirs = np.all(resid <= slack, axis=1)
    return not bool(np.any(lattice_dirs))


def strongly_nonlattice_check(
    ch: Channel, eta: float, tol: float = LATTICE_TOL, max_frequency: int = MAX_FREQUENCY
) -> bool:
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta}")
    return points_strongly_nonlattice(score_support(ch, eta, tol), tol, max_frequency)


@dataclass(frozen=True)
class LatticeClassification:
    h: float
    per_y: tuple[OutputSpan, ...]
    strongly_nonlattice: bool
    table1_cell: LatticeCell
    eta: float
    support_points: int

    @property
    def is_lattice(self) -> bool:
        return self.h > 0

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "table1_cell": self.table1_cell.value,
            "strongly_nonlattice": self.strongly_nonlattice,
            "eta": self.eta,
            "support_points": self.support_points,
            "per_y": [
                {"y": s.y, "span": s.span, "offset": s.offset, "multiplier": s.multiplier, "support_size": s.support_size}
                for s in self.per_y
            ],
        }


def classify(
    ch: Channel,
    eta: float = 0.5,
    tol: float = LATTICE_TOL,
    max_denominator: int = MAX_DENOMINATOR,
    max_frequency: int = MAX_FREQUENCY,
) -> LatticeClassification:
    """Full classification at tilt ``eta`` (``1/(1+rho)`` of the rate of interest)."""
    h, per_y = classify_nu_lattice(ch, tol, max_denominator)
    pts = score_support(ch, eta, tol)
    snl = points_strongly_nonlattice(pts, tol, max_frequency)
    return LatticeClassification(
        h=h, per_y=tuple(per_y), strongly_nonlattice=snl, table1_cell=table1_cell(h, snl),
        eta=eta, support_points=len(pts),
    )
