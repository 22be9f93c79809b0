"""Finite discrete memoryless channels and their per-symbol quantities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ChannelValidationError

#: tolerance accepted on row sums and on the input distribution
INPUT_TOL = 1e-9
#: absolute tolerance for merging equal score values
MERGE_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Channel:
    """A DMC ``W(y|x)`` together with a fixed input distribution ``Px``.

    Outputs with ``Py(y) == 0`` are removed at construction; their original
    indices are listed in ``pruned_outputs``.  ``log_nu[x, y]`` is
    ``log W(y|x) - log Py(y)`` and equals ``-inf`` exactly where ``W(y|x) == 0``.
    """

    W: np.ndarray
    Px: np.ndarray
    Py: np.ndarray
    log_nu: np.ndarray
    name: str = ""
    pruned_outputs: tuple[int, ...] = field(default=())

    @property
    def num_inputs(self) -> int:
        return self.W.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.W.shape[1]

    @property
    def joint(self) -> np.ndarray:
        """Joint law ``Px(x) W(y|x)`` as an ``|X| x |Y|`` array."""
        return self.Px[:, None] * self.W

    @property
    def log_joint(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.joint)

    @classmethod
    def from_arrays(
        cls, W: Sequence[Sequence[float]] | np.ndarray, Px: Sequence[float] | np.ndarray, name: str = ""
    ) -> "Channel":
        W = np.asarray(W, dtype=np.float64)
        Px = np.asarray(Px, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise ChannelValidationError(f"W must be a non-empty 2-D table, got shape {W.shape}")
        if Px.ndim != 1 or Px.shape[0] != W.shape[0]:
            raise ChannelValidationError(
                f"Px has length {Px.shape[0] if Px.ndim == 1 else Px.shape}, expected {W.shape[0]}"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(Px))):
            raise ChannelValidationError("W and Px must be finite")
        if np.any(W < 0) or np.any(Px < 0):
            raise ChannelValidationError("negative probability in W or Px")
        rows = W.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > INPUT_TOL)
        if bad.size:
            raise ChannelValidationError(f"row {int(bad[0])} of W sums to {rows[bad[0]]!r}, not 1")
        if abs(Px.sum() - 1.0) > INPUT_TOL:
            raise ChannelValidationError(f"Px sums to {Px.sum()!r}, not 1")
        W = W / rows[:, None]
        Px = Px / Px.sum()

        Py = Px @ W
        keep = Py > 0
        pruned = tuple(int(i) for i in np.flatnonzero(~keep))
        W = W[:, keep]
        # rows of inputs that only reached pruned outputs keep Px(x) = 0 mass there
        Py = Px @ W
        with np.errstate(divide="ignore"):
            log_nu = np.log(W) - np.log(Py)[None, :]
        log_nu[W == 0] = -np.inf
        return cls(
            W=_frozen(W), Px=_frozen(Px), Py=_frozen(Py), log_nu=_frozen(log_nu),
            name=name, pruned_outputs=pruned,
        )

    def to_document(self) -> dict[str, Any]:
        return {"name": self.name, "W": self.W.tolist(), "Px": self.Px.tolist()}


def load_channel(doc: Mapping[str, Any]) -> Channel:
    """Build a validated channel from a parsed ``{"W", "Px", "name"}`` document."""
    try:
        W = doc["W"]
        Px = doc["Px"]
    except (KeyError, TypeError) as exc:
        raise ChannelValidationError(f"channel document lacks field {exc}") from None
    try:
        return Channel.from_arrays(W, Px, name=str(doc.get("name", "")))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ChannelValidationError):
            raise
        raise ChannelValidationError(f"malformed channel document: {exc}") from None


def bsc(p: float, px: float = 0.5) -> Channel:
    return Channel.from_arrays([[1 - p, p], [p, 1 - p]], [px, 1 - px], name=f"BSC({p:g})")


def mutual_information(ch: Channel) -> float:
    """``I(X;Y)`` in nats; terms with zero joint probability contribute 0."""
    P = ch.joint
    mask = P > 0
    return float(max(0.0, np.sum(P[mask] * ch.log_nu[mask])))


def merge_atoms(values: np.ndarray, probs: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Sort atoms and merge neighbours closer than ``tol`` (chained).

    The merged value is the probability-weighted mean of the group.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    p = probs[order]
    if v.size == 0:
        return v, p
    starts = np.concatenate(([True], np.diff(v) > tol))
    idx = np.cumsum(starts) - 1
    pm = np.bincount(idx, weights=p)
    vm = np.bincount(idx, weights=p * v)
    with np.errstate(invalid="ignore", divide="ignore"):
        vm = np.where(pm > 0, vm / np.where(pm > 0, pm, 1.0), v[starts])
    return vm, pm


def pairwise_score_values(ch: Channel, y: int, tol: float = MERGE_TOL) -> list[tuple[float, float]]:
    """Distribution of ``log nu(X', y)`` for ``X' ~ Px``, as sorted ``(value, prob)``.

    A mass at ``-inf`` (inputs that cannot produce ``y``) comes first if present.
    """
    if not 0 <= y < ch.num_outputs:
        raise IndexError(f"output index {y} out of range")
    col = ch.log_nu[:, y]
    live = ch.Px > 0
    finite = live & np.isfinite(col)
    out: list[tuple[float, float]] = []
    p_inf = float(ch.Px[live & ~np.isfinite(col)].sum())
    if p_inf > 0:
        out.append((-np.inf, p_inf))
    v, p = merge_atoms(col[finite], ch.Px[finite], tol)
    out.extend((float(a), float(b)) for a, b in zip(v, p))
    return out
