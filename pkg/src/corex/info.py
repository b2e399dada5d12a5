"""Exact information measures on small dense joint distributions.

These enumerate the full product state space and exist to validate the
sample-based estimator on toy instances, not to scale: construction is
guarded at 10^7 states. All quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import MISSING

STATE_GUARD = 10_000_000


def _clamp(value: float) -> float:
    """Zero out negative values caused by floating cancellation."""
    if -1e-12 < value < 0.0:
        return 0.0
    return value


@dataclass(frozen=True)
class JointTable:
    """Dense probability table over a product of finite alphabets."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim < 1:
            raise ValueError("joint table needs at least one axis")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")

    @property
    def dims(self) -> tuple:
        return self.probs.shape

    @property
    def n_vars(self) -> int:
        return self.probs.ndim

    def marginal(self, axes) -> "JointTable":
        """Marginal table over the given axes (order preserved)."""
        if isinstance(axes, int):
            axes = (axes,)
        keep = tuple(axes)
        drop = tuple(a for a in range(self.probs.ndim) if a not in keep)
        p = self.probs.sum(axis=drop) if drop else self.probs
        # reorder to the requested axis order
        order = np.argsort(np.argsort(keep))
        return JointTable(np.transpose(p, axes=tuple(order)) if p.ndim > 1 else p)


def joint_from_codes(cells, cardinalities) -> JointTable:
    """Empirical joint distribution of coded samples.

    Rows containing MISSING cells are dropped. Raises if the product state
    space exceeds the enumeration guard; at that size use the sample-based
    estimator instead of this oracle.
    """
    cells = np.asarray(cells, dtype=np.int64)
    cards = np.asarray(cardinalities, dtype=np.int64)
    n_states = math.prod(int(c) for c in cards)
    if n_states > STATE_GUARD:
        raise ValueError(
            f"{n_states} joint states exceeds the enumeration guard "
            f"({STATE_GUARD}); use a sampled estimate instead"
        )
    keep = ~np.any(cells == MISSING, axis=1)
    cells = cells[keep]
    if cells.shape[0] == 0:
        raise ValueError("no complete rows to tabulate")
    flat = np.ravel_multi_index(cells.T, dims=tuple(cards))
    counts = np.bincount(flat, minlength=n_states).astype(float)
    return JointTable((counts / counts.sum()).reshape(tuple(cards)))


def entropy(t: JointTable) -> float:
    """H(X) = -sum p log p, with 0 log 0 = 0."""
    p = t.probs[t.probs > 0]
    return float(-np.sum(p * np.log(p)))


def mutual_information(t: JointTable) -> float:
    """I(X1:X2) = H(X1) + H(X2) - H(X1,X2) for a two-variable table."""
    if t.n_vars != 2:
        raise ValueError(f"mutual information needs exactly 2 variables, got {t.n_vars}")
    h1 = entropy(t.marginal(0))
    h2 = entropy(t.marginal(1))
    return _clamp(h1 + h2 - entropy(t))


def total_correlation(t: JointTable) -> float:
    """TC(X) = sum_i H(X_i) - H(X); zero iff the table factorizes."""
    if math.prod(t.dims) > STATE_GUARD:
        raise ValueError(
            "state space exceeds the enumeration guard; use a sampled estimate"
        )
    h_each = sum(entropy(t.marginal(i)) for i in range(t.n_vars))
    return _clamp(h_each - entropy(t))


def conditional_total_correlation(t: JointTable, cond_axis: int) -> float:
    """TC(X|Y) = sum_i H(X_i|Y) - H(X|Y), conditioning on axis ``cond_axis``."""
    n = t.n_vars
    if not (0 <= cond_axis < n):
        raise ValueError(f"cond_axis {cond_axis} out of range for {n} variables")
    if n < 2:
        raise ValueError("need at least one variable besides the condition")
    hy = entropy(t.marginal(cond_axis))
    total = 0.0
    for i in range(n):
        if i == cond_axis:
            continue
        total += entropy(t.marginal((i, cond_axis))) - hy
    h_all_given_y = entropy(t) - hy
    return _clamp(total - h_all_given_y)


def tc_explained(t: JointTable, cond_axis: int) -> float:
    """TC(X;Y) = TC(X) - TC(X|Y): total correlation of X explained by axis Y."""
    rest = tuple(i for i in range(t.n_vars) if i != cond_axis)
    tc_x = total_correlation(t.marginal(rest))
    return _clamp(tc_x - conditional_total_correlation(t, cond_axis))
