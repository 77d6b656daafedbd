"""Non-arbitrage equality systems for granularity splits.

The canonical system for K children with hour weights h ties the
coefficient vector gamma = (A_1, B_1, ..., A_K, B_K) through two rows:
sum_k h_k A_k = 1 (slopes) and sum_k h_k B_k = 0 (intercepts), so the
hour-weighted average of shaped child prices reproduces the parent price.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError
from .periods import CalendarConfig, DEFAULT_CALENDAR, Period, delivery_hours, parse_period_label

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GranularitySplit:
    """A parent period subdivided into K ordered children with hour weights.

    ``child_hours`` is kept for day-type and hour children whose windows
    are not contiguous; for plain period children it equals the window
    hour count.
    """

    parent_label: str
    child_labels: tuple[str, ...]
    weights: np.ndarray
    parent: Period | None = None
    children: tuple[Period, ...] | None = None
    child_hours: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size < 1:
            raise DataError("split needs at least one child")
        if w.size != len(self.child_labels):
            raise DataError("weights and children disagree in length")
        if np.any(w <= 0):
            raise DataError("split weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise DataError("split weights must sum to 1")

    @property
    def n_children(self) -> int:
        return len(self.child_labels)


def build_split(
    parent: Period,
    children: list[Period],
    calendar: CalendarConfig = DEFAULT_CALENDAR,
) -> GranularitySplit:
    """Split a parent into children weighted by their delivery-hour share.

    The children must tile the parent window exactly, in order.
    """
    if not children:
        raise DataError("children do not partition parent")
    cursor = parent.start
    for child in children:
        if child.start != cursor:
            raise DataError("children do not partition parent")
        cursor = child.end
    if cursor != parent.end:
        raise DataError("children do not partition parent")
    hours = [delivery_hours(c, calendar) for c in children]
    total = delivery_hours(parent, calendar)
    weights = np.array(hours, dtype=float) / float(total)
    return GranularitySplit(
        parent_label=parent.label,
        child_labels=tuple(c.label for c in children),
        weights=weights,
        parent=parent,
        children=tuple(children),
        child_hours=tuple(hours),
    )


@dataclass(frozen=True)
class ConstraintSystem:
    """Equality system ``matrix @ gamma = rhs`` on (A_1, B_1, ..., A_K, B_K)."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        r = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if m.shape[0] != r.shape[0]:
            raise DataError("constraint matrix and rhs disagree in rows")
        if m.shape[1] % 2 != 0:
            raise DataError("constraint matrix must have 2K columns")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rhs", r)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_children(self) -> int:
        return self.matrix.shape[1] // 2


def build_constraints(split: GranularitySplit) -> ConstraintSystem:
    """Canonical two-row non-arbitrage system for a split."""
    k = split.n_children
    matrix = np.zeros((2, 2 * k))
    matrix[0, 0::2] = split.weights
    matrix[1, 1::2] = split.weights
    if np.linalg.matrix_rank(matrix) < 2:
        raise DataError("constraint rows are linearly dependent")
    return ConstraintSystem(matrix=matrix, rhs=np.array([1.0, 0.0]))


def constraints_for_weights(weights) -> ConstraintSystem:
    """Canonical system straight from a weight vector (no period bookkeeping)."""
    w = np.asarray(weights, dtype=float)
    k = w.size
    matrix = np.zeros((2, 2 * k))
    matrix[0, 0::2] = w
    matrix[1, 1::2] = w
    return ConstraintSystem(matrix=matrix, rhs=np.array([1.0, 0.0]))


def arbitrage_gap(system: ConstraintSystem, gamma) -> np.ndarray:
    """Componentwise residual ``matrix @ gamma - rhs``."""
    g = np.asarray(gamma, dtype=float)
    if g.shape != (system.matrix.shape[1],):
        raise DataError(
            f"gamma has {g.shape} entries, expected ({system.matrix.shape[1]},)"
        )
    return system.matrix @ g - system.rhs


def fix_coefficients(
    system: ConstraintSystem, fixed: dict[int, float]
) -> tuple[ConstraintSystem, list[int]]:
    """Eliminate fixed gamma entries from the system.

    Returns the reduced system plus the original indices of the remaining
    columns.  Rows that lose all their support must already be satisfied by
    the fixed values, otherwise the fixing is infeasible.
    """
    n = system.matrix.shape[1]
    for idx in fixed:
        if not 0 <= idx < n:
            raise DataError(f"fixed index {idx} out of range for 2K={n}")
    if not fixed:
        return system, list(range(n))
    free = [i for i in range(n) if i not in fixed]
    fixed_idx = sorted(fixed)
    fixed_vals = np.array([fixed[i] for i in fixed_idx])
    rhs = system.rhs - system.matrix[:, fixed_idx] @ fixed_vals
    matrix = system.matrix[:, free]
    keep_rows = []
    for j in range(matrix.shape[0]):
        if np.any(matrix[j] != 0.0):
            keep_rows.append(j)
        elif abs(rhs[j]) > 1e-9:
            raise DataError("infeasible fixing")
    if not free:
        return ConstraintSystem(np.zeros((0, 0)), np.zeros(0)), []
    return ConstraintSystem(matrix[keep_rows], rhs[keep_rows]), free


def expand_gamma(reduced_gamma, free_indices: list[int], fixed: dict[int, float], size: int) -> np.ndarray:
    """Re-insert fixed values around a reduced solution."""
    full = np.empty(size)
    for i, idx in enumerate(free_indices):
        full[idx] = reduced_gamma[i]
    for idx, val in fixed.items():
        full[idx] = val
    return full


def zero_intercept_constraints(k: int) -> ConstraintSystem:
    """K selector rows forcing every intercept to zero (pure-scaling model)."""
    if k < 1:
        raise DataError("need at least one child")
    matrix = np.zeros((k, 2 * k))
    for j in range(k):
        matrix[j, 2 * j + 1] = 1.0
    return ConstraintSystem(matrix=matrix, rhs=np.zeros(k))


def append_constraints(system: ConstraintSystem, extra: ConstraintSystem) -> ConstraintSystem:
    """Stack two systems on the same coefficient vector."""
    if system.matrix.shape[1] != extra.matrix.shape[1]:
        raise DataError("constraint systems disagree in coefficient count")
    return ConstraintSystem(
        matrix=np.vstack([system.matrix, extra.matrix]),
        rhs=np.concatenate([system.rhs, extra.rhs]),
    )


def split_to_config(split: GranularitySplit) -> dict:
    """Declarative config block for a split (parent, children, weights)."""
    return {
        "parent": split.parent_label,
        "children": list(split.child_labels),
        "weights": [float(w) for w in split.weights],
    }


def split_from_config(config: dict, calendar: CalendarConfig = DEFAULT_CALENDAR) -> GranularitySplit:
    """Build a split from a config block.

    Explicit ``weights`` override hour-derived ones; children named by
    period labels have their windows resolved and checked.
    """
    try:
        parent_label = config["parent"]
        child_labels = list(config["children"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"split config needs 'parent' and 'children': {exc}") from exc
    if "weights" in config and config["weights"] is not None:
        weights = np.asarray(config["weights"], dtype=float)
        if weights.size != len(child_labels):
            raise DataError("explicit weights disagree with children count")
        total = float(weights.sum())
        if total <= 0:
            raise DataError("split weights must be strictly positive")
        parent = _try_parse(parent_label)
        children = tuple(_try_parse(c) for c in child_labels)
        return GranularitySplit(
            parent_label=parent_label,
            child_labels=tuple(child_labels),
            weights=weights / total,
            parent=parent,
            children=children if all(c is not None for c in children) else None,
        )
    parent = parse_period_label(parent_label)
    children = [parse_period_label(c) for c in child_labels]
    return build_split(parent, children, calendar)


def _try_parse(label: str) -> Period | None:
    try:
        return parse_period_label(label)
    except DataError:
        return None
