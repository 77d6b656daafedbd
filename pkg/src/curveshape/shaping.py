"""Applying fitted coefficients across granularity levels.

A shaping level maps one parent price to K child prices through affine
pairs (A_k, B_k); a cascade chains levels (year to quarter, quarter to
month, month to day type, day type to hour) so a single calendar quote
propagates down to an hourly curve.  Day-to-hour levels are keyed by day
type (weekday / Saturday / Sunday).
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from datetime import timedelta

import numpy as np

from .constraints import (
    ConstraintSystem,
    GranularitySplit,
    arbitrage_gap,
    constraints_for_weights,
    fix_coefficients,
    split_from_config,
)
from .estimator import Dataset, FitConfig, FitResult, irls_fit, with_alpha_multiplier
from .exceptions import DataError
from .periods import (
    CalendarConfig,
    DEFAULT_CALENDAR,
    Period,
    delivery_hours,
    parse_period_label,
)

DAY_TYPES = ("WD", "SAT", "SUN")

_MAX_FEASIBILITY_ESCALATIONS = 8


@dataclass(frozen=True)
class ShapingLevel:
    """One split with its fitted coefficient pairs."""

    split: GranularitySplit
    coefficients: np.ndarray  # (K, 2) rows of (A_k, B_k)
    gap_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape != (self.split.n_children, 2):
            raise DataError("coefficients must be (K, 2) pairs (A_k, B_k)")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def gamma(self) -> np.ndarray:
        return self.coefficients.reshape(-1)

    def system(self) -> ConstraintSystem:
        return constraints_for_weights(self.split.weights)

    def gap(self) -> np.ndarray:
        return arbitrage_gap(self.system(), self.gamma)

    @property
    def is_arbitrage_free(self) -> bool:
        return bool(np.max(np.abs(self.gap())) <= self.gap_tolerance)


def apply_level(parent_price: float, level: ShapingLevel, override: bool = False) -> np.ndarray:
    """Shape one parent price into K child prices: child_k = A_k * p + B_k."""
    if not override and not level.is_arbitrage_free:
        raise DataError(
            f"level for {level.split.parent_label!r} violates non-arbitrage "
            f"(max gap {np.max(np.abs(level.gap())):.3g}); pass override to force"
        )
    return level.coefficients[:, 0] * parent_price + level.coefficients[:, 1]


def shift_intercept(level: ShapingLevel, child_index: int, delta: float) -> ShapingLevel:
    """Stress-shift one intercept, rebalancing siblings to stay arbitrage-free.

    The shift delta lands on child j; the weighted surplus h_j * delta is
    removed uniformly (in weighted terms) from the remaining siblings.
    """
    k = level.split.n_children
    if not 0 <= child_index < k:
        raise DataError(f"child index {child_index} out of range")
    if k == 1:
        raise DataError("cannot rebalance a single-child level")
    w = level.split.weights
    coeffs = level.coefficients.copy()
    coeffs[child_index, 1] += delta
    others = [j for j in range(k) if j != child_index]
    spread = w[child_index] * delta / float(np.sum(w[others]))
    for j in others:
        coeffs[j, 1] -= spread
    return dc_replace(level, coefficients=coeffs)


@dataclass
class ShapingCascade:
    """Ordered levels, each mapping parent labels to their shaping level."""

    root: str
    level_names: list[str]
    levels: list[dict[str, ShapingLevel]]

    def __post_init__(self) -> None:
        if len(self.level_names) != len(self.levels):
            raise DataError("level names and level maps disagree in length")
        reachable = {self.root}
        for name, level_map in zip(self.level_names, self.levels):
            parents = set(level_map)
            if not parents & reachable:
                raise DataError(f"level {name!r} is not chained to the cascade root")
            next_reachable = set()
            for parent_label, level in level_map.items():
                next_reachable.update(level.split.child_labels)
            reachable = next_reachable

    def parent_of(self, label: str) -> tuple[int, str, int] | None:
        """(level index, parent label, child position) owning ``label``."""
        for i, level_map in enumerate(self.levels):
            for parent_label, level in level_map.items():
                if label in level.split.child_labels:
                    return i, parent_label, level.split.child_labels.index(label)
        return None


def cascade(parent_price: float, casc: ShapingCascade, target: str, override: bool = False) -> float:
    """Price for one target period, composing levels along its parent chain."""
    if target == casc.root:
        return float(parent_price)
    chain: list[tuple[int, str, int]] = []
    label = target
    while label != casc.root:
        owner = casc.parent_of(label)
        if owner is None:
            raise DataError(f"no shaping path to {target!r}")
        chain.append(owner)
        label = owner[1]
    price = float(parent_price)
    for level_idx, parent_label, child_idx in reversed(chain):
        level = casc.levels[level_idx][parent_label]
        price = float(apply_level(price, level, override)[child_idx])
    return price


def shape_curve(
    parent_price: float, casc: ShapingCascade, depth: int | None = None, override: bool = False
) -> list[tuple[str, float, float]]:
    """All (label, weight, price) leaves at ``depth`` levels below the root.

    Weights are the products of split weights along each path, so they sum
    to one and give the hour share of each leaf in the root period.
    """
    if depth is None:
        depth = len(casc.levels)
    if not 0 <= depth <= len(casc.levels):
        raise DataError(f"cascade has {len(casc.levels)} levels, not {depth}")
    frontier = [(casc.root, 1.0, float(parent_price))]
    for level_map in casc.levels[:depth]:
        nxt = []
        for label, weight, price in frontier:
            level = level_map.get(label)
            if level is None:
                raise DataError(f"no shaping path below {label!r}")
            prices = apply_level(price, level, override)
            for j, child in enumerate(level.split.child_labels):
                nxt.append((child, weight * float(level.split.weights[j]), float(prices[j])))
        frontier = nxt
    return frontier


def verify_consistency(parent_price: float, child_prices, weights) -> float:
    """Signed gap between the weighted child average and the parent price."""
    c = np.asarray(child_prices, dtype=float)
    w = np.asarray(weights, dtype=float)
    if c.shape != w.shape:
        raise DataError("child prices and weights disagree in shape")
    return float(w @ c - parent_price)


@dataclass(frozen=True)
class MarketMatch:
    """Recalibration instruction: make one shaped child hit a traded price.

    With ``solve="slope"`` the prior intercept is kept and the slope is
    solved from the match; ``solve="intercept"`` fixes the prior slope
    instead.
    """

    child_index: int
    traded_price: float
    parent_quote: float
    solve: str = "slope"

    def __post_init__(self) -> None:
        if self.solve not in ("slope", "intercept"):
            raise DataError("solve must be 'slope' or 'intercept'")
        if self.parent_quote == 0.0:
            raise DataError("zero parent quote")


def recalibrate_with_traded(
    dataset: Dataset,
    system: ConstraintSystem,
    config: FitConfig | None = None,
    fixed: dict[int, tuple[float, float]] | None = None,
    market_match: MarketMatch | None = None,
    prior: FitResult | None = None,
) -> FitResult:
    """Re-fit with some children pinned to traded coefficients.

    ``fixed`` maps child index -> (A, B).  ``market_match`` instead derives
    the pinned pair from a traded child price and the current parent quote,
    keeping the complementary coefficient from ``prior``.  The remaining
    coefficients are re-estimated robustly; the penalty is escalated until
    the full coefficient vector honours the original equalities.
    """
    config = config or FitConfig()
    pinned: dict[int, float] = {}
    for child, (a_k, b_k) in (fixed or {}).items():
        pinned[2 * child] = float(a_k)
        pinned[2 * child + 1] = float(b_k)
    if market_match is not None:
        j = market_match.child_index
        if 2 * j in pinned or 2 * j + 1 in pinned:
            raise DataError(f"child {j} pinned twice")
        if prior is None:
            raise DataError("market matching needs the prior fit")
        if market_match.solve == "slope":
            b_j = float(prior.gamma[2 * j + 1])
            a_j = (market_match.traded_price - b_j) / market_match.parent_quote
        else:
            a_j = float(prior.gamma[2 * j])
            b_j = market_match.traded_price - a_j * market_match.parent_quote
        pinned[2 * j] = a_j
        pinned[2 * j + 1] = b_j
    if not pinned:
        return irls_fit(dataset, system, config)
    fix_coefficients(system, pinned)  # infeasible fixings surface here
    result = irls_fit(dataset, system, config, fixed=pinned)
    multiplier = 1.0 if config.alpha_multiplier == "auto" else float(config.alpha_multiplier)
    for _ in range(_MAX_FEASIBILITY_ESCALATIONS):
        if result.arbitrage_gap_maxabs <= config.feasibility_tolerance:
            break
        multiplier *= 10.0
        result = irls_fit(dataset, system, with_alpha_multiplier(config, multiplier), fixed=pinned)
    return result


def build_level(split: GranularitySplit, gamma, gap_tolerance: float = 1e-6) -> ShapingLevel:
    """Level from an interleaved coefficient vector (A_1, B_1, ...)."""
    g = np.asarray(gamma, dtype=float)
    return ShapingLevel(split=split, coefficients=g.reshape(-1, 2), gap_tolerance=gap_tolerance)


def daytype_split(month: Period, calendar: CalendarConfig = DEFAULT_CALENDAR) -> GranularitySplit:
    """Split a month into weekday / Saturday / Sunday blocks by hour share."""
    if month.kind != "month":
        raise DataError("day-type split needs a month parent")
    counts = {t: 0 for t in DAY_TYPES}
    day = month.start.date()
    while day < month.end.date():
        wd = day.weekday()
        counts["SAT" if wd == 5 else "SUN" if wd == 6 else "WD"] += 1
        day += timedelta(days=1)
    hours = [counts[t] * 24 for t in DAY_TYPES]
    total = delivery_hours(month, calendar)
    return GranularitySplit(
        parent_label=month.label,
        child_labels=tuple(f"{month.label}:{t}" for t in DAY_TYPES),
        weights=np.array(hours, dtype=float) / float(total),
        parent=month,
        child_hours=tuple(hours),
    )


def hour_split(parent_label: str, n_hours: int = 24) -> GranularitySplit:
    """Uniform split of a (day-type) block into its hours of day."""
    return GranularitySplit(
        parent_label=parent_label,
        child_labels=tuple(f"{parent_label}:H{h:02d}" for h in range(n_hours)),
        weights=np.full(n_hours, 1.0 / n_hours),
    )


def cascade_from_config(config: dict, calendar: CalendarConfig = DEFAULT_CALENDAR) -> ShapingCascade:
    """Build a cascade from its declarative config.

    Schema: ``{"root": label, "levels": [{"name": str, "splits": [
    {"parent": ..., "children": [...], "weights": [...]?,
    "coefficients": [[A, B], ...]}]}]}``.  Children that are not period
    labels (day types, hours) need explicit weights.
    """
    try:
        root = config["root"]
        level_cfgs = config["levels"]
    except (KeyError, TypeError) as exc:
        raise DataError(f"cascade config needs 'root' and 'levels': {exc}") from exc
    names, maps = [], []
    for level_cfg in level_cfgs:
        name = level_cfg.get("name", f"level-{len(names)}")
        level_map = {}
        for split_cfg in level_cfg.get("splits", []):
            split = split_from_config(split_cfg, calendar)
            coeffs = split_cfg.get("coefficients")
            if coeffs is None:
                raise DataError(f"split {split.parent_label!r} has no coefficients")
            level = ShapingLevel(
                split=split,
                coefficients=np.asarray(coeffs, dtype=float),
                gap_tolerance=float(split_cfg.get("gap_tolerance", 1e-6)),
            )
            level_map[split.parent_label] = level
        names.append(name)
        maps.append(level_map)
    return ShapingCascade(root=root, level_names=names, levels=maps)


def cascade_to_config(casc: ShapingCascade) -> dict:
    out = {"root": casc.root, "levels": []}
    for name, level_map in zip(casc.level_names, casc.levels):
        splits = []
        for parent_label, level in level_map.items():
            splits.append(
                {
                    "parent": parent_label,
                    "children": list(level.split.child_labels),
                    "weights": [float(w) for w in level.split.weights],
                    "coefficients": [[float(a), float(b)] for a, b in level.coefficients],
                }
            )
        out["levels"].append({"name": name, "splits": splits})
    return out


def leaf_window(label: str) -> tuple[str, str]:
    """Best-effort (start, end) ISO stamps for a leaf label in a shaped curve.

    Day-type and hour suffixes fall back to their parent month window.
    """
    base = label.split(":")[0]
    try:
        period = parse_period_label(base)
    except DataError:
        return "", ""
    return period.start.isoformat(), period.end.isoformat()
