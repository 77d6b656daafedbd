"""Constrained robust regression of shaping coefficients.

The estimator couples K per-child affine regressions through a quadratic
penalty on the non-arbitrage equalities and iterates case reweighting:
rows are weighted, the penalized weighted least squares problem is solved
in closed form, and weights are refreshed from robustly standardized
residual distances until the intercepts stop moving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import ConstraintSystem, arbitrage_gap, expand_gamma, fix_coefficients
from .exceptions import DataError, DegenerateScaleWarning, NumericalError
from .robust import MAD_CONSISTENCY, WeightFunctionSpec, qn_scale

_SCALE_FLOOR = np.finfo(float).tiny


@dataclass
class Dataset:
    """Paired observations: parent price x_i against K child prices y_i."""

    x: np.ndarray
    y: np.ndarray
    case_ids: list[str] | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.x.ndim != 1 or self.y.ndim != 2 or self.y.shape[0] != self.x.shape[0]:
            raise DataError("x must be (N,) and y (N, K) with matching N")
        if self.x.shape[0] < 3:
            raise DataError("need at least 3 cases")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise DataError("non-finite values in dataset")
        if np.ptp(self.x) == 0.0:
            raise DataError("parent prices are constant; slopes unidentifiable")
        if self.case_ids is None:
            self.case_ids = [f"case-{i:05d}" for i in range(self.x.shape[0])]
        if len(self.case_ids) != self.x.shape[0]:
            raise DataError("case_ids length disagrees with N")

    @property
    def n_cases(self) -> int:
        return self.x.shape[0]

    @property
    def n_children(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class FitConfig:
    """Estimator knobs.

    ``alpha_multiplier`` scales the constraint penalty alpha = c * N * s(Y)
    with s the pooled response scale; the string ``"auto"`` means c = 1.
    ``scale_estimator`` picks the column-residual standardization scale.
    """

    weight_spec: WeightFunctionSpec = field(default_factory=WeightFunctionSpec)
    alpha_multiplier: float | str = "auto"
    scale_estimator: str = "mad"
    tolerance: float = 1e-8
    max_iterations: int = 100
    center_for_distances: bool = True
    feasibility_tolerance: float = 1e-6
    feasibility_retry: bool = True

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise DataError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")
        if self.scale_estimator not in ("mad", "qn"):
            raise DataError(f"unknown scale estimator: {self.scale_estimator!r}")
        if not (self.alpha_multiplier == "auto" or np.isreal(self.alpha_multiplier)):
            raise DataError("alpha_multiplier must be a real number or 'auto'")


@dataclass
class FitResult:
    """Fitted coefficients with per-case weights and diagnostics."""

    gamma: np.ndarray
    case_weights: np.ndarray
    iterations: int
    arbitrage_gap_maxabs: float
    residual_scales: np.ndarray
    alpha_used: float
    case_ids: list[str]
    converged: bool = True
    degenerate_scale: bool = False
    method: str = "mcrm"

    @property
    def slopes(self) -> np.ndarray:
        return self.gamma[0::2]

    @property
    def intercepts(self) -> np.ndarray:
        return self.gamma[1::2]

    def predict(self, x) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        return xa[..., None] * self.slopes + self.intercepts

    def to_report(self) -> dict:
        k = self.gamma.size // 2
        coeffs = {}
        for j in range(k):
            coeffs[f"A{j + 1}"] = float(self.gamma[2 * j])
            coeffs[f"B{j + 1}"] = float(self.gamma[2 * j + 1])
        return {
            "method": self.method,
            "coefficients": coeffs,
            "case_weights": {
                cid: float(w) for cid, w in zip(self.case_ids, self.case_weights)
            },
            "diagnostics": {
                "iterations": self.iterations,
                "converged": self.converged,
                "arbitrage_gap_maxabs": float(self.arbitrage_gap_maxabs),
                "alpha_used": float(self.alpha_used),
                "residual_scales": [float(s) for s in self.residual_scales],
                "degenerate_scale": self.degenerate_scale,
            },
        }


def gamma_from_report(report: dict) -> np.ndarray:
    """Recover the interleaved coefficient vector from a fit report."""
    coeffs = report["coefficients"]
    k = len(coeffs) // 2
    gamma = np.empty(2 * k)
    for j in range(k):
        gamma[2 * j] = coeffs[f"A{j + 1}"]
        gamma[2 * j + 1] = coeffs[f"B{j + 1}"]
    return gamma


def _column_scales(values: np.ndarray, estimator: str) -> np.ndarray:
    if estimator == "qn":
        return np.array([qn_scale(values[:, k]) for k in range(values.shape[1])])
    med = np.median(values, axis=0)
    return MAD_CONSISTENCY * np.median(np.abs(values - med), axis=0)


def _initial_distances(
    dataset: Dataset, center: bool
) -> tuple[np.ndarray, np.ndarray, bool]:
    x, y = dataset.x, dataset.y
    if center:
        yc = y - np.median(y, axis=0)
        xc = x - np.median(x)
    else:
        yc, xc = y, x
    row_norms = np.linalg.norm(yc, axis=1)
    den_y = float(np.median(row_norms))
    den_x = MAD_CONSISTENCY * float(np.median(np.abs(xc)))
    degenerate = False
    if den_y <= 0.0:
        den_y = _SCALE_FLOOR
        degenerate = True
    if den_x <= 0.0:
        den_x = _SCALE_FLOOR
        degenerate = True
    if degenerate:
        warnings.warn(
            "degenerate scale in initial case distances; using tiny floor",
            DegenerateScaleWarning,
            stacklevel=3,
        )
    return np.abs(xc) / den_x, row_norms / den_y, degenerate


def initial_weights(
    dataset: Dataset,
    weight_spec: WeightFunctionSpec | None = None,
    center_for_distances: bool = True,
) -> np.ndarray:
    """Starting case weights from coarse x- and y-outlyingness.

    The x distance is the MAD-standardized deviation from the median; the
    y distance is the row norm of the column-median-centered responses over
    the median such norm.  Both pass through the downweighting function and
    combine as a geometric mean.
    """
    spec = weight_spec or WeightFunctionSpec()
    d_x, d_y, _ = _initial_distances(dataset, center_for_distances)
    return np.sqrt(spec.weight(d_x) * spec.weight(d_y))


def _residual_distances(
    residuals: np.ndarray, scale_estimator: str, center: bool
) -> tuple[np.ndarray, np.ndarray, bool]:
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 2:
        raise DataError("residuals must be (N, K)")
    centered = r - np.median(r, axis=0) if center else r.copy()
    if scale_estimator == "qn":
        scales = np.array([qn_scale(r[:, k]) for k in range(r.shape[1])])
    else:
        scales = MAD_CONSISTENCY * np.median(np.abs(centered), axis=0)
    degenerate = bool(np.any(scales <= 0.0))
    if degenerate:
        warnings.warn(
            "degenerate residual scale in some column; standardized values set to 0",
            DegenerateScaleWarning,
            stacklevel=3,
        )
    z = np.zeros_like(centered)
    ok = scales > 0.0
    z[:, ok] = centered[:, ok] / scales[ok]
    d = np.linalg.norm(z, axis=1) / np.sqrt(r.shape[1])
    return d, scales, degenerate


def residual_distances(residuals, scale_estimator: str = "mad") -> np.ndarray:
    """Per-case distances of robustly centered and scaled residual rows.

    Each column is median-centered and divided by its consistency-scaled
    MAD (or Qn); the K standardized entries combine as the Euclidean norm
    over sqrt(K), so clean Gaussian cases sit near 1 regardless of K.
    """
    d, _, _ = _residual_distances(residuals, scale_estimator, center=True)
    return d


def penalized_wls_solve(
    x,
    y,
    case_weights,
    system: ConstraintSystem,
    alpha: float,
    fixed: dict[int, float] | None = None,
) -> np.ndarray:
    """Exact minimizer of the weighted squares plus quadratic constraint penalty.

    Rows of the intercept-augmented design are multiplied by the case
    weights (the intercept column becomes the weight itself) and the
    constraint rows enter scaled by sqrt(alpha).  Solved as one stacked
    least squares problem; rank deficiency is an error.
    """
    if alpha < 0:
        raise DataError("alpha must be nonnegative")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if ya.ndim == 1:
        ya = ya[:, None]
    w = np.asarray(case_weights, dtype=float)
    n, k = ya.shape
    m = 2 * k
    if system.matrix.shape[1] != m:
        raise DataError("constraint system disagrees with response width")
    n_rows = n * k + system.n_rows
    design = np.zeros((n_rows, m))
    target = np.zeros(n_rows)
    wx = w * xa
    for j in range(k):
        rows = slice(j * n, (j + 1) * n)
        design[rows, 2 * j] = wx
        design[rows, 2 * j + 1] = w
        target[rows] = w * ya[:, j]
    if system.n_rows:
        design[n * k :, :] = np.sqrt(alpha) * system.matrix
        target[n * k :] = np.sqrt(alpha) * system.rhs

    fixed = fixed or {}
    if fixed:
        free = [i for i in range(m) if i not in fixed]
        if not free:
            return expand_gamma(np.empty(0), [], fixed, m)
        fixed_idx = sorted(fixed)
        vals = np.array([fixed[i] for i in fixed_idx])
        target = target - design[:, fixed_idx] @ vals
        design = design[:, free]
    else:
        free = list(range(m))

    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < len(free):
        raise NumericalError("rank-deficient weighted design")
    return expand_gamma(solution, free, fixed, m)


def _resolve_alpha(config: FitConfig, dataset: Dataset) -> float:
    multiplier = 1.0 if config.alpha_multiplier == "auto" else float(config.alpha_multiplier)
    pooled = qn_scale(dataset.y.ravel())
    if pooled <= 0.0:
        pooled = _SCALE_FLOOR
    return multiplier * dataset.n_cases * pooled


def _fit_loop(
    dataset: Dataset,
    system: ConstraintSystem,
    config: FitConfig,
    alpha: float,
    fixed: dict[int, float] | None,
) -> FitResult:
    spec = config.weight_spec
    d_x, d_y, degen = _initial_distances(dataset, config.center_for_distances)
    weights = np.sqrt(spec.weight(d_x) * spec.weight(d_y))
    scales = np.zeros(dataset.n_children)
    gamma = None
    intercepts_prev = None
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        gamma = penalized_wls_solve(dataset.x, dataset.y, weights, system, alpha, fixed)
        slopes, intercepts = gamma[0::2], gamma[1::2]
        residuals = dataset.y - dataset.x[:, None] * slopes - intercepts
        d_r, scales, degen_r = _residual_distances(
            residuals, config.scale_estimator, config.center_for_distances
        )
        degen = degen or degen_r
        weights = np.sqrt(spec.weight(d_x) * spec.weight(d_r))
        if intercepts_prev is not None:
            if float(np.max(np.abs(intercepts - intercepts_prev))) < config.tolerance:
                converged = True
                break
        intercepts_prev = intercepts
    gap = float(np.max(np.abs(arbitrage_gap(system, gamma)))) if system.n_rows else 0.0
    return FitResult(
        gamma=gamma,
        case_weights=weights,
        iterations=iterations,
        arbitrage_gap_maxabs=gap,
        residual_scales=scales,
        alpha_used=alpha,
        case_ids=list(dataset.case_ids),
        converged=converged,
        degenerate_scale=degen,
    )


def irls_fit(
    dataset: Dataset,
    system: ConstraintSystem,
    config: FitConfig | None = None,
    fixed: dict[int, float] | None = None,
) -> FitResult:
    """Full iteratively reweighted fit.

    Starts from coarse outlyingness weights, alternates the penalized
    weighted solve with residual-distance reweighting until the intercepts
    stabilize, and re-runs once with a tenfold penalty if the fitted
    coefficients still violate the equalities beyond the feasibility
    tolerance.  Non-convergence is flagged on the result, not raised.
    """
    config = config or FitConfig()
    if fixed:
        fix_coefficients(system, fixed)  # validates feasibility up front
    alpha = _resolve_alpha(config, dataset)
    result = _fit_loop(dataset, system, config, alpha, fixed)
    if config.feasibility_retry and result.arbitrage_gap_maxabs > config.feasibility_tolerance:
        result = _fit_loop(dataset, system, config, alpha * 10.0, fixed)
    return result


def classical_fit(
    dataset: Dataset,
    system: ConstraintSystem,
    alpha: float | str = "auto",
    fixed: dict[int, float] | None = None,
) -> FitResult:
    """Single penalized solve with every case weight equal to one."""
    config = FitConfig(alpha_multiplier=alpha)
    alpha_value = _resolve_alpha(config, dataset)
    weights = np.ones(dataset.n_cases)
    gamma = penalized_wls_solve(dataset.x, dataset.y, weights, system, alpha_value, fixed)
    slopes, intercepts = gamma[0::2], gamma[1::2]
    residuals = dataset.y - dataset.x[:, None] * slopes - intercepts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateScaleWarning)
        _, scales, degen = _residual_distances(residuals, "mad", center=True)
    gap = float(np.max(np.abs(arbitrage_gap(system, gamma)))) if system.n_rows else 0.0
    return FitResult(
        gamma=gamma,
        case_weights=weights,
        iterations=1,
        arbitrage_gap_maxabs=gap,
        residual_scales=scales,
        alpha_used=alpha_value,
        case_ids=list(dataset.case_ids),
        converged=True,
        degenerate_scale=degen,
        method="classical",
    )


def outlier_report(result: FitResult, threshold: float = 0.6) -> list[tuple[str, float]]:
    """Cases whose final weight fell below the threshold, most suspect first."""
    flagged = [
        (cid, float(w))
        for cid, w in zip(result.case_ids, result.case_weights)
        if w < threshold
    ]
    flagged.sort(key=lambda item: (item[1], item[0]))
    return flagged


def with_alpha_multiplier(config: FitConfig, multiplier: float) -> FitConfig:
    """Copy of a config with the penalty multiplier replaced."""
    return replace(config, alpha_multiplier=multiplier)
