"""Arbitrage-free shaping of electricity forward curves.

Estimates affine shaping coefficients that map low-granularity forward
prices (calendar years) onto finer delivery periods (quarters, months,
day types, hours) with the non-arbitrage equalities built into a robust,
iteratively reweighted fit.
"""

from .backtest import (
    ComparisonTable,
    MetricsReport,
    SyntheticMarketConfig,
    XPathParams,
    backtest,
    compute_metrics,
    fit_method,
    synthesize_market,
)
from .baselines import ratio_average_fit, rescale_to_no_arbitrage
from .constraints import (
    ConstraintSystem,
    GranularitySplit,
    arbitrage_gap,
    build_constraints,
    build_split,
    constraints_for_weights,
    fix_coefficients,
    split_from_config,
    split_to_config,
    zero_intercept_constraints,
)
from .estimator import (
    Dataset,
    FitConfig,
    FitResult,
    classical_fit,
    initial_weights,
    irls_fit,
    outlier_report,
    penalized_wls_solve,
    residual_distances,
)
from .exceptions import CurveShapeError, DataError, DegenerateScaleWarning, NumericalError
from .market import QuoteTable, build_regression_dataset, load_quotes
from .periods import (
    CalendarConfig,
    Period,
    delivery_hours,
    parse_contract,
    parse_period_label,
    resolve_relative,
)
from .robust import (
    WeightFunctionSpec,
    bisquare_loss,
    bisquare_weight,
    hampel_weight,
    mad_scale,
    median,
    qn_scale,
)
from .shaping import (
    MarketMatch,
    ShapingCascade,
    ShapingLevel,
    apply_level,
    cascade,
    cascade_from_config,
    cascade_to_config,
    recalibrate_with_traded,
    shape_curve,
    shift_intercept,
    verify_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "CalendarConfig",
    "ComparisonTable",
    "ConstraintSystem",
    "CurveShapeError",
    "DataError",
    "Dataset",
    "DegenerateScaleWarning",
    "FitConfig",
    "FitResult",
    "GranularitySplit",
    "MarketMatch",
    "MetricsReport",
    "NumericalError",
    "Period",
    "QuoteTable",
    "ShapingCascade",
    "ShapingLevel",
    "SyntheticMarketConfig",
    "WeightFunctionSpec",
    "XPathParams",
    "apply_level",
    "arbitrage_gap",
    "backtest",
    "bisquare_loss",
    "bisquare_weight",
    "build_constraints",
    "build_regression_dataset",
    "build_split",
    "cascade",
    "cascade_from_config",
    "cascade_to_config",
    "classical_fit",
    "compute_metrics",
    "constraints_for_weights",
    "delivery_hours",
    "fit_method",
    "fix_coefficients",
    "hampel_weight",
    "initial_weights",
    "irls_fit",
    "load_quotes",
    "mad_scale",
    "median",
    "outlier_report",
    "parse_contract",
    "parse_period_label",
    "penalized_wls_solve",
    "qn_scale",
    "ratio_average_fit",
    "recalibrate_with_traded",
    "rescale_to_no_arbitrage",
    "residual_distances",
    "resolve_relative",
    "shape_curve",
    "shift_intercept",
    "split_from_config",
    "split_to_config",
    "synthesize_market",
    "verify_consistency",
    "zero_intercept_constraints",
]
