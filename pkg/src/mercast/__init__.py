"""Monthly energy series forecasting: data model, models, diagnostics, CLI."""

from .core import (
    Forecast,
    MonthStamp,
    SeasonalSubseries,
    TimeSeries,
    acf,
    difference,
    seasonal_subseries,
    undifference,
)
from .diagnostics import (
    AccuracyMeasures,
    LjungBoxResult,
    ResidualBundle,
    accuracy,
    ljung_box,
    residual_bundle,
)
from .ets import EtsFit, EtsSpec, auto_ets, ets_filter, fit_ets, forecast_ets
from .exceptions import (
    DataError,
    DegenerateSeriesError,
    DifferentiationError,
    DiscontinuityError,
    FitFailedError,
    InsufficientDataError,
    MerParseError,
    MercastError,
    SeriesNotFoundError,
    SingularForecastError,
)
from .ingest import CatalogEntry, list_series, load_mer_csv
from .numerics import (
    OptimizerOptions,
    OptimizerResult,
    chi_squared_sf,
    nelder_mead,
    normal_quantile,
    numerical_hessian,
)
from .report import (
    RunConfig,
    apply_transform,
    diagnose,
    emit_table,
    fit_model,
    forecast_model,
    render_comparison,
    render_report,
    run,
)
from .sarima import (
    SarimaCoeffs,
    SarimaFit,
    SarimaOrder,
    auto_sarima,
    fit_sarima,
    forecast_sarima,
    kalman_loglik,
    ndiffs,
    nsdiffs,
)
from .snaive import SNaiveFit, fit_snaive, forecast_snaive

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "MonthStamp",
    "TimeSeries",
    "Forecast",
    "SeasonalSubseries",
    "acf",
    "difference",
    "undifference",
    "seasonal_subseries",
    "normal_quantile",
    "chi_squared_sf",
    "nelder_mead",
    "numerical_hessian",
    "OptimizerOptions",
    "OptimizerResult",
    "SNaiveFit",
    "fit_snaive",
    "forecast_snaive",
    "EtsSpec",
    "EtsFit",
    "ets_filter",
    "fit_ets",
    "auto_ets",
    "forecast_ets",
    "SarimaOrder",
    "SarimaCoeffs",
    "SarimaFit",
    "kalman_loglik",
    "fit_sarima",
    "auto_sarima",
    "forecast_sarima",
    "ndiffs",
    "nsdiffs",
    "AccuracyMeasures",
    "LjungBoxResult",
    "ResidualBundle",
    "accuracy",
    "ljung_box",
    "residual_bundle",
    "CatalogEntry",
    "load_mer_csv",
    "list_series",
    "RunConfig",
    "apply_transform",
    "fit_model",
    "forecast_model",
    "diagnose",
    "render_report",
    "render_comparison",
    "emit_table",
    "run",
    "MercastError",
    "DegenerateSeriesError",
    "InsufficientDataError",
    "SingularForecastError",
    "FitFailedError",
    "DifferentiationError",
    "DataError",
    "SeriesNotFoundError",
    "DiscontinuityError",
    "MerParseError",
]
