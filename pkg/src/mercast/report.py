"""Run orchestration, text reports and forecast tables.

One CLI invocation is described by a RunConfig; run() loads the series,
applies the transform, fits, forecasts, diagnoses and writes artifacts.
render_report and emit_table also work standalone. Reports print numbers
at 7 significant digits; machine tables use 6 decimal places.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from .core import Forecast, MonthStamp, TimeSeries, difference, seasonal_subseries
from .diagnostics import (
    AccuracyMeasures,
    LjungBoxResult,
    accuracy,
    ljung_box,
    residual_bundle,
)
from .ets import EtsFit, auto_ets, forecast_ets
from .ingest import load_mer_csv
from .sarima import SarimaFit, SarimaOrder, auto_sarima, fit_sarima, forecast_sarima
from .snaive import SNaiveFit, fit_snaive, forecast_snaive

TRANSFORMS = ("none", "diff", "seasonal-diff")
MODELS = ("snaive", "ets", "arima", "auto-compare")
FORMATS = ("csv", "json")
DEFAULT_LAGS = 24

ModelFit = SNaiveFit | EtsFit | SarimaFit


@dataclass(frozen=True)
class RunConfig:
    """Settings for one run.

    ``transform`` is applied before fitting and recorded in every output.
    ``order`` pins a fixed SARIMA order; None means stepwise selection.
    ``seed`` only influences simulation-based intervals, so non-simulating
    runs are byte-identical regardless of it.
    """

    input: Path
    msn: str
    start: MonthStamp | None = None
    end: MonthStamp | None = None
    transform: str = "none"
    model: str = "arima"
    order: SarimaOrder | None = None
    horizon: int = 24
    levels: tuple[float, ...] = (0.80, 0.95)
    seed: int = 0
    out_dir: Path | None = None
    formats: tuple[str, ...] = ("csv",)
    with_forecast: bool = True

    def __post_init__(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        levels = tuple(sorted({float(v) for v in self.levels}))
        if not levels:
            raise ValueError("at least one confidence level is required")
        for level in levels:
            if not 0.0 < level < 1.0:
                raise ValueError(f"confidence level must be in (0,1), got {level}")
        object.__setattr__(self, "levels", levels)
        formats = tuple(dict.fromkeys(self.formats))
        if not formats:
            raise ValueError("at least one output format is required")
        for fmt in formats:
            if fmt not in FORMATS:
                raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        object.__setattr__(self, "formats", formats)
        if self.order is not None and self.model != "arima":
            raise ValueError("--order only applies to the arima model")
        if self.start is not None and self.end is not None and self.end < self.start:
            raise ValueError(f"empty date range {self.start.isoformat()}..{self.end.isoformat()}")


def apply_transform(ts: TimeSeries, transform: str) -> TimeSeries:
    if transform == "none":
        return ts
    if transform == "diff":
        return difference(ts, 1)
    if transform == "seasonal-diff":
        return difference(ts, ts.period)
    raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")


def fit_model(ts: TimeSeries, model: str, order: SarimaOrder | None = None) -> ModelFit:
    if model == "snaive":
        return fit_snaive(ts)
    if model == "ets":
        return auto_ets(ts)
    if model == "arima":
        return auto_sarima(ts) if order is None else fit_sarima(ts, order)
    raise ValueError(f"cannot fit model {model!r}")


def forecast_model(
    fit: ModelFit,
    h: int,
    levels: Sequence[float] | None = None,
    seed: int = 0,
) -> Forecast:
    if isinstance(fit, SNaiveFit):
        return forecast_snaive(fit, h, levels)
    if isinstance(fit, EtsFit):
        return forecast_ets(fit, h, levels, seed=seed)
    return forecast_sarima(fit, h, levels)


def _training_frame(fit: ModelFit) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Response-scale residuals with their aligned actual and fitted values."""
    if isinstance(fit, SNaiveFit):
        actual = fit.series.values[fit.period :]
        return fit.residuals, actual, fit.fitted
    if isinstance(fit, EtsFit):
        return fit.response_residuals, fit.series.values, fit.fitted
    resid = fit.response_residuals
    actual = fit.series.values[len(fit.series) - resid.size :]
    return resid, actual, actual - resid


def _residual_start(fit: ModelFit) -> MonthStamp:
    if isinstance(fit, SNaiveFit):
        return fit.fitted_start
    if isinstance(fit, EtsFit):
        return fit.series.start
    return fit.resid_start


def diagnose(fit: ModelFit, lags: int = DEFAULT_LAGS) -> tuple[AccuracyMeasures, LjungBoxResult | None]:
    """Training accuracy plus a Ljung-Box test when enough residuals exist."""
    resid, actual, fitted = _training_frame(fit)
    measures = accuracy(resid, actual, fitted, fit.series.values, fit.series.period)
    innovations = np.asarray(fit.residuals, dtype=float)
    lags_used = min(lags, innovations.size - 1)
    if lags_used > fit.model_df:
        return measures, ljung_box(innovations, lags_used, fit.model_df)
    return measures, None


def _sig7(value: float) -> str:
    v = float(value)
    if math.isnan(v):
        return "NaN"
    return format(v, ".7g")


def _level_tag(level: float) -> str:
    return format(level * 100.0, "g")


def _layout(rows: Sequence[Sequence[str]]) -> list[str]:
    """Right-align every column but the first; strip trailing blanks."""
    widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
    out = []
    for row in rows:
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        out.append("  ".join(cells).rstrip())
    return out


def _call_line(fit: ModelFit, transform: str) -> str:
    fn = {SNaiveFit: "snaive", EtsFit: "ets", SarimaFit: "arima"}[type(fit)]
    arg = {"none": "Y", "diff": "DY", "seasonal-diff": "SDY"}[transform]
    return f"Call: {fn}(y = {arg})"


def _model_block(fit: ModelFit) -> list[str]:
    if isinstance(fit, SNaiveFit):
        return [f"Residual sd: {_sig7(fit.residual_sd)}"]
    if isinstance(fit, EtsFit):
        lines = [fit.method_label, "", "Smoothing parameters:", f"  alpha = {_sig7(fit.alpha)}"]
        if fit.spec.is_seasonal:
            lines.append(f"  gamma = {_sig7(fit.gamma)}")
        lines += ["", "Initial states:", f"  l = {_sig7(fit.initial_level)}"]
        if fit.spec.is_seasonal:
            lines.append(f"  s = {' '.join(_sig7(v) for v in fit.initial_seasonal)}")
        lines += ["", f"sigma: {_sig7(fit.sigma)}", ""]
        lines += _layout(
            [
                ["", "AIC", "AICc", "BIC"],
                ["", _sig7(fit.aic), _sig7(fit.aicc), _sig7(fit.bic)],
            ]
        )
        return lines
    lines = [fit.method_label]
    if fit.order.n_coeffs:
        names = fit.order.coeff_names()
        table = _layout(
            [
                [""] + names,
                [""] + [_sig7(v) for v in fit.coeff_values],
                ["s.e."] + [_sig7(v) for v in fit.se],
            ]
        )
        lines += ["", "Coefficients:"] + table
    lines += [
        "",
        f"sigma^2 = {_sig7(fit.sigma2)}: log likelihood = {_sig7(fit.loglik)}",
        f"AIC={_sig7(fit.aic)}  AICc={_sig7(fit.aicc)}  BIC={_sig7(fit.bic)}",
    ]
    return lines


def _pvalue_text(p: float) -> str:
    if p < 2.2e-16:
        return "p-value < 2.2e-16"
    return f"p-value = {_sig7(p)}"


def render_report(
    fit: ModelFit,
    forecast: Forecast | None,
    measures: AccuracyMeasures,
    lb: LjungBoxResult | None = None,
    transform: str = "none",
) -> str:
    """Classic console-style text report; identical inputs give identical bytes."""
    lines = [f"Forecast method: {fit.method_label}", ""]
    lines += ["Model information:", _call_line(fit, transform), ""]
    lines += _model_block(fit)

    names = list(measures.as_dict())
    values = [_sig7(v) for v in measures.as_dict().values()]
    lines += ["", "Error measures:"]
    lines += _layout([[""] + names, ["Training set"] + values])
    if measures.pct_skipped:
        lines.append(
            f"MPE/MAPE skipped {_sig7(measures.pct_skipped)}% of months with zero actuals"
        )

    if lb is not None:
        lines += [
            "",
            "Ljung-Box test",
            "",
            f"Q* = {_sig7(lb.q_star)}, df = {lb.df}, {_pvalue_text(lb.p_value)}",
            "",
            f"Model df: {lb.model_df}. Total lags used: {lb.lags_used}",
        ]

    if forecast is not None:
        header = ["", "Point Forecast"]
        for level in forecast.levels:
            tag = _level_tag(level)
            header += [f"Lo {tag}", f"Hi {tag}"]
        rows = [header]
        for h in range(1, forecast.horizon + 1):
            row = [forecast.month(h).label(), _sig7(forecast.points[h - 1])]
            for level in forecast.levels:
                lo, hi = forecast.intervals[level]
                row += [_sig7(lo[h - 1]), _sig7(hi[h - 1])]
            rows.append(row)
        lines += ["", "Forecasts:"] + _layout(rows)

    return "\n".join(lines) + "\n"


def _round6(value: float) -> float | None:
    v = float(value)
    if not math.isfinite(v):
        return None
    return round(v, 6)


def emit_table(forecast: Forecast, fmt: str, dest: Path) -> Path:
    """Write the forecast table as CSV or JSON (6 decimal places)."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    dest = Path(dest)
    levels = forecast.levels
    if fmt == "csv":
        with open(dest, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            header = ["month", "point"]
            for level in levels:
                tag = _level_tag(level)
                header += [f"lo{tag}", f"hi{tag}"]
            writer.writerow(header)
            for h in range(1, forecast.horizon + 1):
                row = [forecast.month(h).isoformat(), f"{forecast.points[h - 1]:.6f}"]
                for level in levels:
                    lo, hi = forecast.intervals[level]
                    row += [f"{lo[h - 1]:.6f}", f"{hi[h - 1]:.6f}"]
                writer.writerow(row)
        return dest
    payload = {
        "origin": forecast.origin.isoformat(),
        "method": forecast.method_label,
        "sigma": _round6(forecast.sigma),
        "months": [stamp.isoformat() for stamp in forecast.months()],
        "points": [_round6(v) for v in forecast.points],
        "intervals": {
            _level_tag(level): {
                "lower": [_round6(v) for v in forecast.intervals[level][0]],
                "upper": [_round6(v) for v in forecast.intervals[level][1]],
            }
            for level in levels
        },
    }
    dest.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return dest


def _write_csv(dest: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    with open(dest, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return dest


def _write_forecast_fan(dest: Path, history: TimeSeries, forecast: Forecast) -> Path:
    """One table holding the fitted series and the forecast bands.

    History rows carry only ``actual``; forecast rows carry point and
    bounds. Both live on the modeled (post-transform) scale so the fan
    attaches to the series it was computed from.
    """
    levels = forecast.levels
    header = ["month", "actual", "point"]
    for level in levels:
        tag = _level_tag(level)
        header += [f"lo{tag}", f"hi{tag}"]
    pad = [""] * (1 + 2 * len(levels))
    rows: list[list[str]] = [
        [history.month_at(i).isoformat(), f"{value:.6f}", *pad]
        for i, value in enumerate(history.values)
    ]
    for h in range(1, forecast.horizon + 1):
        row = [forecast.month(h).isoformat(), "", f"{forecast.points[h - 1]:.6f}"]
        for level in levels:
            lo, hi = forecast.intervals[level]
            row += [f"{lo[h - 1]:.6f}", f"{hi[h - 1]:.6f}"]
        rows.append(row)
    return _write_csv(dest, header, rows)


def _series_rows(ts: TimeSeries) -> list[tuple[str, str]]:
    return [(ts.month_at(i).isoformat(), f"{v:.6f}") for i, v in enumerate(ts.values)]


def write_series_plot_data(out_dir: Path, prefix: str, ts: TimeSeries) -> list[Path]:
    """Figure inputs derivable from the series alone.

    Four files: the raw series, its first difference, a seasonal plot
    (one value per year/month pair) and the month-by-month subseries with
    per-month means.
    """
    out_dir = Path(out_dir)
    paths = [
        _write_csv(out_dir / f"{prefix}_raw_series.csv", ("month", "value"), _series_rows(ts)),
        _write_csv(
            out_dir / f"{prefix}_differenced_series.csv",
            ("month", "value"),
            _series_rows(difference(ts, 1)),
        ),
    ]
    seasonal = [
        (ts.month_at(i).year, ts.month_at(i).month, f"{v:.6f}")
        for i, v in enumerate(ts.values)
    ]
    paths.append(
        _write_csv(out_dir / f"{prefix}_seasonal_plot.csv", ("year", "month", "value"), seasonal)
    )
    sub = seasonal_subseries(ts)
    by_month: dict[int, list[tuple[int, float]]] = {m: [] for m in range(1, 13)}
    for i, v in enumerate(ts.values):
        stamp = ts.month_at(i)
        by_month[stamp.month].append((stamp.year, float(v)))
    rows = [
        (month, year, f"{value:.6f}", f"{sub.means[month]:.6f}")
        for month in range(1, 13)
        for year, value in by_month[month]
    ]
    paths.append(
        _write_csv(
            out_dir / f"{prefix}_subseries_plot.csv",
            ("month", "year", "value", "month_mean"),
            rows,
        )
    )
    return paths


def write_residual_plot_data(out_dir: Path, prefix: str, fit: ModelFit) -> list[Path]:
    """Residual bundle: time plot, ACF with its band, histogram counts."""
    out_dir = Path(out_dir)
    residuals = np.asarray(fit.residuals, dtype=float)
    start = _residual_start(fit)
    rows = [((start + i).isoformat(), f"{v:.6f}") for i, v in enumerate(residuals)]
    bundle = residual_bundle(residuals)
    acf_rows = [
        (k + 1, f"{bundle.acf_values[k]:.6f}", f"{bundle.band:.6f}")
        for k in range(bundle.lags)
    ]
    hist_rows = [
        (f"{bundle.bin_edges[i]:.6f}", f"{bundle.bin_edges[i + 1]:.6f}", int(count))
        for i, count in enumerate(bundle.bin_counts)
    ]
    return [
        _write_csv(out_dir / f"{prefix}_residuals.csv", ("month", "residual"), rows),
        _write_csv(out_dir / f"{prefix}_residual_acf.csv", ("lag", "acf", "band"), acf_rows),
        _write_csv(
            out_dir / f"{prefix}_residual_histogram.csv",
            ("bin_lo", "bin_hi", "count"),
            hist_rows,
        ),
    ]


def _diagnostics_payload(
    fit: ModelFit,
    measures: AccuracyMeasures,
    lb: LjungBoxResult | None,
    transform: str,
) -> dict:
    payload: dict = {
        "method": fit.method_label,
        "transform": transform,
        "measures": {k: _round6(v) for k, v in measures.as_dict().items()},
        "pct_skipped": _round6(measures.pct_skipped),
    }
    if lb is None:
        payload["ljung_box"] = None
    else:
        payload["ljung_box"] = {
            "q_star": _round6(lb.q_star),
            "df": lb.df,
            "p_value": float(f"{lb.p_value:.6e}"),
            "lags_used": lb.lags_used,
            "model_df": lb.model_df,
        }
    return payload


COMPARE_MODELS = ("snaive", "ets", "arima")


def render_comparison(results: Mapping[str, AccuracyMeasures]) -> str:
    """Side-by-side training accuracy, one row per model."""
    names = list(next(iter(results.values())).as_dict())
    rows = [["Model"] + names]
    for model, measures in results.items():
        rows.append([model] + [_sig7(v) for v in measures.as_dict().values()])
    return "\n".join(_layout(rows)) + "\n"


def run(config: RunConfig, stream: IO[str] | None = None) -> int:
    """Execute one configured run and write any requested artifacts."""
    out = stream if stream is not None else sys.stdout
    raw = load_mer_csv(config.input, config.msn, span=(config.start, config.end))
    ts = apply_transform(raw, config.transform)
    out_dir = config.out_dir
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    if config.model == "auto-compare":
        results: dict[str, AccuracyMeasures] = {}
        for model in COMPARE_MODELS:
            fit = fit_model(ts, model)
            results[fit.method_label] = diagnose(fit)[0]
        text = render_comparison(results)
        out.write(text)
        if out_dir is not None:
            names = list(next(iter(results.values())).as_dict())
            rows = [
                [label] + [f"{v:.6f}" for v in measures.as_dict().values()]
                for label, measures in results.items()
            ]
            _write_csv(out_dir / f"{config.msn}_comparison.csv", ["model"] + names, rows)
        return 0

    fit = fit_model(ts, config.model, config.order)
    forecast = None
    if config.with_forecast:
        forecast = forecast_model(fit, config.horizon, config.levels, config.seed)
    measures, lb = diagnose(fit)
    report = render_report(fit, forecast, measures, lb, transform=config.transform)
    out.write(report)

    if out_dir is not None:
        prefix = f"{config.msn}_{config.model}"
        (out_dir / f"{prefix}_report.txt").write_text(report, encoding="utf-8")
        (out_dir / f"{prefix}_diagnostics.json").write_text(
            json.dumps(_diagnostics_payload(fit, measures, lb, config.transform), indent=2)
            + "\n",
            encoding="utf-8",
        )
        write_series_plot_data(out_dir, config.msn, raw)
        write_residual_plot_data(out_dir, prefix, fit)
        if forecast is not None:
            for fmt in config.formats:
                suffix = "csv" if fmt == "csv" else "json"
                emit_table(forecast, fmt, out_dir / f"{prefix}_forecast.{suffix}")
            _write_forecast_fan(out_dir / f"{prefix}_forecast_fan.csv", fit.series, forecast)
    return 0
