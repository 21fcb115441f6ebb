"""Report rendering, table emission, run orchestration and CLI exit codes."""

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from mercast.cli import main
from mercast.core import Forecast, MonthStamp, TimeSeries
from mercast.diagnostics import AccuracyMeasures, LjungBoxResult
from mercast.ets import EtsSpec, fit_ets
from mercast.report import (
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
from mercast.snaive import SNaiveFit, fit_snaive, forecast_snaive

JAN10 = MonthStamp(2010, 1)
PATTERN = np.array([0, 35, -20, 50, -45, 10, 60, -55, 25, -30, 45, -75], dtype=float)


def make_series(n=144, seed=7, level=900.0):
    rng = np.random.default_rng(seed)
    drift = level + np.cumsum(rng.normal(0, 4, n))
    y = drift + np.tile(PATTERN, n // 12 + 1)[:n] + rng.normal(0, 6, n)
    return TimeSeries(JAN10, y, unit="Thousand Barrels", name="TESTPUS")


def write_mer_csv(path: Path, series: TimeSeries) -> Path:
    lines = ["MSN,YYYYMM,Value,Description,Unit"]
    for i, v in enumerate(series.values):
        stamp = series.month_at(i)
        lines.append(f"{series.name},{stamp.yyyymm()},{v:.3f},Test Production,{series.unit}")
    for month in range(1, 13):
        lines.append(f"SHRTPUS,2010{month:02d},{100 + month},Short Series,Units")
    lines.append("SHRTPUS,201013,1234.5,Short Series,Units")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def mer_file(tmp_path_factory):
    return write_mer_csv(tmp_path_factory.mktemp("mer") / "mer.csv", make_series())


@pytest.fixture(scope="module")
def snaive_pair():
    ts = make_series()
    fit = fit_snaive(ts)
    return fit, forecast_snaive(fit, 24)


class TestRunConfig:
    def test_defaults_and_level_ordering(self, tmp_path):
        cfg = RunConfig(input=tmp_path / "x.csv", msn="A", levels=(0.95, 0.8, 0.95))
        assert cfg.horizon == 24
        assert cfg.levels == (0.8, 0.95)
        assert cfg.transform == "none"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"horizon": 0},
            {"levels": (1.2,)},
            {"levels": ()},
            {"transform": "log"},
            {"model": "prophet"},
            {"formats": ("yaml",)},
            {"start": MonthStamp(2020, 5), "end": MonthStamp(2020, 4)},
        ],
    )
    def test_invalid_settings_rejected(self, tmp_path, kwargs):
        with pytest.raises(ValueError):
            RunConfig(input=tmp_path / "x.csv", msn="A", **kwargs)

    def test_order_requires_arima(self, tmp_path):
        from mercast.sarima import SarimaOrder

        with pytest.raises(ValueError, match="order"):
            RunConfig(
                input=tmp_path / "x.csv",
                msn="A",
                model="snaive",
                order=SarimaOrder(1, 0, 0, 0, 0, 0, m=1),
            )


class TestRenderReport:
    def test_residual_sd_line(self):
        ts = make_series(n=36)
        base = fit_snaive(ts)
        fit = SNaiveFit(
            series=base.series,
            fitted=base.fitted,
            residuals=base.residuals,
            residual_sd=194.6538,
            period=base.period,
        )
        measures, lb = diagnose(fit)
        text = render_report(fit, forecast_snaive(fit, 3), measures, lb)
        assert "Residual sd: 194.6538" in text

    def test_sections_in_order(self, snaive_pair):
        fit, forecast = snaive_pair
        measures, lb = diagnose(fit)
        text = render_report(fit, forecast, measures, lb, transform="diff")
        positions = [
            text.index("Forecast method: Seasonal naive method"),
            text.index("Model information:"),
            text.index("Call: snaive(y = DY)"),
            text.index("Error measures:"),
            text.index("Ljung-Box test"),
            text.index("Forecasts:"),
        ]
        assert positions == sorted(positions)
        for column in ("ME", "RMSE", "MAE", "MPE", "MAPE", "MASE", "ACF1"):
            assert column in text

    def test_byte_identical_rerenders(self, snaive_pair):
        fit, forecast = snaive_pair
        measures, lb = diagnose(fit)
        first = render_report(fit, forecast, measures, lb)
        second = render_report(fit, forecast, measures, lb)
        assert first.encode() == second.encode()

    def test_without_forecast_omits_section(self, snaive_pair):
        fit, _ = snaive_pair
        measures, lb = diagnose(fit)
        text = render_report(fit, None, measures, lb)
        assert "Forecasts:" not in text

    def test_ets_initial_states_most_recent_first(self):
        ts = make_series(n=96)
        fit = fit_ets(ts, EtsSpec("A", "A", period=12))
        measures, lb = diagnose(fit)
        text = render_report(fit, None, measures, lb)
        line = next(l for l in text.splitlines() if l.strip().startswith("s ="))
        shown = line.split("=")[1].split()
        expected = [format(v, ".7g") for v in fit.initial_seasonal]
        assert shown == expected
        assert "Smoothing parameters:" in text
        assert "sigma:" in text

    def test_sarima_block_lists_coefficients(self, mer_file):
        code = main(
            [
                "fit",
                "--input",
                str(mer_file),
                "--msn",
                "TESTPUS",
                "--model",
                "arima",
                "--order",
                "1,0,0,0,1,1",
            ]
        )
        assert code == 0

    def test_tiny_pvalue_prints_r_style_floor(self, snaive_pair):
        fit, forecast = snaive_pair
        measures, _ = diagnose(fit)
        lb = LjungBoxResult(q_star=301.54, df=24, p_value=1.2e-18, lags_used=24, model_df=0)
        text = render_report(fit, forecast, measures, lb)
        assert "p-value < 2.2e-16" in text
        assert "Q* = 301.54, df = 24" in text

    def test_month_labels_cross_year_boundary(self):
        ts = make_series(n=36)  # ends Dec 2012
        fit = fit_snaive(ts)
        forecast = forecast_snaive(fit, 2)
        measures, _ = diagnose(fit)
        text = render_report(fit, forecast, measures, None)
        assert text.index("Jan 2013") > text.index("Forecasts:")
        assert forecast.month(1) == MonthStamp(2013, 1)


class TestEmitTable:
    def test_csv_has_one_row_per_step(self, snaive_pair, tmp_path):
        _, forecast = snaive_pair
        dest = emit_table(forecast, "csv", tmp_path / "f.csv")
        with open(dest, encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["month", "point", "lo80", "hi80", "lo95", "hi95"]
        assert len(rows) == 1 + 24
        months = [r[0] for r in rows[1:]]
        assert months[0] == "2022-01"
        assert months == [MonthStamp(2022, 1).plus(i).isoformat() for i in range(24)]

    def test_csv_json_round_trip_to_6dp(self, snaive_pair, tmp_path):
        _, forecast = snaive_pair
        csv_path = emit_table(forecast, "csv", tmp_path / "f.csv")
        json_path = emit_table(forecast, "json", tmp_path / "f.json")
        payload = json.loads(json_path.read_text(encoding="utf-8"))
        with open(csv_path, encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [r["month"] for r in rows] == payload["months"]
        for h, row in enumerate(rows):
            assert float(row["point"]) == pytest.approx(payload["points"][h], abs=5e-7)
            for tag in ("80", "95"):
                assert float(row[f"lo{tag}"]) == pytest.approx(
                    payload["intervals"][tag]["lower"][h], abs=5e-7
                )
                assert float(row[f"hi{tag}"]) == pytest.approx(
                    payload["intervals"][tag]["upper"][h], abs=5e-7
                )

    def test_json_mirrors_forecast_fields(self, snaive_pair, tmp_path):
        fit, forecast = snaive_pair
        payload = json.loads(
            emit_table(forecast, "json", tmp_path / "f.json").read_text(encoding="utf-8")
        )
        assert payload["origin"] == fit.series.end.isoformat()
        assert payload["method"] == "Seasonal naive method"
        assert payload["sigma"] == pytest.approx(fit.residual_sd, abs=5e-7)
        assert len(payload["points"]) == forecast.horizon

    def test_unwritable_destination_raises_oserror(self, snaive_pair, tmp_path):
        _, forecast = snaive_pair
        with pytest.raises(OSError):
            emit_table(forecast, "csv", tmp_path / "missing-dir" / "f.csv")

    def test_unknown_format_rejected(self, snaive_pair, tmp_path):
        _, forecast = snaive_pair
        with pytest.raises(ValueError):
            emit_table(forecast, "tsv", tmp_path / "f.tsv")


class TestRun:
    def test_snaive_on_differences_writes_everything(self, mer_file, tmp_path, capsys):
        config = RunConfig(
            input=mer_file,
            msn="TESTPUS",
            transform="diff",
            model="snaive",
            horizon=24,
            out_dir=tmp_path,
            formats=("csv", "json"),
        )
        assert run(config) == 0
        out = capsys.readouterr().out
        assert "Call: snaive(y = DY)" in out
        with open(tmp_path / "TESTPUS_snaive_forecast.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 24
        for row in rows:
            assert float(row["lo95"]) <= float(row["point"]) <= float(row["hi95"])
        for name in (
            "TESTPUS_snaive_report.txt",
            "TESTPUS_snaive_diagnostics.json",
            "TESTPUS_snaive_forecast.json",
            "TESTPUS_snaive_forecast_fan.csv",
            "TESTPUS_raw_series.csv",
            "TESTPUS_differenced_series.csv",
            "TESTPUS_seasonal_plot.csv",
            "TESTPUS_subseries_plot.csv",
            "TESTPUS_snaive_residuals.csv",
            "TESTPUS_snaive_residual_acf.csv",
            "TESTPUS_snaive_residual_histogram.csv",
        ):
            assert (tmp_path / name).exists(), name

    def test_forecast_fan_holds_history_then_bands(self, mer_file, tmp_path):
        config = RunConfig(
            input=mer_file,
            msn="TESTPUS",
            transform="diff",
            model="snaive",
            horizon=24,
            out_dir=tmp_path,
        )
        assert run(config) == 0
        with open(tmp_path / "TESTPUS_snaive_forecast_fan.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        history, future = rows[:-24], rows[-24:]
        assert len(history) == 143  # differencing drops one month
        assert all(r["actual"] != "" and r["point"] == "" for r in history)
        assert all(r["actual"] == "" and r["point"] != "" for r in future)
        months = [MonthStamp.parse(r["month"]) for r in rows]
        assert all(b == a + 1 for a, b in zip(months, months[1:]))
        assert all(float(r["lo95"]) <= float(r["point"]) <= float(r["hi95"]) for r in future)

    def test_repeated_runs_byte_identical(self, mer_file, tmp_path):
        outputs = []
        for sub in ("a", "b"):
            config = RunConfig(
                input=mer_file,
                msn="TESTPUS",
                model="snaive",
                out_dir=tmp_path / sub,
                formats=("csv", "json"),
            )
            import io

            stream = io.StringIO()
            assert run(config, stream=stream) == 0
            outputs.append(stream.getvalue())
        assert outputs[0] == outputs[1]
        left, right = tmp_path / "a", tmp_path / "b"
        names = sorted(p.name for p in left.iterdir())
        assert names == sorted(p.name for p in right.iterdir())
        for name in names:
            assert (left / name).read_bytes() == (right / name).read_bytes(), name

    def test_plot_data_matches_series(self, mer_file, tmp_path):
        config = RunConfig(input=mer_file, msn="TESTPUS", model="snaive", out_dir=tmp_path)
        run(config)
        ts = make_series()
        with open(tmp_path / "TESTPUS_raw_series.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == len(ts)
        assert rows[0]["month"] == "2010-01"
        assert float(rows[5]["value"]) == pytest.approx(round(float(ts.values[5]), 3))
        with open(tmp_path / "TESTPUS_differenced_series.csv", encoding="utf-8", newline="") as f:
            drows = list(csv.DictReader(f))
        assert len(drows) == len(ts) - 1
        first_diff = float(rows[1]["value"]) - float(rows[0]["value"])
        assert float(drows[0]["value"]) == pytest.approx(first_diff, abs=5e-7)
        with open(tmp_path / "TESTPUS_subseries_plot.csv", encoding="utf-8", newline="") as f:
            srows = list(csv.DictReader(f))
        assert len(srows) == len(ts)
        january = [r for r in srows if r["month"] == "1"]
        mean = np.mean([float(r["value"]) for r in january])
        assert float(january[0]["month_mean"]) == pytest.approx(mean, abs=5e-7)

    def test_residual_plot_data_aligns(self, mer_file, tmp_path):
        config = RunConfig(input=mer_file, msn="TESTPUS", model="snaive", out_dir=tmp_path)
        run(config)
        with open(tmp_path / "TESTPUS_snaive_residuals.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == len(make_series()) - 12
        assert rows[0]["month"] == "2011-01"
        with open(tmp_path / "TESTPUS_snaive_residual_acf.csv", encoding="utf-8", newline="") as f:
            acf_rows = list(csv.DictReader(f))
        assert [int(r["lag"]) for r in acf_rows] == list(range(1, len(acf_rows) + 1))
        assert all(abs(float(r["acf"])) <= 1.0 + 1e-12 for r in acf_rows)
        with open(
            tmp_path / "TESTPUS_snaive_residual_histogram.csv", encoding="utf-8", newline=""
        ) as f:
            hist_rows = list(csv.DictReader(f))
        assert sum(int(r["count"]) for r in hist_rows) == len(rows)

    def test_auto_compare_table(self, mer_file, tmp_path, capsys):
        config = RunConfig(
            input=mer_file, msn="TESTPUS", model="auto-compare", out_dir=tmp_path
        )
        assert run(config) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0].split() == ["Model", "ME", "RMSE", "MAE", "MPE", "MAPE", "MASE", "ACF1"]
        assert len(lines) == 4
        assert any("Seasonal naive method" in line for line in lines)
        assert any(line.startswith("ETS(") for line in lines)
        assert any(line.startswith("ARIMA(") for line in lines)
        with open(tmp_path / "TESTPUS_comparison.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 3
        snaive_row = next(r for r in rows if r["model"] == "Seasonal naive method")
        assert float(snaive_row["MASE"]) == pytest.approx(1.0)


class TestComparisonRendering:
    def test_rows_follow_input_order(self):
        a = AccuracyMeasures(0.1, 2.0, 1.5, 0.5, 1.0, 0.9, 0.05)
        b = AccuracyMeasures(0.2, 3.0, 2.5, 0.7, 2.0, 1.0, 0.15)
        text = render_comparison({"first": a, "second": b})
        lines = text.splitlines()
        assert lines[1].startswith("first")
        assert lines[2].startswith("second")


class TestCli:
    def test_list_catalogs_series(self, mer_file, capsys):
        assert main(["list", "--input", str(mer_file)]) == 0
        out = capsys.readouterr().out
        assert "TESTPUS" in out and "SHRTPUS" in out
        assert "Thousand Barrels" in out

    def test_inspect_reports_range(self, mer_file, capsys):
        assert main(["inspect", "--input", str(mer_file), "--msn", "TESTPUS"]) == 0
        out = capsys.readouterr().out
        assert "2010-01 .. 2021-12 (144 months)" in out
        assert "Suggested differencing:" in out

    def test_inspect_honors_span(self, mer_file, capsys):
        code = main(
            [
                "inspect",
                "--input",
                str(mer_file),
                "--msn",
                "TESTPUS",
                "--from",
                "2012-01",
                "--to",
                "2013-12",
            ]
        )
        assert code == 0
        assert "2012-01 .. 2013-12 (24 months)" in capsys.readouterr().out

    def test_forecast_writes_artifacts(self, mer_file, tmp_path, capsys):
        code = main(
            [
                "forecast",
                "--input",
                str(mer_file),
                "--msn",
                "TESTPUS",
                "--model",
                "snaive",
                "--horizon",
                "13",
                "--levels",
                "0.5,0.9",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "Lo 50" in out and "Hi 90" in out
        with open(tmp_path / "TESTPUS_snaive_forecast.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["month", "point", "lo50", "hi50", "lo90", "hi90"]
        assert len(rows) == 14

    def test_usage_error_is_exit_2(self, mer_file, capsys):
        code = main(["fit", "--input", str(mer_file), "--msn", "TESTPUS", "--model", "prophet"])
        capsys.readouterr()
        assert code == 2

    def test_bad_level_is_exit_2_with_record(self, mer_file, capsys):
        code = main(
            [
                "forecast",
                "--input",
                str(mer_file),
                "--msn",
                "TESTPUS",
                "--model",
                "snaive",
                "--levels",
                "1.5",
            ]
        )
        assert code == 2
        record = json.loads(capsys.readouterr().err.splitlines()[0])
        assert record["exit_code"] == 2

    def test_unknown_msn_is_exit_3_with_record(self, mer_file, capsys):
        code = main(["fit", "--input", str(mer_file), "--msn", "NOPE", "--model", "snaive"])
        assert code == 3
        err_lines = capsys.readouterr().err.splitlines()
        record = json.loads(err_lines[0])
        assert record["error"] == "SeriesNotFoundError"
        assert record["exit_code"] == 3
        assert "NOPE" in record["message"]
        assert err_lines[1].startswith("error: ")

    def test_missing_file_is_exit_3(self, tmp_path, capsys):
        code = main(
            ["fit", "--input", str(tmp_path / "nope.csv"), "--msn", "X", "--model", "snaive"]
        )
        capsys.readouterr()
        assert code == 3

    def test_data_too_short_is_exit_4(self, mer_file, capsys):
        code = main(
            [
                "fit",
                "--input",
                str(mer_file),
                "--msn",
                "SHRTPUS",
                "--model",
                "arima",
                "--order",
                "1,1,1,1,1,1",
            ]
        )
        assert code == 4
        record = json.loads(capsys.readouterr().err.splitlines()[0])
        assert record["error"] == "InsufficientDataError"

    def test_annual_rows_do_not_leak(self, mer_file, capsys):
        assert main(["inspect", "--input", str(mer_file), "--msn", "SHRTPUS"]) == 0
        assert "(12 months)" in capsys.readouterr().out


class TestTransforms:
    def test_apply_transform_shapes(self):
        ts = make_series(n=48)
        assert len(apply_transform(ts, "none")) == 48
        assert len(apply_transform(ts, "diff")) == 47
        assert len(apply_transform(ts, "seasonal-diff")) == 36
        with pytest.raises(ValueError):
            apply_transform(ts, "log")

    def test_fit_model_dispatch(self):
        ts = make_series(n=60)
        assert fit_model(ts, "snaive").method_label == "Seasonal naive method"
        fit = fit_model(ts, "ets")
        assert fit.method_label.startswith("ETS(")
        fc = forecast_model(fit, 6)
        assert fc.horizon == 6 and math.isfinite(fc.points[0])
