"""Tests for the arrival generator and the command-line pipeline."""

import sys
import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

ROOT = Path(__file__).parent
SPLIT = "2014-02-01T00:00:00"
HOURS = 24 * 35


def _flat_config(**overrides):
    from src.arrivals import ArrivalGenConfig
    fields = dict(
        n_hours=20000,
        base_rate=6.0,
        trend_pct_per_year=0.0,
        annual_amplitude=0.0,
        diurnal=[1.0] * 24,
        day_of_week=[1.0] * 7,
        seed=5,
    )
    fields.update(overrides)
    return ArrivalGenConfig(**fields)


def _generate(tmp: Path, name: str = "arrivals.csv", hours: int = HOURS) -> Path:
    from src.main_pipeline import run
    out = tmp / name
    assert run(["generate", "--hours", str(hours), "--out", str(out), "--log-level", "WARNING"]) == 0
    return out


def test_arrival_generator():
    """Test seeded arrival generation."""
    print("Testing arrival generator...")
    from src.arrivals import ArrivalGenConfig, generate_arrivals

    a = generate_arrivals(ArrivalGenConfig(n_hours=500, seed=3))
    b = generate_arrivals(ArrivalGenConfig(n_hours=500, seed=3))
    c = generate_arrivals(ArrivalGenConfig(n_hours=500, seed=4))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert np.all(a.values >= 0) and np.all(a.values == np.round(a.values))

    flat = generate_arrivals(_flat_config())
    assert 5.9 <= flat.values.mean() <= 6.1, f"flat mean {flat.values.mean():.3f}"
    doubled = generate_arrivals(_flat_config(base_rate=12.0))
    ratio = doubled.values.mean() / flat.values.mean()
    assert abs(ratio - 2.0) <= 0.06, f"rate ratio {ratio:.3f}"
    print(f"✓ Generator deterministic, flat mean {flat.values.mean():.3f}")


def test_arrival_shape():
    """Test that the default arrivals follow the configured day shape."""
    print("\nTesting arrival day shape...")
    from src.arrivals import ArrivalGenConfig, generate_arrivals
    from src.decomposition import mean_profile

    gen_config = ArrivalGenConfig()
    series = generate_arrivals(gen_config)
    assert len(series) == 32136
    profile = np.asarray(mean_profile(series, 24))
    correlation = float(np.corrcoef(profile, gen_config.diurnal)[0, 1])
    assert correlation >= 0.95, f"profile correlation {correlation:.3f}"
    assert gen_config.peak_hour == 11
    assert int(np.argmax(profile)) == gen_config.peak_hour
    assert abs(sum(gen_config.diurnal) / 24 - 1.0) < 1e-12
    assert abs(sum(gen_config.day_of_week) / 7 - 1.0) < 1e-12
    print(f"✓ Average day peaks at hour {int(np.argmax(profile))} (correlation {correlation:.3f})")


def test_arrival_config_file():
    """Test loading generator settings from TOML."""
    print("\nTesting generator config files...")
    from src.arrivals import ArrivalGenConfig, load_arrival_config

    gen_config = load_arrival_config(ROOT / "configs" / "ed_default.toml")
    assert gen_config.n_hours == 32136 and gen_config.seed == 42
    assert gen_config.start.year == 2014 and gen_config.start.tzinfo is not None

    try:
        load_arrival_config(ROOT / "configs" / "missing.toml")
        raise AssertionError("missing config accepted")
    except FileNotFoundError:
        pass

    for bad in ({"diurnal": [1.0] * 23}, {"day_of_week": [1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0]},
                {"base_rate": 0.0}, {"trend_pct_per_year": -100.0}, {"colour": "red"}):
        try:
            ArrivalGenConfig(**bad)
            raise AssertionError(f"invalid generator config accepted: {bad}")
        except ValueError:
            pass

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "no_section.toml"
        path.write_text('title = "arrivals"\n', encoding="utf-8")
        try:
            load_arrival_config(path)
            raise AssertionError("config without [arrivals] accepted")
        except ValueError:
            pass
    print("✓ Generator config loads and validates")


def test_cli_generate_and_decompose():
    """Test the generate and decompose commands."""
    print("\nTesting generate and decompose commands...")
    from src.main_pipeline import run

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp)
        frame = pd.read_csv(data)
        assert list(frame.columns) == ["timestamp", "value"] and len(frame) == HOURS
        assert frame["timestamp"].iloc[0].startswith("2014-01-01T00:00:00")

        again = _generate(tmp, "again.csv")
        assert data.read_bytes() == again.read_bytes()

        code = run([
            "decompose", "--in", str(data), "--period", "24",
            "--out", str(tmp / "decomp.csv"),
            "--daily-profile", str(tmp / "daily.csv"),
            "--svg", str(tmp / "decomp.svg"),
            "--log-level", "WARNING",
        ])
        assert code == 0
        decomposition = pd.read_csv(tmp / "decomp.csv")
        assert list(decomposition.columns) == ["timestamp", "observed", "trend", "seasonal", "remainder"]
        assert decomposition["trend"].isna().sum() == 24
        daily = pd.read_csv(tmp / "daily.csv")
        assert list(daily.columns) == ["phase", "mean"] and len(daily) == 24
        assert (tmp / "decomp.svg").read_text(encoding="utf-8").lstrip().startswith("<svg")
    print("✓ Generate and decompose write their files")


def test_cli_diagnose():
    """Test the diagnostic report command."""
    print("\nTesting diagnose command...")
    from src.main_pipeline import run

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp)
        out = tmp / "report.json"
        assert run(["diagnose", "--in", str(data), "--d", "1", "--D", "1", "--s", "24",
                    "--out", str(out), "--log-level", "WARNING"]) == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["report_version"] == 1
        assert report["differencing"] == {"d": 1, "D": 1, "s": 24}
        families = {row["test"] for row in report["tests"]}
        assert len(families) == 5, families
        assert {row["applied_to"] for row in report["tests"]} == {"raw", "differenced", "residuals"}
        for row in report["tests"]:
            assert 0.0 <= row["p_value"] <= 1.0
        assert set(report["correlograms"]) == {"raw", "differenced"}
    print(f"✓ Diagnose reports {len(families)} test families")


def test_cli_fit_select_forecast():
    """Test fitting, selection and forecasting from persisted models."""
    print("\nTesting fit, select and forecast commands...")
    from src.main_pipeline import run

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp)
        model = tmp / "model.json"
        assert run(["fit", "--in", str(data), "--order", "1,0,0,0,1,0,24", "--split", SPLIT,
                    "--out", str(model), "--log-level", "WARNING"]) == 0
        document = json.loads(model.read_text(encoding="utf-8"))
        assert document["format_version"] == 1
        assert document["order"] == {"p": 1, "d": 0, "q": 0, "P": 0, "D": 1, "Q": 0, "s": 24}
        assert document["training_window"]["end"].startswith("2014-01-31T23:00:00")

        selected = tmp / "selected.json"
        assert run(["select", "--in", str(data), "--s", "0", "--strategy", "full-grid",
                    "--max-p", "1", "--max-q", "1", "--max-d", "1", "--max-P", "0", "--max-Q", "0",
                    "--max-D", "0", "--workers", "2", "--out", str(selected), "--log-level", "WARNING"]) == 0
        assert json.loads(selected.read_text(encoding="utf-8"))["aic"] is not None

        out = tmp / "forecast.csv"
        assert run(["forecast", "--model", str(model), "--h", "48", "--levels", "10,50,80,95,99",
                    "--out", str(out), "--log-level", "WARNING"]) == 0
        forecast = pd.read_csv(out)
        assert len(forecast) == 48
        assert forecast["timestamp"].iloc[0].startswith(SPLIT)
        for tag in ("10", "50", "80", "95", "99"):
            assert np.all(forecast[f"lo{tag}"] <= forecast["point"])
            assert np.all(forecast["point"] <= forecast[f"hi{tag}"])
        assert np.all(forecast["lo99"] <= forecast["lo10"])
        assert np.all(forecast["hi10"] <= forecast["hi99"])

        rerun = tmp / "forecast_again.csv"
        assert run(["forecast", "--model", str(model), "--h", "48", "--levels", "10,50,80,95,99",
                    "--out", str(rerun), "--log-level", "WARNING"]) == 0
        assert out.read_bytes() == rerun.read_bytes()
    print("✓ Fit, select and forecast work end to end")


def test_cli_evaluate_and_compare():
    """Test evaluation and model comparison tables."""
    print("\nTesting evaluate and compare commands...")
    from src.main_pipeline import run

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp)
        out = tmp / "evaluation.csv"
        assert run(["evaluate", "--in", str(data), "--split", SPLIT, "--model-spec", "hw:24:additive",
                    "--mode", "both", "--out", str(out), "--log-level", "WARNING"]) == 0
        evaluation = pd.read_csv(out)
        assert list(evaluation.columns) == ["model", "me", "rmse", "coverage_80", "coverage_95", "n"]
        assert list(evaluation["model"]) == ["hw:24:additive:holdout", "hw:24:additive:one-step"]
        assert np.all(evaluation["n"] == HOURS - 31 * 24)
        assert np.all(evaluation["rmse"] > 0)

        out = tmp / "comparison.csv"
        models = "sarima:1,0,0,0,1,0,24,hw:24:additive,nnar:2,1,24,1"
        assert run(["compare", "--in", str(data), "--split", SPLIT, "--models", models,
                    "--mode", "holdout", "--out", str(out), "--log-level", "WARNING"]) == 0
        comparison = pd.read_csv(out)
        assert list(comparison["model"]) == [
            "sarima:1,0,0,0,1,0,24:holdout", "hw:24:additive:holdout", "nnar:2,1,24,1:holdout",
        ]
        assert comparison.columns[-1] == "aic"
        assert not np.isnan(comparison["aic"].iloc[0])
        assert comparison["aic"].iloc[1:].isna().all()
    print("✓ Evaluate and compare write their tables")


def test_cli_reruns_identical():
    """Test that every command writes identical bytes when rerun, threaded or not."""
    print("\nTesting byte-identical reruns...")
    from src.main_pipeline import run

    quiet = ["--log-level", "WARNING"]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp)

        def twice(name, argv, suffixes):
            outputs = []
            for attempt in ("a", "b"):
                paths = [tmp / f"{name}_{attempt}{suffix}" for suffix in suffixes]
                flags = []
                for suffix, path in zip(suffixes, paths):
                    flags += ["--svg" if suffix == ".svg" else "--out", str(path)]
                assert run(argv + flags + quiet) == 0, f"{name} failed"
                outputs.append([path.read_bytes() for path in paths])
            assert outputs[0] == outputs[1], f"{name} output differs between runs"
            return outputs[0]

        source = ["--in", str(data)]
        twice("decompose", ["decompose", *source, "--period", "24"], [".csv", ".svg"])
        twice("diagnose", ["diagnose", *source, "--d", "1", "--D", "1", "--s", "24",
                           "--order", "1,0,0,0,1,0,24"], [".json"])
        twice("fit", ["fit", *source, "--order", "1,0,1,0,1,0,24", "--split", SPLIT], [".json"])

        search = ["select", *source, "--s", "24", "--max-p", "2", "--max-q", "1", "--max-P", "1",
                  "--max-Q", "0", "--split", SPLIT]
        threaded = twice("select", search + ["--workers", "2"], [".json"])
        serial = twice("select_serial", search + ["--workers", "1"], [".json"])
        assert threaded == serial
        twice("select_window", search + ["--workers", "2", "--window", "240"], [".json"])

        evaluation = ["evaluate", *source, "--split", SPLIT, "--model-spec", "hw:24:additive", "--mode", "both"]
        twice("evaluate", evaluation, [".csv"])

        models = "sarima:1,0,0,0,1,0,24,nnar:2,1,24,4"
        comparison = ["compare", *source, "--split", SPLIT, "--models", models, "--mode", "both", "--seed", "42"]
        threaded = twice("compare", comparison + ["--workers", "2"], [".csv"])
        serial = twice("compare_serial", comparison + ["--workers", "1"], [".csv"])
        assert threaded == serial
    print("✓ Decompose, diagnose, fit, select, evaluate and compare rerun byte for byte")


def test_default_dataset_end_to_end():
    """Test select, forecast, diagnose and evaluate on the default synthetic dataset."""
    print("\nTesting the default dataset end to end...")
    from src.main_pipeline import run

    split = "2017-08-01T00:00:00"
    holdout_hours = 31 * 24
    quiet = ["--log-level", "WARNING"]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = tmp / "arrivals.csv"
        assert run(["generate", "--out", str(data)] + quiet) == 0
        frame = pd.read_csv(data)
        assert len(frame) == 32136
        actual = frame["value"].to_numpy(dtype=float)[-holdout_hours:]

        report = tmp / "report.json"
        assert run(["diagnose", "--in", str(data), "--d", "1", "--D", "0", "--s", "24",
                    "--out", str(report)] + quiet) == 0
        rows = json.loads(report.read_text(encoding="utf-8"))["tests"]
        adf = [row for row in rows if row["test"] == "Augmented Dickey-Fuller test" and row["applied_to"] == "differenced"]
        assert len(adf) == 1
        assert adf[0]["p_value"] == 0.01 and adf[0]["p_clamped"] is True

        model = tmp / "selected.json"
        assert run(["select", "--in", str(data), "--s", "24", "--split", split, "--workers", "2",
                    "--out", str(model)] + quiet) == 0
        order = json.loads(model.read_text(encoding="utf-8"))["order"]

        forecast_path = tmp / "forecast.csv"
        assert run(["forecast", "--model", str(model), "--h", str(holdout_hours), "--levels", "80,95",
                    "--out", str(forecast_path)] + quiet) == 0
        forecast = pd.read_csv(forecast_path)
        assert len(forecast) == holdout_hours and forecast["timestamp"].iloc[0].startswith(split)
        inside = {
            tag: float(np.mean((forecast[f"lo{tag}"] <= actual) & (actual <= forecast[f"hi{tag}"])))
            for tag in ("80", "95")
        }
        assert inside["80"] >= 0.75, f"80% band holds {inside['80']:.3f}"
        assert inside["95"] >= 0.90, f"95% band holds {inside['95']:.3f}"

        spec = "sarima:" + ",".join(str(order[key]) for key in ("p", "d", "q", "P", "D", "Q", "s"))
        out = tmp / "evaluation.csv"
        assert run(["evaluate", "--in", str(data), "--split", split, "--model-spec", spec,
                    "--mode", "one-step", "--out", str(out)] + quiet) == 0
        evaluation = pd.read_csv(out)
        assert len(evaluation) == 1 and int(evaluation["n"].iloc[0]) == holdout_hours
        bound = 1.35 * float(np.sqrt(actual.mean()))
        one_step_rmse = float(evaluation["rmse"].iloc[0])
        assert one_step_rmse <= bound, f"one-step RMSE {one_step_rmse:.3f} above {bound:.3f}"
    print(f"✓ {spec}: band coverage {inside['80']:.3f}/{inside['95']:.3f}, "
          f"one-step RMSE {one_step_rmse:.3f} <= {bound:.3f}")


def test_cli_exit_codes():
    """Test exit codes for usage and domain errors."""
    print("\nTesting exit codes...")
    from src.main_pipeline import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, run, split_model_list

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = _generate(tmp, hours=24 * 10)
        quiet = ["--log-level", "ERROR"]
        assert run(["forecast", "--model", str(tmp / "missing.json"), "--h", "5"] + quiet) == EXIT_USAGE_ERROR
        assert run(["fit", "--in", str(data), "--order", "1,0"] + quiet) == EXIT_DOMAIN_ERROR
        assert run(["fit", "--in", str(data), "--order", "1,0,0,0,1,0,1"] + quiet) == EXIT_DOMAIN_ERROR
        assert run(["evaluate", "--in", str(data), "--split", SPLIT, "--model-spec", "arima"] + quiet) \
            == EXIT_DOMAIN_ERROR
        assert run(["no-such-command"]) == EXIT_USAGE_ERROR
        assert run(["fit", "--in", str(data)]) == EXIT_USAGE_ERROR

    assert split_model_list("sarima:3,0,0,2,1,0,24,hw,nnar") == ["sarima:3,0,0,2,1,0,24", "hw", "nnar"]
    print("✓ Exit codes follow the error kind")


def main():
    """Run all tests."""
    print("=" * 60)
    print("ED Arrival Forecasting - Pipeline Tests")
    print("=" * 60)

    tests = [
        ("Arrival Generator", test_arrival_generator),
        ("Arrival Shape", test_arrival_shape),
        ("Arrival Config File", test_arrival_config_file),
        ("Generate and Decompose", test_cli_generate_and_decompose),
        ("Diagnose", test_cli_diagnose),
        ("Fit, Select and Forecast", test_cli_fit_select_forecast),
        ("Evaluate and Compare", test_cli_evaluate_and_compare),
        ("Byte-Identical Reruns", test_cli_reruns_identical),
        ("Default Dataset End to End", test_default_dataset_end_to_end),
        ("Exit Codes", test_cli_exit_codes),
    ]

    results = []
    for name, test_func in tests:
        try:
            test_func()
            results.append((name, True))
        except Exception as e:
            print(f"✗ {name} failed: {e}")
            results.append((name, False))

    print("\n" + "=" * 60)
    print("Test Summary:")
    print("=" * 60)

    for name, passed in results:
        status = "✓ PASS" if passed else "✗ FAIL"
        print(f"{status}: {name}")

    all_passed = all(passed for _, passed in results)
    print("\n" + ("All tests passed!" if all_passed else "Some tests failed."))
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
