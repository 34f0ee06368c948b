"""Command-line driver: generate, decompose, diagnose, fit, select, forecast, evaluate and compare."""

import sys
import argparse
import logging
from datetime import timedelta
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import config, sarima
from .arrivals import ArrivalGenConfig, generate_arrivals, load_arrival_config
from .asset_manager import AssetManager
from .chart_renderer import decomposition_chart, forecast_chart, profile_chart
from .decomposition import classical_decompose, mean_profile, seasonal_strength
from .diagnostics import (
    acf,
    adf_test,
    anderson_darling,
    default_ljung_box_lags,
    jarque_bera,
    kpss_test,
    ljung_box,
    pacf,
)
from .evaluation import ModelSpec, holdout_evaluate, one_step_evaluate, parse_model_spec
from .model_selection import SearchBounds, auto_select
from .models import (
    DiagnosticReport,
    EvalReport,
    SarimaOrder,
    Series,
    SeriesError,
    SplitSpec,
    parse_timestamp,
    validate_levels,
)
from .series import aggregate, difference, split

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2
EXIT_INTERRUPTED = 130

MODES = ("holdout", "one-step")


class RunStats:
    """Track what a command produced."""

    def __init__(self, command: str):
        self.command = command
        self.files: List[Path] = []
        self.notes: List[str] = []

    def wrote(self, path: Path) -> Path:
        self.files.append(Path(path))
        return path

    def __str__(self):
        lines = [f"  Command: {self.command}", f"  Files written: {len(self.files)}"]
        lines.extend(f"    {path}" for path in self.files)
        lines.extend(f"  {note}" for note in self.notes)
        return "Run Summary:\n" + "\n".join(lines)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def parse_levels(text: str) -> Tuple[float, ...]:
    """Parse '80,95' (percent) or '0.8,0.95' (fractions) into sorted levels."""
    levels = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError as e:
            raise ValueError(f"Invalid confidence level '{part}'") from e
        levels.append(value / 100.0 if value >= 1.0 else value)
    return validate_levels(levels)


def split_model_list(text: str) -> List[str]:
    """Split 'sarima:3,0,0,2,1,0,24,hw,nnar' into model specs; numeric parts stay with their spec."""
    specs: List[str] = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if specs and part.lstrip("-").isdigit():
            specs[-1] += f",{part}"
        else:
            specs.append(part)
    return specs


def _seed(args) -> int:
    return config.DEFAULT_SEED if args.seed is None else args.seed


def _split_index(series: Series, text: str) -> int:
    train, _ = split(series, SplitSpec(parse_timestamp(text)))
    return len(train)


def _training_part(series: Series, text: Optional[str]) -> Series:
    if not text:
        return series
    return series.slice(0, _split_index(series, text))


def _steps_per_day(series: Series) -> int:
    day = timedelta(days=1)
    if day % series.step != timedelta(0):
        raise SeriesError(f"Series step {series.step} does not divide a day")
    return day // series.step


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(args, assets: AssetManager, stats: RunStats) -> None:
    gen_config = load_arrival_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.hours is not None:
        overrides["n_hours"] = args.hours
    if overrides:
        gen_config = ArrivalGenConfig(**{**gen_config.model_dump(), **overrides})

    series = generate_arrivals(gen_config)
    out = assets.resolve(args.out, "data", "arrivals", ".csv")
    stats.wrote(assets.save_series(series, out))
    stats.notes.append(f"Generated {len(series)} hourly values with seed {gen_config.seed}")


def cmd_decompose(args, assets: AssetManager, stats: RunStats) -> None:
    series = assets.load_series(args.input, args.column)
    decomposition = classical_decompose(series, args.period)
    strength = seasonal_strength(decomposition)
    logger.info(f"Seasonal strength at period {args.period}: {strength:.3f}")

    out = assets.resolve(args.out, "data", f"{series.label}_decomposition", ".csv")
    stats.wrote(assets.save_decomposition(decomposition, out))

    if args.daily_profile:
        profile = mean_profile(series, _steps_per_day(series))
        stats.wrote(assets.save_profile(profile, args.daily_profile))
        logger.info(f"Average day peaks at phase {int(profile.argmax())}")
    if args.monthly_profile:
        daily = aggregate(series, _steps_per_day(series))
        stats.wrote(assets.save_profile(mean_profile(daily, 30), args.monthly_profile))

    if args.svg:
        stats.wrote(assets.save_chart(decomposition_chart(decomposition, series.label), args.svg))
    if args.png:
        stats.wrote(assets.save_chart(decomposition_chart(decomposition, series.label), args.png))
    if args.profile_svg:
        chart = profile_chart(mean_profile(series, args.period), f"Mean profile, period {args.period}")
        stats.wrote(assets.save_chart(chart, args.profile_svg))


def build_diagnostic_report(
    series: Series,
    d: int = 1,
    D: int = 0,
    s: int = 24,
    order: Optional[SarimaOrder] = None,
    lb_lags: Optional[int] = None,
    max_lag: Optional[int] = None,
    alpha: float = config.ALPHA,
) -> DiagnosticReport:
    """Run the five-test battery on the raw series, its differences and the residuals.

    KPSS and ADF run on both the raw and the differenced series. Box-Ljung,
    Jarque-Bera and Anderson-Darling run on the residuals of `order` when given,
    otherwise on the differenced series.
    """
    differenced = difference(series, lag=s, times=D) if D else series
    differenced = difference(differenced, lag=1, times=d)

    rows = []
    for role, data in (("raw", series), ("differenced", differenced)):
        rows.append((role, kpss_test(data, alpha=alpha)))
        rows.append((role, adf_test(data, alpha=alpha)))

    if order is not None:
        fitted = sarima.fit(series, order)
        residuals, fitted_params, source = fitted.residuals, order.n_coefficients, f"{fitted.label} residuals"
    else:
        residuals, fitted_params, source = differenced, 0, "differenced"

    h = lb_lags or default_ljung_box_lags(len(residuals), s)
    rows.append(("residuals", ljung_box(residuals, h, fitted_params, alpha=alpha)))
    rows.append(("residuals", jarque_bera(residuals, alpha=alpha)))
    rows.append(("residuals", anderson_darling(residuals, alpha=alpha)))

    correlograms = {}
    for role, data in (("raw", series), ("differenced", differenced)):
        lags = min(max_lag or max(2 * s, 24), len(data) - 1)
        correlograms[role] = {"acf": acf(data, lags), "pacf": pacf(data, lags)}

    return DiagnosticReport(
        series_label=series.label,
        start=series.start,
        end=series.end,
        n=len(series),
        step=series.step,
        differencing={"d": d, "D": D, "s": s},
        rows=rows,
        correlograms=correlograms,
        residual_source=source,
    )


def cmd_diagnose(args, assets: AssetManager, stats: RunStats) -> None:
    series = assets.load_series(args.input, args.column)
    order = SarimaOrder.parse(args.order) if args.order else None
    report = build_diagnostic_report(series, args.d, args.D, args.s, order, args.lb_lags, args.max_lag)
    for role, result in report.rows:
        logger.info(
            f"{result.test_name} ({role}): statistic={result.statistic:.4f} p={result.p_value:.4f} "
            f"-> {result.inference}"
        )
    out = assets.resolve(args.out, "reports", f"{series.label}_diagnostics", ".json")
    stats.wrote(assets.save_report(report, out))


def cmd_fit(args, assets: AssetManager, stats: RunStats) -> None:
    series = _training_part(assets.load_series(args.input, args.column), args.split)
    fitted = sarima.fit(series, SarimaOrder.parse(args.order), include_mean=args.include_mean)
    out = assets.resolve(args.out, "models", fitted.label, ".json")
    stats.wrote(assets.save_model(fitted, out))
    stats.notes.append(f"{fitted.label}: AIC={fitted.aic:.3f} BIC={fitted.bic:.3f} converged={fitted.converged}")


def cmd_select(args, assets: AssetManager, stats: RunStats) -> None:
    series = _training_part(assets.load_series(args.input, args.column), args.split)
    bounds = SearchBounds(
        max_p=args.max_p, max_q=args.max_q, max_P=args.max_P, max_Q=args.max_Q,
        max_d=args.max_d, max_D=args.max_D,
    )
    fitted = auto_select(
        series, args.s, bounds,
        criterion=args.criterion,
        strategy=args.strategy.replace("-", "_"),
        include_mean=args.include_mean,
        workers=args.workers,
        window=args.window,
    )
    out = assets.resolve(args.out, "models", "selected", ".json")
    stats.wrote(assets.save_model(fitted, out))
    stats.notes.append(f"Selected {fitted.label} ({args.criterion.upper()}={getattr(fitted, args.criterion):.3f})")


def cmd_forecast(args, assets: AssetManager, stats: RunStats) -> None:
    fitted = assets.load_model(args.model)
    forecast = sarima.forecast(fitted, args.h, parse_levels(args.levels))
    out = assets.resolve(args.out, "forecasts", f"{fitted.label}_h{args.h}", ".csv")
    stats.wrote(assets.save_forecast(forecast, out))

    history = assets.load_series(args.input, args.column) if args.input else None
    if args.svg:
        stats.wrote(assets.save_chart(forecast_chart(forecast, history), args.svg))
    if args.png:
        stats.wrote(assets.save_chart(forecast_chart(forecast, history), args.png))


def evaluate_modes(
    series: Series,
    boundary: int,
    spec: ModelSpec,
    modes: Sequence[str],
    levels: Sequence[float],
) -> List[Tuple[str, EvalReport]]:
    """Score one model in each requested mode; rows are labelled '<model>:<mode>'."""
    rows = []
    for mode in modes:
        if mode == "holdout":
            report = holdout_evaluate(series, boundary, spec, levels)
        else:
            report = one_step_evaluate(series, boundary, spec, levels)
        rows.append((f"{spec.name}:{mode}", report))
    return rows


def _modes(text: str) -> Sequence[str]:
    return MODES if text == "both" else (text,)


def cmd_evaluate(args, assets: AssetManager, stats: RunStats) -> None:
    series = assets.load_series(args.input, args.column)
    boundary = _split_index(series, args.split)
    levels = parse_levels(args.levels)
    spec = parse_model_spec(
        args.model_spec, s=args.s, seed=_seed(args), criterion=args.criterion, workers=args.workers
    )
    rows = evaluate_modes(series, boundary, spec, _modes(args.mode), levels)
    out = assets.resolve(args.out, "reports", f"{series.label}_evaluation", ".csv")
    stats.wrote(assets.save_evaluation(rows, out, levels))


def cmd_compare(args, assets: AssetManager, stats: RunStats) -> None:
    series = assets.load_series(args.input, args.column)
    boundary = _split_index(series, args.split)
    levels = parse_levels(args.levels)
    rows = []
    for text in split_model_list(args.models):
        spec = parse_model_spec(
            text, s=args.s, seed=_seed(args), criterion=args.criterion, workers=args.workers
        )
        rows.extend(evaluate_modes(series, boundary, spec, _modes(args.mode), levels))
    for name, report in rows:
        stats.notes.append(f"{name}: ME={report.me:.4f} RMSE={report.rmse:.4f}")
    out = assets.resolve(args.out, "reports", f"{series.label}_comparison", ".csv")
    stats.wrote(assets.save_evaluation(rows, out, levels, include_aic=True))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"Random seed (default: {config.DEFAULT_SEED}; generate: the config's seed)"
    )
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=config.LOG_LEVEL.upper(),
        help="Set logging level (default: INFO)"
    )
    common.add_argument("--output-dir", type=Path, help="Root for default output paths (default: ./output)")

    reader = argparse.ArgumentParser(add_help=False)
    reader.add_argument("--in", dest="input", type=Path, required=True, help="Input CSV (timestamp,value)")
    reader.add_argument("--column", default="value", help="Value column to read (default: value)")

    parser = argparse.ArgumentParser(
        description="Hourly emergency-department arrival forecasting pipeline"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("generate", parents=[common], help="Generate synthetic hourly arrivals")
    p.add_argument("--config", type=Path, default=config.DEFAULT_ARRIVALS_CONFIG, help="Generator TOML file")
    p.add_argument("--hours", type=int, help="Override the number of generated hours")
    p.add_argument("--out", type=Path, help="Output CSV")
    p.set_defaults(handler=cmd_generate)

    p = commands.add_parser("decompose", parents=[common, reader], help="Classical additive decomposition")
    p.add_argument("--period", type=int, default=24, help="Seasonal period (default: 24)")
    p.add_argument("--out", type=Path, help="Decomposition CSV")
    p.add_argument("--daily-profile", type=Path, help="Write the average day (phase,mean) CSV")
    p.add_argument("--monthly-profile", type=Path, help="Write the average 30-day cycle of daily totals CSV")
    p.add_argument("--svg", type=Path, help="Decomposition chart (SVG)")
    p.add_argument("--png", type=Path, help="Decomposition chart (PNG)")
    p.add_argument("--profile-svg", type=Path, help="Mean-profile chart at --period (.svg or .png)")
    p.set_defaults(handler=cmd_decompose)

    p = commands.add_parser("diagnose", parents=[common, reader], help="Stationarity, whiteness and normality tests")
    p.add_argument("--d", type=int, default=1, help="Non-seasonal differences (default: 1)")
    p.add_argument("--D", type=int, default=0, help="Seasonal differences (default: 0)")
    p.add_argument("--s", type=int, default=24, help="Seasonal period (default: 24)")
    p.add_argument("--order", help="Run residual tests on this model's residuals (p,d,q[,P,D,Q,s])")
    p.add_argument("--lb-lags", type=int, help="Box-Ljung lag count (default: 2s capped at n/5)")
    p.add_argument("--max-lag", type=int, help="ACF/PACF maximum lag (default: 2s)")
    p.add_argument("--out", type=Path, help="Report JSON")
    p.set_defaults(handler=cmd_diagnose)

    p = commands.add_parser("fit", parents=[common, reader], help="Fit a seasonal ARIMA of given order")
    p.add_argument("--order", required=True, help="p,d,q or p,d,q,P,D,Q,s")
    p.add_argument("--include-mean", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--split", help="Fit only on values before this timestamp")
    p.add_argument("--out", type=Path, help="Model JSON")
    p.set_defaults(handler=cmd_fit)

    p = commands.add_parser("select", parents=[common, reader], help="Select a seasonal ARIMA by AIC/BIC")
    p.add_argument("--s", type=int, default=24, help="Seasonal period, 0 for none (default: 24)")
    p.add_argument("--criterion", choices=["aic", "bic"], default="aic")
    p.add_argument("--strategy", choices=["stepwise", "full-grid"], default="stepwise")
    p.add_argument("--max-p", type=int, default=config.DEFAULT_MAX_P)
    p.add_argument("--max-q", type=int, default=config.DEFAULT_MAX_Q)
    p.add_argument("--max-P", type=int, default=config.DEFAULT_MAX_SEASONAL_P)
    p.add_argument("--max-Q", type=int, default=config.DEFAULT_MAX_SEASONAL_Q)
    p.add_argument("--max-d", type=int, default=config.DEFAULT_MAX_D)
    p.add_argument("--max-D", type=int, default=config.DEFAULT_MAX_SEASONAL_D)
    p.add_argument("--include-mean", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--workers", type=int, default=config.WORKERS, help="Threads for candidate fits")
    p.add_argument(
        "--window",
        type=int,
        default=config.SELECTION_WINDOW,
        help=f"Rank candidates on the last N values, 0 for all (default: {config.SELECTION_WINDOW})"
    )
    p.add_argument("--split", help="Select only on values before this timestamp")
    p.add_argument("--out", type=Path, help="Model JSON")
    p.set_defaults(handler=cmd_select)

    p = commands.add_parser("forecast", parents=[common], help="Forecast from a persisted model")
    p.add_argument("--model", type=Path, required=True, help="Model JSON from fit/select")
    p.add_argument("--h", type=int, required=True, help="Horizon in steps")
    p.add_argument("--levels", default="80,95", help="Confidence levels, percent or fractions (default: 80,95)")
    p.add_argument("--in", dest="input", type=Path, help="History CSV shown on charts")
    p.add_argument("--column", default="value")
    p.add_argument("--out", type=Path, help="Forecast CSV")
    p.add_argument("--svg", type=Path, help="Forecast chart (SVG)")
    p.add_argument("--png", type=Path, help="Forecast chart (PNG)")
    p.set_defaults(handler=cmd_forecast)

    for name, handler, helptext in (
        ("evaluate", cmd_evaluate, "Score one model on the part after --split"),
        ("compare", cmd_compare, "Score several model families side by side"),
    ):
        p = commands.add_parser(name, parents=[common, reader], help=helptext)
        p.add_argument("--split", required=True, help="First test timestamp (YYYY-MM-DDTHH:MM:SS)")
        if name == "evaluate":
            p.add_argument("--model-spec", required=True, help="sarima[:p,d,q,P,D,Q,s] | hw[:period:variant] | nnar[:p,P,s]")
        else:
            p.add_argument("--models", default="sarima,hw,nnar", help="Comma-separated model specs (default: sarima,hw,nnar)")
        p.add_argument("--mode", choices=["holdout", "one-step", "both"], default="both")
        p.add_argument("--s", type=int, default=24, help="Seasonal period for default model specs")
        p.add_argument("--criterion", choices=["aic", "bic"], default="aic")
        p.add_argument("--levels", default="80,95", help="Coverage levels (default: 80,95)")
        p.add_argument(
            "--workers", type=int, default=config.WORKERS, help="Threads for order search and NNAR restarts"
        )
        p.add_argument("--out", type=Path, help="Evaluation CSV")
        p.set_defaults(handler=handler)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code.

    0 on success, 1 on a domain error (ValueError), 2 on usage or file errors,
    130 when interrupted.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE_ERROR

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format=config.LOG_FORMAT
    )
    logging.getLogger().setLevel(getattr(logging, args.log_level))

    stats = RunStats(args.command)
    try:
        config.validate_config()
        logger.debug("Pipeline configuration:")
        for key, value in config.get_config_summary().items():
            logger.debug(f"  {key}: {value}")

        args.handler(args, AssetManager(args.output_dir), stats)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR

    logger.info(str(stats))
    return EXIT_OK


def main():
    """Main entry point for the pipeline."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
