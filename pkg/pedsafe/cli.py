import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from . import __version__
from .core.config import load_settings, usage_error_from
from .core.console import console
from .core.errors import PedsafeError, UsageError
from .core.factory import AnalysisFactory
from .core.models import Command, RunConfig
from .plugins.manager import PluginManager
from .utils import setup_logging

logger = logging.getLogger("Pedsafe.CLI")

# (flag, help) per subcommand; the dest of each flag is the scenario key it sets.
COMMAND_FLAGS: Dict[Command, Tuple[Tuple[str, str], ...]] = {
    Command.CONFIDENCE: (
        ("--mode", "Hypothesis: margin (absolute increase) or fold (multiple of the reference)"),
        ("--treat", "Treatment-arm counts as events/n, e.g. 4/100"),
        ("--control", "Control-arm counts as events/n (two-arm only)"),
        ("--ref-diff", "Reference placebo-corrected difference (two-arm)"),
        ("--ref-rate", "Reference proportion (single-arm)"),
        ("--margin", "Absolute margin epsilon >= 0 (margin mode)"),
        ("--fold", "Fold f > 1 (fold mode)"),
        ("--prior-treat", "Treatment prior shapes 'a,b' (default 1,1)"),
        ("--prior-control", "Control prior shapes 'a,b' (default 1,1)"),
        ("--near-zero", "Near-zero prior weight p_a^2 in (0,1) for both arms"),
        ("--ae-id", "Adverse-event label echoed in the report"),
    ),
    Command.SOLVE_N: (
        ("--mode", "Hypothesis: margin or fold"),
        ("--control-rate", "Assumed background (placebo) incidence"),
        ("--treat-rate", "Assumed treatment incidence"),
        ("--difference", "Assumed placebo-corrected difference (instead of --treat-rate)"),
        ("--ref-diff", "Reference difference (defaults to the assumed difference)"),
        ("--ref-rate", "Reference proportion; makes the design single-arm"),
        ("--margin", "Absolute margin epsilon >= 0 (margin mode)"),
        ("--fold", "Fold f > 1 (fold mode)"),
        ("--target", "Target confidence C (default 0.8)"),
        ("--allocation", "Treat:control allocation, e.g. 1:1 or 2:1"),
        ("--prior-treat", "Treatment prior shapes 'a,b'"),
        ("--prior-control", "Control prior shapes 'a,b'"),
        ("--near-zero", "Near-zero prior weight p_a^2 for both arms"),
        ("--n-total", "Evaluate this total sample size instead of solving"),
        ("--count-mode", "plug_in (expected counts) or predictive (simulated trials)"),
        ("--ae-id", "Adverse-event label echoed in the report"),
    ),
    Command.MIN_FOLD: (
        ("--events", "Observed events"),
        ("--n", "Participants"),
        ("--ref-rate", "Reference background proportion"),
        ("--target", "Probability threshold C (default 0.8)"),
        ("--prior", "Prior shapes 'a,b'"),
        ("--near-zero", "Near-zero prior weight p_a^2"),
        ("--ae-id", "Adverse-event label echoed in the report"),
    ),
    Command.CONTOUR: (
        ("--n", "Sample sizes, start:stop[:step] or a list"),
        ("--r", "Event counts, start:stop[:step] or a list"),
        ("--quantity", "confidence, at-least-r or exactly-r"),
        ("--rate", "True incidence for binomial quantities"),
        ("--ref-rate", "Reference proportion for the confidence quantity"),
        ("--fold", "Fold applied to the reference (default 1)"),
        ("--prior", "Prior shapes 'a,b'"),
        ("--near-zero", "Near-zero prior weight p_a^2"),
        ("--grid-output", "Grid file path (default <output dir>/contour_<quantity>.csv)"),
    ),
    Command.SDS: (
        ("--input", "CSV with a 'delta' column, or subject_id,time_label,sds_value"),
        ("--tau", "Meaningful decrease threshold tau > 0"),
        ("--target", "Also report the mean change needed for this confidence"),
        ("--baseline-label", "Time label of the baseline visit (default: first seen)"),
    ),
    Command.WIN_ODDS: (
        ("--input", "CSV with arm,subject_id and outcome columns in priority order"),
        ("--margin", "Non-inferiority margin psi_0 in (0,1] (default 1)"),
        ("--directions", "Per-component '+' (larger wins) or '-', e.g. '+,-'"),
    ),
    Command.REPRODUCE: (
        ("--figure", "Figure scenario grid to run: 2, 3, 4 or 5"),
        ("--output-dir", "Directory for the per-panel files"),
    ),
}

COMMAND_HELP = {
    Command.CONFIDENCE: "Consistency confidence for observed counts",
    Command.SOLVE_N: "Smallest sample size meeting a confidence target",
    Command.MIN_FOLD: "Minimum fold ruled out for single-arm data",
    Command.CONTOUR: "Probability grid over sample size and event count",
    Command.SDS: "Developmental safety confidence for SDS changes",
    Command.WIN_ODDS: "Win odds with bootstrap non-inferiority test",
    Command.REPRODUCE: "Regenerate a bundled figure scenario grid",
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _dest(flag: str) -> str:
    return flag.lstrip("-").replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="Config file (default ./pedsafe.yaml, then ~/.config/pedsafe/pedsafe.yaml)")
    common.add_argument("-v", "--verbose", action="store_true", default=None, help="Enable verbose logging.")
    common.add_argument("--format", choices=PluginManager().formats(), help="Report format")
    common.add_argument("--output", help="Report path (default <output dir>/<command>.<format>)")
    common.add_argument("--seed", help="Random seed (default from PEDSAFE_SEED)")
    common.add_argument("--method", help="Beta-difference evaluation method")
    common.add_argument("--grid-points", help="Quadrature nodes (odd, >= 65)")
    common.add_argument("--mc-samples", help="Monte Carlo draws (>= 10000)")
    common.add_argument("--replicates", help="Bootstrap replicates for win odds")

    parser = _ArgumentParser(prog="pedsafe", description="pedsafe - precision of pediatric safety databases.")
    parser.add_argument("--version", action="version", version=f"pedsafe {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    for command, flags in COMMAND_FLAGS.items():
        sub = subparsers.add_parser(command.value, parents=[common], help=COMMAND_HELP[command])
        for flag, help_text in flags:
            sub.add_argument(flag, dest=_dest(flag), help=help_text)
    return parser


def _settings_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    evaluation = {k: v for k, v in (
        ("method", args.method), ("grid_points", args.grid_points), ("mc_samples", args.mc_samples)
    ) if v is not None}
    if evaluation:
        overrides["evaluation"] = evaluation
    if args.replicates is not None:
        overrides["bootstrap"] = {"replicates": args.replicates}
    if args.format is not None:
        overrides["output"] = {"format": args.format}
    if args.verbose:
        overrides["logging"] = {"output_mode": "verbose"}
    return overrides


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Resolve command-line flags and config files into a validated RunConfig.

    Flags override config-file keys; the command's scenario keys come from
    ``scenario.<command>`` in the config file, then from flags.

    Raises:
        UsageError: naming the offending key.
    """
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required", key="command")
    command = Command(args.command)

    settings, config_path = load_settings(args.config, _settings_overrides(args))
    known = {c.value for c in Command}
    for name in settings.scenario:
        if name not in known:
            raise UsageError("unknown command", key=f"scenario.{name}")

    params = dict(settings.scenario.get(command.value, {}))
    for flag, _ in COMMAND_FLAGS[command]:
        value = getattr(args, _dest(flag))
        if value is not None:
            params[_dest(flag)] = value

    # Validates the keys; the analysis re-parses them when it runs.
    AnalysisFactory.get_analysis_class(command).parse_params(params)

    try:
        return RunConfig(
            command=command,
            params=params,
            settings=settings,
            output_path=args.output,
            config_path=str(config_path) if config_path else None,
        )
    except ValidationError as e:
        raise usage_error_from(e) from None


def _report_path(config: RunConfig, extension: str) -> Path:
    if config.output_path:
        return Path(config.output_path)
    return Path(config.settings.output.directory) / f"{config.command.value}.{extension}"


def _fail(config: Optional[RunConfig], error: Exception, title: str) -> None:
    logger.error(f"{title}: {error}")
    console.error_panel(str(error), title=title)
    console.verbose_error(
        command=config.command.value if config else "parse",
        error=error,
        context={"params": config.params} if config else None,
    )


def run(config: RunConfig) -> int:
    """Run one analysis and write its report. Returns the process exit status."""
    try:
        analysis = AnalysisFactory.get_analysis_class(config.command)(config)
        with console.status(f"Running {config.command.value}..."):
            report = analysis.run()

        plugin = PluginManager().get_plugin(config.settings.output.format)
        path = plugin.generate(report, _report_path(config, plugin.extension))

        console.summary_table(report)
        console.success(f"Report written to {path}")
        return 0

    except OSError as e:
        _fail(config, e, "I/O Error")
        return 3
    except (PedsafeError, ValueError, ArithmeticError) as e:
        _fail(config, e, "Analysis Failed")
        return 2


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except OSError as e:
        _fail(None, e, "I/O Error")
        return 3
    except (PedsafeError, ValueError) as e:
        _fail(None, e, "Usage Error")
        return 2

    log_settings = config.settings.logging
    console.configure(output_mode=log_settings.output_mode, debug=log_settings.debug)
    setup_logging(log_dir=log_settings.log_dir, debug=log_settings.debug, output_mode=log_settings.output_mode)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
