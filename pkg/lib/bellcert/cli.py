"""Command-line surface of the toolkit.

Results go to stdout, logs to stderr. Numbers are rendered with 6 significant
digits in ``text`` format and at full precision in ``csv`` format. Angles are
given in degrees and converted to radians once, when the configuration is
turned into model parameters.

Exit codes:
    0: success, or a nontrivial certificate
    1: usage, configuration or I/O error
    2: malformed trial log or counts file
    3: verification failure
    4: trivial certificate
"""

import argparse
import csv
import io
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config.config import Config
from .counter import Counter
from .error import BellCertError, ConfigError, TrialLogParseError, UsageError
from .finite_stats import (
    TrialTally,
    certify,
    finite_size_table,
    min_trials_for_selftest,
    s_avg_lower_bound,
)
from .logger import Logger, LogLevel
from .manifest import RunManifest
from .quantum_core import werner_state
from .selftest_bounds import (
    S_STAR,
    TSIRELSON,
    alpha_range_for_s,
    measurement_fidelity_bound,
    singlet_fidelity_bound,
)
from .simulator.sweep import find_peaks, sweep_offset, theta_grid
from .simulator.trial_log import TrialLogWriter, read_trial_log
from .simulator.trial_simulator import simulate
from .timing_verifier import locality_margin
from .tomography import ConfusionMatrix, tomography_baseline, write_counts
from .verify import run_checks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_TRIVIAL = 4

OVERRIDABLE_KEYS = (
    "n",
    "block_size",
    "report_size",
    "seed",
    "workers",
    "conf",
    "distance_m",
    "duration_ns",
    "distance_sigma_ns",
    "duration_sigma_ns",
    "k_sigma",
    "bell_fidelity",
    "theta_deg",
    "alpha_deg",
    "readout_eg_a",
    "readout_ge_a",
    "readout_eg_b",
    "readout_ge_b",
    "drift_amplitude_deg",
    "drift_period",
)
"""Flags whose value, when given, replaces the configuration key of the same name."""

DEFAULT_S_GRID = [2.1, 2.15, 2.2, 2.236, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8]
DEFAULT_N_GRID = [1 << 10, 1 << 14, 1 << 17, 1 << 20, 1 << 24, math.inf]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _trial_count(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a trial count: {text!r}") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"trial count must be positive, got {value}")
    return value


# ---- rendering ----


def _text_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


def _csv_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def render_record(record: dict, fmt: str) -> str:
    """One result as ``key: value`` lines, or a CSV header and row."""
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(record.keys())
        writer.writerow(_csv_value(v) for v in record.values())
        return buffer.getvalue()
    width = max(len(k) for k in record)
    return "".join(f"{k.ljust(width)}  {_text_value(v)}\n" for k, v in record.items())


def render_rows(rows: Sequence[dict], fmt: str) -> str:
    """A table of results with one row per dict; all dicts share their keys."""
    if not rows:
        return ""
    keys = list(rows[0].keys())
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(keys)
        for row in rows:
            writer.writerow(_csv_value(row[k]) for k in keys)
        return buffer.getvalue()
    cells = [[_text_value(row[k]) for k in keys] for row in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    lines = ["  ".join(k.rjust(w) for k, w in zip(keys, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(cell, widths)) for cell in cells]
    return "\n".join(lines) + "\n"


def _emit(text: str, args: argparse.Namespace, extra_outputs: list[str] | None = None) -> None:
    """Prints ``text`` and, when ``--out`` names a result file, writes it there
    together with the run manifest."""
    sys.stdout.write(text)
    out = getattr(args, "out", None)
    if out is not None:
        with open(out, "w", newline="\n") as f:
            f.write(text)
        _write_manifest(args, out, (extra_outputs or []) + [out])


def _write_manifest(
    args: argparse.Namespace, out: str, outputs: list[str], inputs: list[str] | None = None
) -> str:
    config: Config = args.resolved_config
    manifest = RunManifest(
        command=args.command,
        argv=list(args.argv),
        config=config.to_dict(),
        inputs=inputs or ([args.log] if getattr(args, "log", None) else []),
        outputs=outputs,
        seed=config.seed,
    )
    path = manifest.write(out)
    args.logger.debug("Wrote run manifest", path=path)
    return path


# ---- commands ----


def _resolve_sizes(args: argparse.Namespace, config: Config, logger: Logger) -> None:
    """Keeps block and report sizes consistent when only --n was given."""
    if args.block_size is None and config.n % config.block_size != 0:
        logger.warning("block_size does not divide n; using one block", n=config.n)
        config.update_config("block_size", config.n, temporary=True)
    if (
        args.report_size is None
        and config.report_size is not None
        and config.block_size % config.report_size != 0
    ):
        logger.warning("report_size does not divide block_size; reporting per block")
        config.update_config("report_size", None, temporary=True)


def cmd_simulate(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    _resolve_sizes(args, config, logger)
    experiment = config.to_experiment()
    with TrialLogWriter(args.out, experiment.header()) as writer:
        summary = simulate(experiment, writer, logger)
    _write_manifest(args, args.out, [args.out])
    logger.info("Wrote trial log", path=args.out, trials=writer.trials_written)

    totals = {
        "n": summary.tally.n,
        "c": summary.tally.c,
        "s_measured": summary.s_measured,
        "s_correlators": summary.s_correlators,
        "expected_s": summary.expected_s,
        "log": args.out,
    }
    text = render_record(totals, args.format)
    blocks = [{"block": i, "s": s} for i, s in enumerate(summary.block_s)]
    text += "\n" + render_rows(blocks, args.format)
    if experiment.report_size != experiment.block_size:
        windows = [{"window": i, "s": s} for i, s in enumerate(summary.report_s)]
        text += "\n" + render_rows(windows, args.format)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    if args.log is not None:
        tally = read_trial_log(args.log).tally
    elif args.n is not None and args.c is not None:
        tally = TrialTally(n=int(args.n), c=args.c)
    else:
        raise UsageError("certify needs a trial log or both --n and --c")
    result = certify(tally, config.conf)
    logger.info(
        "Certified",
        s_lower=result.bound.s_lower,
        f_state=result.f_state,
        f_measurement=result.f_measurement,
        trivial=result.state_trivial,
    )
    _emit(render_record(result.to_dict(), args.format), args)
    return EXIT_TRIVIAL if result.state_trivial else EXIT_OK


def _bounds_row(s: float) -> dict:
    alpha = alpha_range_for_s(s)
    return {
        "s": s,
        "f_state": singlet_fidelity_bound(s),
        "f_measurement": measurement_fidelity_bound(s),
        "state_certified": s > S_STAR,
        "alpha_lo_deg": math.degrees(alpha.lo),
        "alpha_hi_deg": math.degrees(alpha.hi),
    }


def cmd_bounds(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    if args.table:
        rows = [_bounds_row(float(s)) for s in np.linspace(2.0, TSIRELSON, args.steps)]
        _emit(render_rows(rows, args.format), args)
    elif args.s is not None:
        _emit(render_record(_bounds_row(args.s), args.format), args)
    else:
        raise UsageError("bounds needs --s or --table")
    return EXIT_OK


def cmd_table(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    rows = finite_size_table(args.s_values, args.n_values, config.conf)
    _emit(render_rows([row.to_dict() for row in rows], args.format), args)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    grid = theta_grid(args.start_deg, args.stop_deg, args.steps)
    points = sweep_offset(
        grid,
        args.trials,
        config.noise.to_noise_model(),
        config.seed,
        config.workers,
        logger,
    )
    text = render_rows([p.to_dict() for p in points], args.format)
    peaks = find_peaks(points)
    peak_record = {f"peak{i}_deg": p.theta_deg for i, p in enumerate(peaks)}
    peak_record.update({f"peak{i}_s": p.s for i, p in enumerate(peaks)})
    if len(peaks) == 2:
        peak_record["separation_deg"] = peaks[1].theta_deg - peaks[0].theta_deg
    if peak_record:
        text += "\n" + render_record(peak_record, args.format)
    _emit(text, args)
    return EXIT_OK


def cmd_timing(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    margin = locality_margin(config.to_spacetime())
    _emit(render_record(margin.to_dict(), args.format), args)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    results = run_checks(logger)
    _emit(render_rows([r.to_dict() for r in results], args.format), args)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_tomography(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    noise = config.noise
    confusion = (
        ConfusionMatrix(noise.readout_eg_a, noise.readout_ge_a),
        ConfusionMatrix(noise.readout_eg_b, noise.readout_ge_b),
    )
    logger.info("Starting tomography", shots=args.shots, bell_fidelity=noise.bell_fidelity)
    counts, report = tomography_baseline(
        werner_state(noise.bell_fidelity), args.shots, confusion, config.seed, args.eps_r
    )
    extra = []
    if args.counts_out is not None:
        write_counts(args.counts_out, counts, {"seed": config.seed, "shots_per_setting": args.shots})
        extra.append(args.counts_out)
        if args.out is None:
            _write_manifest(args, args.counts_out, extra)
    logger.info(
        "Tomography finished",
        fidelity_corrected=report.fidelity_corrected,
        fidelity_uncorrected=report.fidelity_uncorrected,
    )
    _emit(render_record(report.to_dict(), args.format), args, extra)
    return EXIT_OK


def cmd_feasibility(args: argparse.Namespace, config: Config, logger: Logger) -> int:
    n_min = min_trials_for_selftest(args.s, config.conf)
    bound = s_avg_lower_bound(TrialTally.from_s(n_min, args.s), config.conf)
    record = {"s": args.s, "conf": config.conf, "min_trials": n_min, "s_lower": bound.s_lower}
    _emit(render_record(record, args.format), args)
    return EXIT_OK


# ---- parser ----


def _add_noise_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("noise model")
    group.add_argument("--bell-fidelity", type=float, help="fidelity of the shared state to |phi+>")
    group.add_argument("--theta-deg", type=float, help="measurement basis offset (default: optimum)")
    group.add_argument("--alpha-deg", type=float, help="separation of node A's bases")
    group.add_argument("--readout-eg-a", type=float, help="p(e|g) of node A")
    group.add_argument("--readout-ge-a", type=float, help="p(g|e) of node A")
    group.add_argument("--readout-eg-b", type=float, help="p(e|g) of node B")
    group.add_argument("--readout-ge-b", type=float, help="p(g|e) of node B")
    group.add_argument("--drift-amplitude-deg", type=float, help="amplitude of the offset drift")
    group.add_argument("--drift-period", type=int, help="period of the offset drift in trials")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--format", choices=["text", "csv"], default="text")
    common.add_argument("--log-level", help="NOTSET, DEBUG, INFO, WARNING, ERROR or CRITICAL")
    common.add_argument("--log-dir", help="also append log lines to <dir>/activity.log")

    parser = _Parser(prog="bellcert", description="Device-independent Bell-test certification.")
    parser.add_argument("--version", action="version", version=f"bellcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(handler=handler)
        return p

    p = command("simulate", cmd_simulate, "simulate a Bell test and write a trial log")
    p.add_argument("--n", type=int, help="number of trials")
    p.add_argument("--block-size", type=int, help="trials between recalibrations")
    p.add_argument("--report-size", type=int, help="trials per S-tracking window")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default="trials.csv", help="trial log path")
    _add_noise_flags(p)

    p = command("certify", cmd_certify, "certify fidelities from a trial log or a tally")
    p.add_argument("log", nargs="?", help="trial log path")
    p.add_argument("--n", type=int, help="trial count, instead of a log")
    p.add_argument("--c", type=int, help="win count, instead of a log")
    p.add_argument("--conf", type=float, help="confidence level")
    p.add_argument("--out")

    p = command("bounds", cmd_bounds, "fidelity bounds for a CHSH value")
    p.add_argument("--s", type=float)
    p.add_argument("--table", action="store_true", help="tabulate S from 2 to 2 sqrt 2")
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--out")

    p = command("table", cmd_table, "certified fidelities over S and n")
    p.add_argument("--s", dest="s_values", type=float, nargs="+", default=DEFAULT_S_GRID)
    p.add_argument("--n", dest="n_values", type=_trial_count, nargs="+", default=DEFAULT_N_GRID)
    p.add_argument("--conf", type=float)
    p.add_argument("--out")

    p = command("sweep", cmd_sweep, "CHSH value against the basis offset angle")
    p.add_argument("--start-deg", type=float, default=0.0)
    p.add_argument("--stop-deg", type=float, default=360.0)
    p.add_argument("--steps", type=int, default=29)
    p.add_argument("--trials", type=int, default=36157, help="trials per grid point")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    _add_noise_flags(p)

    p = command("timing", cmd_timing, "locality margin of the trial timing")
    p.add_argument("--distance-m", "--distance", dest="distance_m", type=float)
    p.add_argument("--duration-ns", "--duration", dest="duration_ns", type=float)
    p.add_argument("--distance-sigma-ns", type=float)
    p.add_argument("--duration-sigma-ns", type=float)
    p.add_argument("--k-sigma", type=float)
    p.add_argument("--out")

    p = command("verify", cmd_verify, "run the oracle cross-checks")
    p.add_argument("--out")

    p = command("tomography", cmd_tomography, "simulated state tomography baseline")
    p.add_argument("--shots", type=int, default=100_000, help="shots per setting")
    p.add_argument("--eps-r", type=float, default=0.0025, help="basis rotation error")
    p.add_argument("--seed", type=int)
    p.add_argument("--counts-out", help="write the simulated counts here")
    p.add_argument("--out")
    _add_noise_flags(p)

    p = command("feasibility", cmd_feasibility, "fewest trials that certify a CHSH value")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--conf", type=float)
    p.add_argument("--out")

    p = sub.add_parser("replay", help="re-run the command recorded in a run manifest")
    p.add_argument("manifest")
    p.set_defaults(handler=None)

    return parser


def _apply_overrides(args: argparse.Namespace, config: Config) -> None:
    for key in OVERRIDABLE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            config.update_config(key, value, temporary=True)


def run(argv: Sequence[str], config_values: dict | None = None) -> int:
    """Parses ``argv`` and runs the command, returning its exit code.

    Args:
        argv: Command line without the program name.
        config_values: Resolved configuration replacing any ``--config`` file.
    """
    error_counter = Counter()
    logger = Logger(error_counter, LogLevel.INFO)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "replay":
            manifest = RunManifest.load(args.manifest)
            logger.info("Replaying run", command=manifest.command, manifest=args.manifest)
            return run(manifest.argv, manifest.config)

        if config_values is not None:
            config = Config(values=config_values)
        else:
            config = Config(args.config)
        _apply_overrides(args, config)

        level = LogLevel.from_name(args.log_level or config.log_level)
        logger = Logger(error_counter, level, config.colorized)
        if args.log_dir is not None:
            logger.set_log_dir(args.log_dir)

        args.argv = list(argv)
        args.resolved_config = config
        args.logger = logger
        return args.handler(args, config, logger)
    except UsageError as e:
        logger.error("Usage error", e)
        return EXIT_USAGE
    except TrialLogParseError as e:
        logger.error("Malformed input file", e, line_number=e.line_number)
        return EXIT_PARSE
    except (BellCertError, ConfigError, ValueError, OSError) as e:
        logger.error("Command failed", e)
        return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
