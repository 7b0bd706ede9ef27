"""Command-line entry point: ``msbench run|analyze|compare|gen-dataset``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import analysis, report, stats
from .backend import BackendDescriptor
from .dataset import SyntheticSpec, gen_synthetic_dataset
from .errors import MsbenchError
from .harness import RunConfig, run_benchmark

log = logging.getLogger("msbench")

DEFAULT_SCALES_ARG = "0.70710678,1.0,1.41421356"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    def __init__(self, message, prog="msbench"):
        self.prog = prog
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.prog)


def parse_scales(text: str) -> tuple:
    try:
        factors = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid scale list {text!r}: expected comma-separated numbers") from None
    if not factors or any(not (f > 0 and math.isfinite(f)) for f in factors):
        raise argparse.ArgumentTypeError(f"invalid scale list {text!r}: factors must be positive")
    return factors


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def parse_backend(text: str) -> tuple:
    if text in ("reference", "synthetic"):
        return text, None
    if text.startswith("external:") and text[len("external:"):].strip():
        return "external", text[len("external:"):]
    raise argparse.ArgumentTypeError(f"backend must be reference, synthetic or external:<command>, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msbench", description="Material-segmentation inference benchmark.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    run = sub.add_parser("run", help="benchmark a dataset")
    run.add_argument("--dataset", help="root directory with one subdirectory per category")
    run.add_argument("--scales", type=parse_scales, default=parse_scales(DEFAULT_SCALES_ARG),
                     help=f"comma-separated scale factors (default {DEFAULT_SCALES_ARG})")
    run.add_argument("--window", type=positive_int, default=224, help="window side in pixels")
    run.add_argument("--stride", type=positive_int, default=112, help="window stride in pixels")
    run.add_argument("--backend", type=parse_backend, default=("reference", None),
                     help="reference | synthetic | external:<command>")
    run.add_argument("--seed", type=int, default=0, help="seed for reference weights or synthetic latency")
    run.add_argument("--synthetic-fast", type=float, default=0.007, help="fast-state mean seconds")
    run.add_argument("--synthetic-slow", type=float, default=0.009, help="slow-state mean seconds")
    run.add_argument("--synthetic-jitter", type=float, default=0.0, help="per-call normal jitter sd, seconds")
    run.add_argument("--synthetic-fast-dwell", type=float, default=0.0,
                     help="mean calls spent in the fast state (0 = never leave)")
    run.add_argument("--synthetic-slow-dwell", type=float, default=0.0,
                     help="mean calls spent in the slow state (0 = never leave)")
    run.add_argument("--synthetic-start", choices=["fast", "slow"], default="fast")
    run.add_argument("--config", help="replay a config.json written by an earlier run")
    run.add_argument("--out-dir", required=True, help="directory for summary.txt, times.csv, plots/")
    run.add_argument("--progress", action=argparse.BooleanOptionalAction, default=None,
                     help="show a progress bar (default: when stdout is a terminal)")

    an = sub.add_parser("analyze", help="statistics and regime detection for a times CSV")
    an.add_argument("csv", help="times.csv from a run")
    an.add_argument("--ratio-threshold", type=float, default=1.15)
    an.add_argument("--min-fraction", type=float, default=0.02)
    an.add_argument("--occupancy-threshold", type=float, default=0.5)
    an.add_argument("--include-warmup", action="store_true", help="keep each directory's first time")
    an.add_argument("--plot-dir", help="also write plot data for the pooled trace here")

    cmp_ = sub.add_parser("compare", help="percentile comparison between two groups of runs")
    cmp_.add_argument("runs_a", nargs="+", metavar="CSV_A")
    cmp_.add_argument("--against", nargs="+", required=True, metavar="CSV_B")
    cmp_.add_argument("--label-a", default="A")
    cmp_.add_argument("--label-b", default="B")
    cmp_.add_argument("--include-warmup", action="store_true")

    gen = sub.add_parser("gen-dataset", help="write a synthetic PPM dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--categories", type=positive_int, default=23)
    gen.add_argument("--per-category", type=positive_int, default=10)
    gen.add_argument("--width", type=positive_int, default=362)
    gen.add_argument("--height", type=positive_int, default=362)
    gen.add_argument("--seed", type=int, default=0)
    return parser


def _descriptor(args) -> BackendDescriptor:
    kind, command = args.backend
    if kind == "reference":
        return BackendDescriptor("reference", {"seed": args.seed})
    if kind == "external":
        return BackendDescriptor("external", {"command": command})
    try:
        return BackendDescriptor("synthetic", {
            "fast_mean": args.synthetic_fast,
            "slow_mean": args.synthetic_slow,
            "jitter_sd": args.synthetic_jitter,
            "fast_dwell_mean": args.synthetic_fast_dwell,
            "slow_dwell_mean": args.synthetic_slow_dwell,
            "start_state": args.synthetic_start,
            "seed": args.seed,
        })
    except ValueError as exc:
        raise UsageError(str(exc), "msbench run") from None


def _require_file(path, prog):
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}", prog)


def cmd_run(args) -> int:
    out = Path(args.out_dir)
    if args.config:
        _require_file(args.config, "msbench run")
        try:
            config = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"unusable config {args.config}: {exc}", "msbench run") from None
    else:
        if not args.dataset:
            raise UsageError("--dataset is required (or --config)", "msbench run")
        config = RunConfig(dataset_root=args.dataset, backend=_descriptor(args), scales=args.scales,
                           window=args.window, stride=args.stride)
    if not Path(config.dataset_root).is_dir():
        raise UsageError(f"dataset root not found: {config.dataset_root}", "msbench run")

    config.summary_path = str(out / "summary.txt")
    config.csv_path = str(out / "times.csv")
    config.plot_dir = str(out / "plots")
    config.progress = sys.stdout.isatty() if args.progress is None else args.progress
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")

    def show(timing):
        print(report.directory_line(timing), flush=True)

    summary = run_benchmark(config, on_directory=show)
    print(report.total_line(summary))
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _analyze_one(name, samples, args) -> list[str]:
    if len(samples) == 0:
        return [f"[{name}] no samples after warmup exclusion"]
    regimes = analysis.detect_regimes(samples, args.ratio_threshold, args.min_fraction)
    cls = analysis.classify_run(regimes, args.occupancy_threshold)
    return [f"[{name}] " + report.format_stat_summary(stats.summarize(samples)),
            f"[{name}] " + report.format_regimes(regimes, cls)]


def cmd_analyze(args) -> int:
    _require_file(args.csv, "msbench analyze")
    rows = report.read_times_csv(args.csv)
    keep = (lambda t: t) if args.include_warmup else (lambda t: t[1:])
    for name, times in rows:
        print("\n".join(_analyze_one(name, keep(times), args)))
    trace = analysis.Trace.from_directories(Path(args.csv).stem, rows, exclude_warmup=not args.include_warmup)
    print("\n".join(_analyze_one("pooled", trace.samples, args)))
    if args.plot_dir and len(trace):
        Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
        regimes = analysis.detect_regimes(trace, args.ratio_threshold, args.min_fraction)
        report.emit_plot_data(trace, args.plot_dir, regimes)
    return EXIT_OK


def _load_traces(paths, include_warmup) -> list:
    traces = []
    for p in paths:
        _require_file(p, "msbench compare")
        trace = analysis.Trace.from_directories(Path(p).stem, report.read_times_csv(p),
                                                exclude_warmup=not include_warmup)
        if not len(trace):
            raise MsbenchError(f"{p} holds no samples to compare")
        traces.append(trace)
    return traces


def cmd_compare(args) -> int:
    a = _load_traces(args.runs_a, args.include_warmup)
    b = _load_traces(args.against, args.include_warmup)
    result = analysis.compare_runs(a, b, labels=(args.label_a, args.label_b))
    print(report.format_comparison(result))
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    spec = SyntheticSpec(args.categories, args.per_category, args.width, args.height)
    manifest = gen_synthetic_dataset(spec, args.seed, args.out)
    print(f"wrote {manifest.total_images} images in {len(manifest.directories)} directories under {args.out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "analyze": cmd_analyze, "compare": cmd_compare, "gen-dataset": cmd_gen_dataset}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{exc.prog}: error: {exc} (see '{exc.prog} --help')", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except (MsbenchError, OSError) as exc:
        print(f"msbench: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
