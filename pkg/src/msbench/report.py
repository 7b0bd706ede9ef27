"""Run result serialization: text summary, per-directory times CSV, plot data.

Every time is written as fixed-point seconds with 9 decimals. The times CSV
has no header; each row is ``<directory>,<t0>,<t1>,...`` in capture order,
including the warmup time that the averages leave out.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from . import stats
from .analysis import RegimeAnalysis, Trace, trace_from_summary
from .errors import CsvParseError, ReportError

if TYPE_CHECKING:
    from .analysis import ComparisonReport
    from .harness import DirectoryTiming, RunSummary


def fmt_seconds(value) -> str:
    return f"{value:.9f}"


def _fmt_optional(value) -> str:
    return "n/a" if value is None else f"{fmt_seconds(value)}s"


def directory_line(timing: "DirectoryTiming") -> str:
    return (f"{timing.directory_name}: total={fmt_seconds(timing.wall_seconds)}s "
            f"avg_model={_fmt_optional(timing.avg_model_seconds)} n={len(timing.records)}")


def total_line(summary: "RunSummary") -> str:
    n = sum(len(d.records) for d in summary.directories)
    return f"TOTAL: avg_model={_fmt_optional(summary.global_avg_model_seconds)} n={n}"


def summary_lines(summary: "RunSummary") -> list[str]:
    return [directory_line(d) for d in summary.directories] + [total_line(summary)]


def _write_text(path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from None


def write_summary_text(summary: "RunSummary", path) -> Path:
    _write_text(path, "\n".join(summary_lines(summary)) + "\n")
    return Path(path)


def write_times_csv(summary: "RunSummary", path) -> Path:
    if not summary.directories:
        raise ReportError("nothing to write: run summary has no directories")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for d in summary.directories:
        writer.writerow([d.directory_name, *(fmt_seconds(t) for t in d.times)])
    _write_text(path, buf.getvalue())
    return Path(path)


def read_times_csv(path) -> list[tuple[str, list[float]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    if not text.strip():
        raise CsvParseError(path, 1, 1, "empty file")
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not rows[-1]:
        rows.pop()
    out = []
    for r, row in enumerate(rows, start=1):
        if not row or not row[0]:
            raise CsvParseError(path, r, 1, "missing directory name")
        times = []
        for c, field in enumerate(row[1:], start=2):
            try:
                value = float(field)
            except ValueError:
                raise CsvParseError(path, r, c, f"not a number: {field!r}") from None
            if not math.isfinite(value) or value < 0:
                raise CsvParseError(path, r, c, f"time must be finite and non-negative: {field!r}")
            times.append(value)
        out.append((row[0], times))
    return out


def sturges_bins(n: int) -> int:
    return math.ceil(math.log2(n)) + 1 if n > 1 else 1


def emit_plot_data(data, plot_dir, regimes: RegimeAnalysis | None = None) -> dict:
    """Write ``temporal.csv``, ``histogram.csv`` and ``percentiles.csv``.

    ``data`` is a :class:`Trace` or a run summary (converted with warmup
    times excluded). With ``regimes``, the temporal file gains a regime
    label column.
    """
    trace = data if isinstance(data, Trace) else trace_from_summary(data)
    x = trace.samples
    if x.size == 0:
        raise ReportError("nothing to plot: trace is empty")
    plot_dir = Path(plot_dir)

    temporal = io.StringIO()
    w = csv.writer(temporal, lineterminator="\n")
    if regimes is None:
        w.writerow(["ordinal", "seconds"])
        w.writerows((i, fmt_seconds(v)) for i, v in enumerate(x))
    else:
        w.writerow(["ordinal", "seconds", "regime"])
        w.writerows((i, fmt_seconds(v), lab) for i, (v, lab) in enumerate(zip(x, regimes.labels)))

    counts, edges = np.histogram(x, bins=sturges_bins(x.size))
    hist = io.StringIO()
    w = csv.writer(hist, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count"])
    w.writerows((fmt_seconds(edges[i]), fmt_seconds(edges[i + 1]), int(c)) for i, c in enumerate(counts))

    grid = range(1, 100)
    pct = io.StringIO()
    w = csv.writer(pct, lineterminator="\n")
    w.writerow(["p", "seconds"])
    w.writerows((p, fmt_seconds(v)) for p, v in zip(grid, stats.percentiles(x, grid)))

    paths = {}
    for name, buf in (("temporal", temporal), ("histogram", hist), ("percentiles", pct)):
        paths[name] = plot_dir / f"{name}.csv"
        _write_text(paths[name], buf.getvalue())
    return paths


# -- console renderings ---------------------------------------------------------

def format_stat_summary(s: stats.StatSummary) -> str:
    return (f"n={s.n} mean={fmt_seconds(s.mean)} median={fmt_seconds(s.median)} "
            f"p5={fmt_seconds(s.p5)} p95={fmt_seconds(s.p95)} min={fmt_seconds(s.min)} "
            f"max={fmt_seconds(s.max)} stddev={fmt_seconds(s.stddev)}")


def format_regimes(r: RegimeAnalysis, classification: str) -> str:
    if not r.bimodal:
        return f"regimes: unimodal mean={fmt_seconds(r.fast_mean)} class={classification}"
    return (f"regimes: bimodal fast={fmt_seconds(r.fast_mean)} slow={fmt_seconds(r.slow_mean)} "
            f"ratio={r.separation_ratio:.3f} slow_occupancy={r.slow_occupancy:.3f} class={classification}")


def format_comparison(report: "ComparisonReport", show=(1, 5, 25, 50, 75, 90, 95, 99)) -> str:
    a, b = report.labels
    lines = [f"comparison: {a} vs {b}"]
    for name, (leader, va, vb) in report.headline.items():
        lines.append(f"  {name:>6}: {a}={fmt_seconds(va)} {b}={fmt_seconds(vb)} leader={leader}")
    grid = list(report.percentile_grid)
    for p in show:
        if p in grid:
            i = grid.index(p)
            lines.append(f"  p{p:<5}: {a}={fmt_seconds(report.curves[a][i])} "
                         f"{b}={fmt_seconds(report.curves[b][i])} diff={report.differences[i]:+.9f}")
    cross = ", ".join(str(p) for p in report.crossover_percentiles) or "none"
    lines.append(f"  crossovers: {cross}")
    return "\n".join(lines)
