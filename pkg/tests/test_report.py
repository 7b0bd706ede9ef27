import csv
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_records
from msbench import stats
from msbench.analysis import Trace, detect_regimes
from msbench.errors import CsvParseError, ReportError
from msbench.harness import DirectoryTiming, RunSummary, directory_summary, summarize_run
from msbench.report import (
    directory_line,
    emit_plot_data,
    fmt_seconds,
    read_times_csv,
    sturges_bins,
    summary_lines,
    total_line,
    write_summary_text,
    write_times_csv,
)


def timing(name, times, wall):
    return directory_summary(make_records(times, name), wall, name=name)


class TestSummaryText:
    def test_directory_lines(self):
        assert directory_line(timing("brick", [0.02, 0.007, 0.007], 1.5)) == \
            "brick: total=1.500000000s avg_model=0.007000000s n=3"
        assert directory_line(timing("wood", [0.3], 0.4)) == "wood: total=0.400000000s avg_model=n/a n=1"

    def test_total_line_pools_samples(self):
        summary = summarize_run([timing("a", [5, 1, 1], 7.0), timing("b", [9], 9.0)])
        assert total_line(summary) == "TOTAL: avg_model=1.000000000s n=4"

    def test_total_without_samples(self):
        summary = summarize_run([timing("a", [5], 5.0)])
        assert total_line(summary) == "TOTAL: avg_model=n/a n=1"

    def test_file(self, tmp_path):
        summary = summarize_run([timing("a", [5, 1, 1], 7.0), timing("b", [9, 2], 11.0)])
        path = write_summary_text(summary, tmp_path / "s.txt")
        text = path.read_bytes().decode()
        assert text.endswith("\n") and "\r" not in text
        assert text.splitlines() == summary_lines(summary)
        assert len(text.splitlines()) == 3

    def test_unwritable(self, tmp_path):
        summary = summarize_run([timing("a", [5, 1], 7.0)])
        with pytest.raises(ReportError):
            write_summary_text(summary, tmp_path / "missing" / "s.txt")


class TestTimesCsv:
    def test_row_format(self, tmp_path):
        summary = summarize_run([timing("brick", [0.0101, 0.007], 1.0), timing("wood", [], 0.0)])
        path = write_times_csv(summary, tmp_path / "t.csv")
        assert path.read_bytes() == b"brick,0.010100000,0.007000000\nwood\n"
        assert read_times_csv(path) == [("brick", [0.0101, 0.007]), ("wood", [])]

    def test_names_needing_quotes(self, tmp_path):
        summary = summarize_run([timing('odd, "name"', [0.5, 0.25], 1.0)])
        path = write_times_csv(summary, tmp_path / "t.csv")
        assert read_times_csv(path) == [('odd, "name"', [0.5, 0.25])]

    def test_nothing_to_write(self, tmp_path):
        with pytest.raises(ReportError, match="nothing to write"):
            write_times_csv(RunSummary((), None, 0), tmp_path / "t.csv")

    @pytest.mark.parametrize("body,row,col", [
        (b"brick,0.007,0.00x7\n", 1, 3),
        (b"brick,0.007\nwood,-0.001\n", 2, 2),
        (b"brick,0.007\n,0.001\n", 2, 1),
        (b"brick,nan\n", 1, 2),
        (b"", 1, 1),
        (b"\n\n", 1, 1),
    ])
    def test_parse_errors_locate_the_field(self, tmp_path, body, row, col):
        path = tmp_path / "bad.csv"
        path.write_bytes(body)
        with pytest.raises(CsvParseError) as info:
            read_times_csv(path)
        assert (info.value.row, info.value.column) == (row, col)
        assert f"row {row}" in str(info.value)

    def test_trailing_blank_lines_and_crlf(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_bytes(b"a,1.5,2\r\nb,3\r\n\r\n")
        assert read_times_csv(path) == [("a", [1.5, 2.0]), ("b", [3.0])]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ReportError):
            read_times_csv(tmp_path / "absent.csv")

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.floats(0, 10, allow_nan=False), max_size=8), min_size=1, max_size=6))
    def test_round_trip_within_format_precision(self, tmp_path_factory, dir_times):
        dirs = [timing(f"c{i}", t, 1.0) for i, t in enumerate(dir_times)]
        path = write_times_csv(summarize_run(dirs), tmp_path_factory.mktemp("rt") / "t.csv")
        back = read_times_csv(path)
        assert [name for name, _ in back] == [d.directory_name for d in dirs]
        for (_, got), want in zip(back, dir_times):
            assert got == pytest.approx(want, abs=5e-10)

    def test_total_recomputed_from_csv(self, tmp_path):
        gen = random.Random(5)
        dirs = [timing(f"c{i}", [gen.uniform(0.005, 0.02) for _ in range(gen.randint(1, 9))], 1.0)
                for i in range(7)]
        summary = summarize_run(dirs)
        rows = read_times_csv(write_times_csv(summary, tmp_path / "t.csv"))
        kept = [t for _, times in rows for t in times[1:]]
        assert sum(kept) / len(kept) == pytest.approx(summary.global_avg_model_seconds, abs=1e-9)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestPlotData:
    def test_sturges(self):
        assert [sturges_bins(n) for n in (1, 2, 3, 8, 9, 1000)] == [1, 2, 3, 4, 5, 11]

    def test_cardinalities(self, tmp_path, rng):
        x = rng.random(100)
        paths = emit_plot_data(Trace("r", x), tmp_path)
        assert set(paths) == {"temporal", "histogram", "percentiles"}
        temporal = read_rows(paths["temporal"])
        assert temporal[0] == ["ordinal", "seconds"] and len(temporal) == 101
        hist = read_rows(paths["histogram"])
        assert len(hist) - 1 == sturges_bins(100)
        assert sum(int(r[2]) for r in hist[1:]) == 100
        pct = read_rows(paths["percentiles"])
        assert [int(r[0]) for r in pct[1:]] == list(range(1, 100))

    def test_percentile_rows_match_stats(self, tmp_path, rng):
        x = rng.random(57)
        rows = read_rows(emit_plot_data(Trace("r", x), tmp_path)["percentiles"])
        by_p = {int(p): v for p, v in rows[1:]}
        assert by_p[50] == fmt_seconds(stats.percentile(x, 50))
        assert by_p[90] == fmt_seconds(stats.percentile(x, 90))

    def test_constant_trace_single_bin(self, tmp_path):
        rows = read_rows(emit_plot_data(Trace("r", [0.007] * 30), tmp_path)["histogram"])
        counts = [int(r[2]) for r in rows[1:]]
        assert sorted(counts)[-1] == 30 and sum(counts) == 30

    def test_regime_column(self, tmp_path, rng):
        x = np.where(rng.random(200) < 0.5, 0.007, 0.009)
        regimes = detect_regimes(x)
        rows = read_rows(emit_plot_data(Trace("r", x), tmp_path, regimes)["temporal"])
        assert rows[0] == ["ordinal", "seconds", "regime"]
        assert [r[2] for r in rows[1:]] == regimes.labels

    def test_from_summary_excludes_warmup(self, tmp_path):
        summary = summarize_run([timing("a", [9, 1, 2], 12.0), timing("b", [9, 3], 12.0)])
        rows = read_rows(emit_plot_data(summary, tmp_path)["temporal"])
        assert [float(r[1]) for r in rows[1:]] == [1, 2, 3]

    def test_deterministic_bytes(self, tmp_path, rng):
        x = rng.random(80)
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        a = emit_plot_data(Trace("r", x), tmp_path / "a")
        b = emit_plot_data(Trace("r", x), tmp_path / "b")
        for name in a:
            assert a[name].read_bytes() == b[name].read_bytes()

    def test_empty_trace(self, tmp_path):
        with pytest.raises(ReportError, match="nothing to plot"):
            emit_plot_data(Trace("r", []), tmp_path)


def test_directory_timing_defaults():
    d = DirectoryTiming("x", (), 0.0, None)
    assert directory_line(d) == "x: total=0.000000000s avg_model=n/a n=0"
