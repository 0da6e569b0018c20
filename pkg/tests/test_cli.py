import json
import subprocess
import sys

import pytest

from tracescope.cli import main

from conftest import THREE_INTERVAL_TRACE, write_trace_text

WARN_TRACE = """\
L 0 0 0
E 0 0 1 9 run
E 5 0 2 1 loop
"""

SPARSE_COUNTER_TRACE = """\
L 0 0 0
E 0 0 1 - run
C 4 0 w 0
C 8 0 w 40
X 10 0 1
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestBundle:
    def test_bundle_and_reuse(self, tmp_path, capsys):
        trace = write_trace_text(tmp_path, THREE_INTERVAL_TRACE)
        data = str(tmp_path / "data")
        code, out, _ = run_cli(capsys, "bundle", str(trace), "--label", "three", "--data-dir", data)
        assert code == 0
        assert out.startswith("dataset ")
        ds_id = out.split()[1]
        assert len(ds_id) == 16
        code, out, _ = run_cli(capsys, "bundle", str(trace), "--label", "x", "--data-dir", data)
        assert code == 0
        assert "(reused existing bundle)" in out

    def test_warning_summary(self, tmp_path, capsys):
        trace = write_trace_text(tmp_path, WARN_TRACE)
        code, out, _ = run_cli(
            capsys, "bundle", str(trace), "--label", "warn", "--data-dir", str(tmp_path / "d")
        )
        assert code == 0
        # guid 1 is truncated at trace end; guid 2 enters exactly at the
        # end and is dropped, so two unmatched-enter warnings.
        assert "warning UNMATCHED_ENTER x2" in out
        assert "warning UNRESOLVED_PARENT x1" in out

    def test_missing_file_exit_3(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "bundle", str(tmp_path / "absent.trace"), "--label", "x",
            "--data-dir", str(tmp_path / "d"),
        )
        assert code == 3
        assert "error:" in err

    def test_malformed_trace_exit_2_with_lines(self, tmp_path, capsys):
        bad = "L 0 0 0\n" + "\n".join(f"E nope {i}" for i in range(15)) + "\n"
        trace = write_trace_text(tmp_path, bad, name="bad.trace")
        code, _, err = run_cli(
            capsys, "bundle", str(trace), "--label", "x", "--data-dir", str(tmp_path / "d")
        )
        assert code == 2
        assert "error:" in err
        assert err.count("  line ") == 10

    def test_bad_label_exit_2(self, tmp_path, capsys):
        trace = write_trace_text(tmp_path, THREE_INTERVAL_TRACE)
        code, _, err = run_cli(
            capsys, "bundle", str(trace), "--label", " ", "--data-dir", str(tmp_path / "d")
        )
        assert code == 2


class TestUsage:
    def test_no_command(self, capsys):
        assert run_cli(capsys, *[])[0] == 1

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 1

    def test_missing_required_flag(self, tmp_path, capsys):
        trace = write_trace_text(tmp_path, THREE_INTERVAL_TRACE)
        assert run_cli(capsys, "bundle", str(trace))[0] == 1

    def test_bad_export_kind(self, capsys):
        code, _, _ = run_cli(capsys, "export", "x" * 16, "pie", "--out", "o.csv")
        assert code == 1


@pytest.fixture
def bundled(tmp_path, capsys):
    trace = write_trace_text(tmp_path, THREE_INTERVAL_TRACE)
    data = str(tmp_path / "data")
    code, out, _ = run_cli(capsys, "bundle", str(trace), "--label", "three", "--data-dir", data)
    assert code == 0
    return data, out.split()[1]


class TestStats:
    def test_output(self, bundled, capsys):
        data, ds_id = bundled
        code, out, _ = run_cli(capsys, "stats", ds_id, "--data-dir", data)
        assert code == 0
        lines = out.splitlines()
        assert f"dataset {ds_id}" in lines
        assert "label three" in lines
        assert "intervals 3" in lines
        assert "locations 2" in lines
        assert "span 100 ticks" in lines
        assert "top contexts by subtree duration:" in lines
        run_line = next(l for l in lines if l.strip().endswith(" run"))
        assert "170" in run_line
        loop_line = next(l for l in lines if l.strip().endswith("run/loop"))
        assert "x2" in loop_line
        assert "durations min 30 median 40.0 p99 98.8 max 100" in lines

    def test_unknown_dataset_exit_2(self, bundled, capsys):
        data, _ = bundled
        code, _, err = run_cli(capsys, "stats", "0" * 16, "--data-dir", data)
        assert code == 2
        assert "error:" in err


class TestExport:
    def test_utilization_csv(self, bundled, tmp_path, capsys):
        data, ds_id = bundled
        out_path = tmp_path / "u.csv"
        code, out, _ = run_cli(
            capsys, "export", ds_id, "utilization",
            "--t0", "0", "--t1", "100", "--width", "10",
            "--out", str(out_path), "--data-dir", data,
        )
        assert code == 0
        assert "10 rows" in out
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "pixel,t_start,t_end,value"
        assert lines[1] == "0,0,10,1.0"
        assert lines[3] == "2,20,30,3.0"
        assert len(lines) == 11

    def test_default_range_is_full_span(self, bundled, tmp_path, capsys):
        data, ds_id = bundled
        out_path = tmp_path / "u.csv"
        code, _, _ = run_cli(
            capsys, "export", ds_id, "utilization", "--width", "4",
            "--out", str(out_path), "--data-dir", data,
        )
        assert code == 0
        last = out_path.read_text().strip().splitlines()[-1]
        assert last.split(",")[2] == "100"

    def test_histogram_csv(self, bundled, tmp_path, capsys):
        data, ds_id = bundled
        out_path = tmp_path / "h.csv"
        code, _, _ = run_cli(
            capsys, "export", ds_id, "histogram", "--bins", "2",
            "--out", str(out_path), "--data-dir", data,
        )
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "bin,edge_lo,edge_hi,count"
        assert lines[1] == "0,30.0,65.0,2"
        assert lines[2] == "1,65.0,100.0,1"

    def test_boxplot_csv_blank_for_uncovered(self, tmp_path, capsys):
        trace = write_trace_text(tmp_path, SPARSE_COUNTER_TRACE, name="c.trace")
        data = str(tmp_path / "data")
        code, out, _ = run_cli(capsys, "bundle", str(trace), "--label", "c", "--data-dir", data)
        ds_id = out.split()[1]
        out_path = tmp_path / "b.csv"
        code, _, _ = run_cli(
            capsys, "export", ds_id, "boxplot", "--counter", "w",
            "--t0", "0", "--t1", "10", "--width", "5",
            "--out", str(out_path), "--data-dir", data,
        )
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "pixel,t_start,t_end,min,max,mean,stddev"
        assert lines[1] == "0,0,2,,,,"
        assert lines[3] == "2,4,6,10.0,10.0,10.0,0.0"
        assert lines[5] == "4,8,10,,,,"

    def test_boxplot_requires_counter(self, bundled, tmp_path, capsys):
        data, ds_id = bundled
        code, _, err = run_cli(
            capsys, "export", ds_id, "boxplot",
            "--out", str(tmp_path / "b.csv"), "--data-dir", data,
        )
        assert code == 2
        assert "--counter" in err


class TestGen:
    def test_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.trace", tmp_path / "b.trace"
        code, out, _ = run_cli(capsys, "gen", str(a), "--seed", "5", "--intervals", "50")
        assert code == 0
        assert "50 intervals" in out
        run_cli(capsys, "gen", str(b), "--seed", "5", "--intervals", "50")
        assert a.read_bytes() == b.read_bytes()
        run_cli(capsys, "gen", str(b), "--seed", "6", "--intervals", "50")
        assert a.read_bytes() != b.read_bytes()

    def test_truth_json(self, tmp_path, capsys):
        trace = tmp_path / "g.trace"
        truth_path = tmp_path / "truth.json"
        code, _, _ = run_cli(
            capsys, "gen", str(trace), "--seed", "3", "--intervals", "40",
            "--locations", "2", "--counter", "flux:2.5", "--truth", str(truth_path),
        )
        assert code == 0
        truth = json.loads(truth_path.read_text())
        assert truth["interval_count"] == 40
        assert truth["location_count"] == 2
        assert truth["counters"] == {"flux": 2.5}
        assert len(truth["busy_per_location"]) == 2
        assert len(truth["durations"]) == 40

    def test_bad_counter_spec(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "gen", str(tmp_path / "g.trace"), "--counter", "noseparator"
        )
        assert code == 2
        assert "NAME:COEFF" in err

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "m.trace"
        proc = subprocess.run(
            [sys.executable, "-m", "tracescope.cli", "gen", str(out), "--seed", "2",
             "--intervals", "10", "--locations", "2"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert out.exists()
