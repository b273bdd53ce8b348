"""Benchmark harness: schema stability and basic sanity of the numbers."""

import csv
import io

from mpiwasm import abi, bench


def test_headers_are_frozen():
    # downstream tooling parses these columns; changing them is a break
    assert bench.BENCH_HEADER == [
        "suite", "msg_bytes", "ranks", "iter", "usec_avg", "usec_min", "usec_max",
    ]
    assert bench.PROBE_HEADER == [
        "probe", "datatype", "msg_bytes", "count", "median_ns", "p99_ns",
    ]


def test_pingpong_rows():
    rows = list(bench.run_bench("pingpong", [16, 64], iters=5, ranks=2))
    assert len(rows) == 2
    for row, size in zip(rows, (16, 64)):
        suite, msg_bytes, ranks, iters, avg, lo, hi = row
        assert (suite, msg_bytes, ranks, iters) == ("pingpong", size, 2, 5)
        assert 0 < float(lo) <= float(avg) <= float(hi)


def test_every_suite_produces_rows():
    for suite in bench.SUITES:
        [row] = list(bench.run_bench(suite, [32], iters=3, ranks=4))
        assert row[0] == suite and row[3] == 3


def test_translation_probe_rows():
    rows = list(bench.run_translation_probe([abi.MPI_INT, abi.MPI_DOUBLE], [8], iters=200))
    assert [r[1] for r in rows] == ["MPI_INT", "MPI_DOUBLE"]
    for row in rows:
        probe, _name, msg_bytes, count, median, p99 = row
        assert probe == "translation" and msg_bytes == 8 and count == 200
        assert 0 <= float(median) <= float(p99)


def test_main_writes_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert bench.main(["--suite", "pingpong", "--sizes", "8", "--iters", "3",
                       "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == bench.BENCH_HEADER
    assert len(rows) == 2 and rows[1][0] == "pingpong"


def test_main_probe_to_stdout(capsys):
    assert bench.main(["--probe", "--sizes", "8", "--iters", "50"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == bench.PROBE_HEADER
    # one row per datatype at the single size
    assert len(rows) == 1 + len(abi.DATATYPE_NAMES)


def test_unknown_suite_rejected(capsys):
    try:
        bench.main(["--suite", "warpdrive"])
    except SystemExit as exc:
        assert exc.code == 2
    else:
        raise AssertionError("expected usage error")
