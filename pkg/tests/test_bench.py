import pytest

from netlint.bench import BenchRow, bench, doubling_ratios, rows_to_csv


def test_single_size_single_row_no_ratio():
    rows = bench([300], k=3, detectors=["spatialjoin"], reps=5)
    assert len(rows) == 1
    assert rows[0].detector == "spatialjoin" and rows[0].n == 300 and rows[0].reps == 5
    assert doubling_ratios(rows, "spatialjoin") == []


def test_ratios_and_csv():
    rows = [BenchRow("exhaustive", 1000, 5, 2.0, 5), BenchRow("exhaustive", 2000, 5, 8.0, 5), BenchRow("exhaustive", 4000, 5, 30.0, 5)]
    assert doubling_ratios(rows, "exhaustive") == [4.0, 3.75]
    assert rows_to_csv(rows).splitlines() == [
        "detector,n,k,median_ms,reps",
        "exhaustive,1000,5,2.0,5",
        "exhaustive,2000,5,8.0,5",
        "exhaustive,4000,5,30.0,5",
    ]


def test_unknown_detector():
    with pytest.raises(ValueError):
        bench([100], k=2, detectors=["quantum"])
