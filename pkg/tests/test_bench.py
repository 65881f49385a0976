import pytest

from heaanmul import make_params
from heaanmul.bench import DEFAULT_REPS, REPORT_ROWS, BenchReport, run_bench
from heaanmul.polymul import KernelConfig
from heaanmul.rns import AccumStrategy


@pytest.fixture(scope="module")
def report(small_params):
    return run_bench(small_params, reps=3, threads=1)


def test_rows_and_invariants(report):
    assert tuple(report.times) == REPORT_ROWS
    assert sum(report.times[r] for r in REPORT_ROWS[:-1]) <= report.times["Total"] * 1.001
    assert 0 < report.kernel_share() <= 1
    assert report.reps == 3 and report.threads == 1
    assert DEFAULT_REPS == 32


def test_csv_roundtrip(report):
    text = report.to_csv()
    assert text.splitlines()[0] == "function,time_ms,speedup_vs_baseline"
    back = BenchReport.from_csv(text)
    for r in REPORT_ROWS:
        assert back.times[r] == pytest.approx(report.times[r], rel=1e-12)
    assert back.baseline is None


def test_speedup_column(report):
    slow = {k: 2 * v for k, v in report.times.items()}
    rep = BenchReport(report.times, baseline=slow)
    assert rep.speedup("Total") == pytest.approx(2.0)
    back = BenchReport.from_csv(rep.to_csv())
    assert back.speedup("CRT") == pytest.approx(2.0)


def test_table_and_json(report):
    assert "Total" in report.to_table()
    assert '"kernel_share"' in report.to_json()


def test_bad_inputs(small_params):
    with pytest.raises(ValueError):
        run_bench(small_params, reps=0)
    with pytest.raises(ValueError):
        BenchReport({r: 1.0 for r in REPORT_ROWS}, reps=0)
    tiny = make_params(30, 2, 64, N=16, check_security=False)
    with pytest.raises(ValueError, match="radix"):
        run_bench(tiny, KernelConfig(radix=32), reps=1)
    with pytest.raises(ValueError):
        BenchReport.from_csv("function,time_ms,speedup_vs_baseline\nCRT,1,1\n")


@pytest.mark.parametrize("cfg", [
    KernelConfig(radix=16),
    KernelConfig(radix=4, lazy=True),
    KernelConfig(icrt="naive"),
    KernelConfig(approx=True),
    KernelConfig(crt_strategy=AccumStrategy.parse("periodic_mod")),
])
def test_output_independent_of_configuration(small_params, cfg):
    _, ref = run_bench(small_params, reps=1, return_output=True)
    _, out = run_bench(small_params, cfg, reps=1, return_output=True)
    assert out == ref


def test_output_independent_of_threads(small_params):
    _, a = run_bench(small_params, reps=1, threads=1, return_output=True)
    _, b = run_bench(small_params, reps=1, threads=4, return_output=True)
    assert a == b
