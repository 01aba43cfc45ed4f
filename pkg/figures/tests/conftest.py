import pytest

from _synth import synthetic_trace, write_trace


@pytest.fixture
def trace():
    return synthetic_trace()


@pytest.fixture
def trace_csv(tmp_path, trace):
    return write_trace(trace, tmp_path / "trace.csv")


@pytest.fixture
def three_csvs(tmp_path):
    return [write_trace(synthetic_trace(seed=k), tmp_path / f"run{k}.csv")
            for k in range(3)]
