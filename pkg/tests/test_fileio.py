import numpy as np
import pytest

from slowlight.errors import DataFormatError
from slowlight.fileio import (
    read_events,
    read_observations,
    read_trace,
    write_envelope,
    write_events,
    write_histogram,
    write_table,
)
from slowlight.source import PulseSequenceConfig, simulate
from slowlight.wavepacket import ArrivalHistogram, TemporalEnvelope


def test_envelope_round_trip(tmp_path):
    env = TemporalEnvelope(np.array([0.0, 0.25, 1.0, 0.5]), 1e-10, 2e-9)
    path = tmp_path / "e.csv"
    write_envelope(path, env)
    back = read_trace(path)
    assert isinstance(back, TemporalEnvelope)
    assert back.dt == env.dt and back.t_start == env.t_start
    assert np.array_equal(back.samples, env.samples)
    assert path.read_text().splitlines()[4] == "time_s,value"


def test_histogram_round_trip(tmp_path):
    h = ArrivalHistogram(np.array([0, 3, 9, 2]), 512e-12, 0.0)
    path = tmp_path / "h.csv"
    write_histogram(path, h)
    back = read_trace(path)
    assert isinstance(back, ArrivalHistogram)
    assert back.bin_width == 512e-12 and np.array_equal(back.counts, h.counts)
    assert "# bin_width_s=5.12e-10" in path.read_text()


def test_events_round_trip(tmp_path):
    ev = simulate(PulseSequenceConfig(cycles_per_block=200), 2, seed=3)
    path = tmp_path / "ev.csv"
    write_events(path, ev)
    back = read_events(path)
    assert back.n_cycles == 400
    for f in ("cycle", "time", "kind", "detected"):
        assert np.array_equal(getattr(back, f), getattr(ev, f))


def test_observations(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("# comment\ntemperature_K,delay_ns\n296,0\n395,13.5\n")
    assert read_observations(p) == [(296.0, 0.0), (395.0, 13.5e-9)]


@pytest.mark.parametrize("body,line", [
    ("temperature_K,delay\n296,0\n", 1),
    ("temperature_K,delay_ns\n296,0\n395,abc\n", 3),
    ("# x\ntemperature_K,delay_ns\n296\n", 3),
])
def test_format_errors_report_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataFormatError) as exc:
        read_observations(p)
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)


def test_histogram_missing_metadata(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("# kind=histogram\ntime_s,value\n0,1\n")
    with pytest.raises(DataFormatError):
        read_trace(p)


def test_failed_write_leaves_nothing(tmp_path):
    def rows():
        yield (1.0, 2.0)
        raise RuntimeError("boom")

    target = tmp_path / "out.csv"
    with pytest.raises(RuntimeError):
        write_table(target, ["a", "b"], rows())
    assert list(tmp_path.iterdir()) == []
