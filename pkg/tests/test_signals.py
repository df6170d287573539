import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualiga.signals import Signal, SignalError, read_signal_csv, synthetic_burst, write_signal_csv


def write(tmp_path, text, name="sig.csv"):
    path = tmp_path / name
    path.write_bytes(text.encode("utf-8"))
    return path


def test_read_minimal(tmp_path):
    sig = read_signal_csv(write(tmp_path, "time,accel\n0,0\n1,2\n"))
    np.testing.assert_array_equal(sig.times, [0, 1])
    np.testing.assert_array_equal(sig.accel, [0, 2])


def test_read_crlf(tmp_path):
    sig = read_signal_csv(write(tmp_path, "time,accel\r\n0,0.5\r\n0.02,-1e-3\r\n"))
    np.testing.assert_allclose(sig.accel, [0.5, -1e-3])


@pytest.mark.parametrize("text, match", [
    ("time,accel\n1,2\n0,0\n", "strictly increasing"),
    ("time,accel\n0,0\n0,1\n", "strictly increasing"),
    ("time,accel\n0,0\n1,x\n", ":3: non-numeric"),
    ("time,accel\n0,0\n", "two data rows"),
    ("t,a\n0,0\n1,1\n", "header"),
    ("time,accel\n0,0,1\n1,1\n", "expected 2 columns"),
    ("", "empty"),
])
def test_read_rejections(tmp_path, text, match):
    with pytest.raises(SignalError, match=match):
        read_signal_csv(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_signal_csv(tmp_path / "nope.csv")


def test_signal_validation():
    with pytest.raises(SignalError):
        Signal(np.array([0.0]), np.array([1.0]))
    with pytest.raises(SignalError):
        Signal(np.array([0.0, 1.0]), np.array([1.0, np.inf]))
    with pytest.raises(SignalError):
        Signal(np.array([0.0, 1.0]), np.array([1.0]))


def test_interpolation_and_window():
    sig = Signal(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, -2.0]))
    assert sig(0.25) == pytest.approx(0.5)
    assert sig(1.0) == 2.0
    assert sig(1.5) == pytest.approx(0.0)
    assert sig(-1.0) == 0.0 and sig(3.0) == 0.0
    assert sig.duration == 2.0


@settings(max_examples=25)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=30))
def test_csv_round_trip(tmp_path_factory, accel):
    t = np.arange(len(accel)) * 0.02
    sig = Signal(t, np.array(accel))
    path = tmp_path_factory.mktemp("sig") / "s.csv"
    write_signal_csv(sig, path)
    back = read_signal_csv(path)
    np.testing.assert_array_equal(back.times, sig.times)
    np.testing.assert_array_equal(back.accel, sig.accel)


def test_synthetic_burst_shape():
    sig = synthetic_burst()
    assert sig.duration == pytest.approx(50.0)
    assert np.diff(sig.times) == pytest.approx(0.02)
    assert np.abs(sig.accel).max() == pytest.approx(4.0)
    peak_t = sig.times[np.argmax(np.abs(sig.accel))]
    assert 1.0 < peak_t < 10.0
    assert np.abs(sig.accel[sig.times > 40]).max() < 1e-3
    again = synthetic_burst()
    np.testing.assert_array_equal(sig.accel, again.accel)
    assert not np.array_equal(synthetic_burst(seed=7).accel, sig.accel)
