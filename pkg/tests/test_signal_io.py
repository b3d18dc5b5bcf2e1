import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.io import wavfile

from phadq.signal_io import Signal, load_wav, peak_normalize, save_wav, truncate

finite = arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e3, 1e3))


def test_int16_full_scale(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 8000, np.array([-32768, 0, 16384], dtype=np.int16))
    s = load_wav(path)
    np.testing.assert_array_equal(s.samples, [-1.0, 0.0, 0.5])
    assert s.sample_rate == 8000


def test_stereo_keeps_first_channel(tmp_path):
    path = tmp_path / "st.wav"
    data = np.array([[0.5, -0.25], [0.125, 0.75]], dtype=np.float32)
    wavfile.write(path, 44100, data)
    np.testing.assert_array_equal(load_wav(path).samples, [0.5, 0.125])


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "e.wav"
    wavfile.write(path, 44100, np.zeros(0, dtype=np.int16))
    with pytest.raises(ValueError, match="empty signal"):
        load_wav(path)


def test_unreadable(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav file")
    with pytest.raises(ValueError):
        load_wav(bad)
    with pytest.raises(FileNotFoundError):
        load_wav(tmp_path / "missing.wav")


def test_unsupported_format(tmp_path):
    path = tmp_path / "u8.wav"
    wavfile.write(path, 8000, np.array([0, 128, 255], dtype=np.uint8))
    with pytest.raises(ValueError, match="unsupported"):
        load_wav(path)


def test_float64_roundtrip_bit_exact(tmp_path, rng):
    s = Signal(np.clip(rng.standard_normal(1000) * 0.3, -1, 1), 44100)
    save_wav(s, tmp_path / "x.wav", "f64")
    np.testing.assert_array_equal(load_wav(tmp_path / "x.wav").samples, s.samples)


def test_float32_roundtrip(tmp_path, rng):
    x = rng.uniform(-1, 1, 1000).astype(np.float32).astype(np.float64)
    save_wav(Signal(x, 44100), tmp_path / "x.wav", "f32")
    np.testing.assert_array_equal(load_wav(tmp_path / "x.wav").samples, x)


@pytest.mark.parametrize("depth,bits", [("16", 16), ("24", 24), ("32", 32)])
def test_pcm_roundtrip_within_half_lsb(tmp_path, rng, depth, bits):
    x = rng.uniform(-1, 0.999, 2000)
    save_wav(Signal(x, 22050), tmp_path / "x.wav", depth)
    y = load_wav(tmp_path / "x.wav")
    assert y.sample_rate == 22050
    assert np.max(np.abs(y.samples - x)) <= 2.0 ** -(bits - 1) / 2 + 1e-15
    assert np.max(np.abs(y.samples - x)) <= 2.0**-15


def test_clip_on_save(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        save_wav(Signal(np.array([1.2, -0.5]), 8000), tmp_path / "c.wav")
    assert "clipping" in caplog.text
    np.testing.assert_array_equal(load_wav(tmp_path / "c.wav").samples, [1.0, -0.5])


def test_bad_depth(tmp_path):
    with pytest.raises(ValueError):
        save_wav(Signal(np.zeros(3), 8000), tmp_path / "x.wav", "12")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        save_wav(Signal(np.zeros(3), 8000), tmp_path / "no" / "such" / "dir.wav")


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal(np.zeros(0), 8000)
    with pytest.raises(ValueError):
        Signal(np.array([np.nan]), 8000)
    with pytest.raises(ValueError):
        Signal(np.zeros((2, 2)), 8000)


def test_peak_normalize_examples():
    s, gain = peak_normalize(Signal(np.array([0.5, -0.25]), 1))
    np.testing.assert_array_equal(s.samples, [1.0, -0.5])
    assert gain == 2.0
    z, gain = peak_normalize(Signal(np.zeros(3), 1))
    np.testing.assert_array_equal(z.samples, np.zeros(3))
    assert gain == 1.0


@given(finite)
def test_peak_normalize_unit_peak_and_idempotent(x):
    s, _ = peak_normalize(Signal(x, 8000))
    if np.any(x):
        assert np.max(np.abs(s.samples)) == 1.0
    again, gain = peak_normalize(s)
    np.testing.assert_array_equal(again.samples, s.samples)


def test_truncate_examples():
    long = Signal(np.zeros(10 * 44100), 44100)
    assert len(truncate(long, 7)) == 308700
    short = Signal(np.zeros(3 * 44100), 44100)
    assert truncate(short, 7) is short
    with pytest.raises(ValueError):
        truncate(long, 0)


@given(st.integers(1, 500), st.floats(0.01, 2.0))
def test_truncate_idempotent(n, secs):
    s = Signal(np.arange(n, dtype=float), 100)
    once = truncate(s, secs)
    np.testing.assert_array_equal(truncate(once, secs).samples, once.samples)
