import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phadq.gabor import (
    GaborFrame,
    GaborParams,
    dgt,
    dgt_adjoint,
    dump_magnitudes_csv,
    frame_bounds,
    make_hann,
    make_hann_derivative,
    operator_norm,
    pad_signal,
)


def brute_dgt(x, win, hop, M, phase="freqinv"):
    """Direct evaluation of sum_l x[l] g[l - n a] exp(-2 pi i m l / M)."""
    L = len(x)
    W = len(win)
    N = L // hop
    c = np.zeros((M, N), dtype=complex)
    for n in range(N):
        for k in range(W):
            l = (n * hop + k) % L
            t = l if phase == "freqinv" else k
            for m in range(M):
                c[m, n] += x[l] * win[k] * np.exp(-2j * np.pi * m * t / M)
    return c


def test_hann_closed_form():
    np.testing.assert_allclose(make_hann(4).samples, [0.0, 0.5, 1.0, 0.5], atol=1e-15)


@pytest.mark.parametrize("n", [3, 1, 0, 7])
def test_hann_rejects_odd_or_tiny(n):
    with pytest.raises(ValueError):
        make_hann(n)
    with pytest.raises(ValueError):
        make_hann_derivative(n)


@pytest.mark.parametrize("win_len,M", [(64, 128), (512, 1024), (8192, 16384)])
def test_tight_overlap_sum_is_one(win_len, M):
    hop = win_len // 4
    g = make_hann(win_len, hop, M).samples
    # overlap-add M * g^2 over enough copies to cover one full window period
    total = np.zeros(3 * win_len)
    for start in range(0, 2 * win_len + 1, hop):
        total[start : start + win_len] += M * g**2
    middle = total[win_len : 2 * win_len]
    np.testing.assert_allclose(middle, 1.0, atol=1e-12)


def test_hann_derivative_values():
    W = 64
    dg = make_hann_derivative(W).samples
    assert dg[0] == 0.0
    assert dg[W // 4] == pytest.approx(np.pi / W, rel=1e-15)


@pytest.mark.parametrize("W", [16, 64, 512])
def test_hann_derivative_matches_finite_difference(W):
    g = make_hann(W).samples
    dg = make_hann_derivative(W).samples
    fd = (np.roll(g, -1) - np.roll(g, 1)) / 2.0
    assert np.max(np.abs(fd - dg)) <= 2.0 / W**2


def test_derivative_shares_tight_scale():
    g = make_hann(64, 16, 128)
    dg = make_hann_derivative(64, 16, 128)
    assert g.scale == dg.scale != 1.0


@pytest.mark.parametrize("phase", ["freqinv", "timeinv"])
def test_dgt_matches_direct_sum(phase, rng):
    p = GaborParams(8, 2, 16, phase=phase).with_length(24)
    assert p.padded_len == 32
    g = make_hann(8, 2, 16)
    x = rng.standard_normal(32)
    np.testing.assert_allclose(dgt(x, p, g), brute_dgt(x, g.samples, 2, 16, phase), atol=1e-12)


def test_zero_in_zero_out(small_frame, small_params):
    assert not np.any(small_frame.analyze(np.zeros(512)))
    assert not np.any(small_frame.synthesize(np.zeros(small_params.shape, complex)))


def test_real_tone_concentrates_at_mirror_channels(small_frame):
    M = 128
    m0 = 40
    x = np.cos(2 * np.pi * m0 * np.arange(512) / M)
    c = small_frame.analyze(x)
    energy = np.sum(np.abs(c) ** 2, axis=1)
    assert set(np.argsort(energy)[-2:]) == {m0, M - m0}
    # one frame against a direct DFT of the windowed, zero-padded segment
    seg = np.zeros(M)
    seg[:64] = x[5 * 16 : 5 * 16 + 64] * small_frame.window.samples
    ref = np.fft.fft(seg) * np.exp(-2j * np.pi * np.arange(M) * 5 * 16 / M)
    np.testing.assert_allclose(c[:, 5], ref, atol=1e-12)


def test_parseval(small_frame, rng):
    for _ in range(20):
        x = rng.standard_normal(512)
        assert np.linalg.norm(small_frame.analyze(x)) == pytest.approx(np.linalg.norm(x), rel=1e-10)


def test_adjoint_identity(small_frame, small_params, rng):
    for _ in range(100):
        x = rng.standard_normal(512)
        z = rng.standard_normal(small_params.shape) + 1j * rng.standard_normal(small_params.shape)
        lhs = np.vdot(z, small_frame.analyze(x)).real
        rhs = x @ small_frame.synthesize(z)
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(z)


def test_timeinv_adjoint_and_tightness(rng):
    p = GaborParams(64, 16, 128, phase="timeinv").with_length(512)
    f = GaborFrame.build(p)
    x = rng.standard_normal(512)
    z = rng.standard_normal(p.shape) + 1j * rng.standard_normal(p.shape)
    assert np.vdot(z, f.analyze(x)).real == pytest.approx(x @ f.synthesize(z), rel=1e-10)
    np.testing.assert_allclose(f.synthesize(f.analyze(x)), x, atol=1e-12)


def test_synthesis_inverts_analysis(small_frame, rng):
    x = rng.standard_normal(512)
    y = small_frame.synthesize(small_frame.analyze(x))
    assert np.linalg.norm(y - x) <= 1e-10 * np.linalg.norm(x)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-10, 10, allow_nan=False),
    b=st.floats(-10, 10, allow_nan=False),
    seed=st.integers(0, 2**32 - 1),
)
def test_linearity(small_frame, a, b, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((2, 512))
    lhs = small_frame.analyze(a * x + b * y)
    rhs = a * small_frame.analyze(x) + b * small_frame.analyze(y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 40)


def test_operator_norm_is_one(small_frame):
    est = operator_norm(small_frame.analyze, small_frame.synthesize, (512,))
    assert est == pytest.approx(1.0, abs=1e-6)


def test_frame_bounds_tight_default():
    p = GaborParams()
    A, B = frame_bounds(p, make_hann(p.win_len, p.hop, p.channels))
    assert A == pytest.approx(1.0, abs=1e-12)
    assert B == pytest.approx(1.0, abs=1e-12)


def test_frame_bounds_unscaled_closed_form():
    W = 64
    p = GaborParams(W, W // 4, 2 * W)
    g = make_hann(W).samples
    # direct overlap sum of the four shifted squared windows at one sample
    k = 5
    expected = 2 * W * sum(g[(k + j * W // 4) % W] ** 2 for j in range(4))
    A, B = frame_bounds(p, g)
    assert A == pytest.approx(expected, rel=1e-12)
    assert B == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.5 * 2 * W, rel=1e-12)


def test_frame_bounds_no_overlap_flags_non_frame():
    p = GaborParams(64, 64, 128)
    with pytest.warns(UserWarning, match="not a frame"):
        A, _ = frame_bounds(p, make_hann(64))
    assert A == 0.0


def test_non_painless_rejected():
    p = GaborParams(64, 16, 32).with_length(256)
    with pytest.raises(ValueError):
        dgt(np.zeros(256), p, make_hann(64))
    with pytest.raises(ValueError):
        frame_bounds(p, make_hann(64))


def test_non_constant_overlap_warns():
    with pytest.warns(UserWarning, match="not tight"):
        make_hann(64, 48, 128)


def test_dimension_mismatch(small_frame, small_params):
    with pytest.raises(ValueError):
        small_frame.analyze(np.zeros(500))
    with pytest.raises(ValueError):
        small_frame.synthesize(np.zeros((128, 3), complex))
    with pytest.raises(ValueError):
        dgt(np.zeros(512), GaborParams(64, 16, 128), make_hann(64))
    with pytest.raises(ValueError):
        GaborParams(64, 16, 128, padded_len=400)


def test_with_length_rounds_up():
    p = GaborParams(512, 128, 1024).with_length(44100)
    assert p.padded_len == 45056
    assert p.n_frames == 352
    assert GaborParams(512, 128, 1024).with_length(10).padded_len == 1024
    assert GaborParams.from_overlap(8192, 0.75, 16384).hop == 2048


def test_pad_signal(small_params):
    out = pad_signal(np.ones(500), small_params)
    assert out.shape == (512,)
    assert out[:500].sum() == 500 and not out[500:].any()


def test_magnitude_dump(tmp_path, small_frame, rng):
    c = small_frame.analyze(rng.standard_normal(512))
    path = tmp_path / "mag.csv"
    dump_magnitudes_csv(c, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "m,n,magnitude"
    assert len(lines) == 1 + c.size
    m, n, v = lines[1 + 3 * c.shape[1] + 2].split(",")
    assert (int(m), int(n)) == (3, 2)
    assert float(v) == pytest.approx(abs(c[3, 2]), rel=1e-15)


def test_default_params_follow_overlap_rule():
    p = GaborParams()
    assert (p.win_len, p.hop, p.channels) == (8192, 2048, 16384)
    assert p.hop == p.win_len * (1 - 0.75)
    assert p.painless
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make_hann(p.win_len, p.hop, p.channels)
