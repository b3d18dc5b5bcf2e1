import numpy as np
import pytest

from phadq.gabor import GaborFrame, GaborParams

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_params():
    """Desk-scale operator test size: L=512, window 64, hop 16, 128 channels."""
    return GaborParams(win_len=64, hop=16, channels=128).with_length(512)


@pytest.fixture(scope="session")
def small_frame(small_params):
    return GaborFrame.build(small_params)


def tone(length, freq_channels, channels, amplitude=1.0, phase=0.0):
    """Real cosine at ``freq_channels`` cycles per ``channels`` samples."""
    n = np.arange(length)
    return amplitude * np.cos(2 * np.pi * freq_channels * n / channels + phase)
