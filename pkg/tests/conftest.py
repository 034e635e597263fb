import os
import tempfile

# The logger opens its file at import; keep test logs out of the repo.
os.environ.setdefault("SEEG_LOG_DIR", os.path.join(tempfile.gettempdir(), "seeg_pretrain_test_logs"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from seeg_pretrain.entity.config_entity import EncoderConfig, SynthConfig  # noqa: E402
from seeg_pretrain.entity.data_entity import ProbeLayout, RawTrace, Recording  # noqa: E402


def sine(freq_hz: float, duration_s: float, rate: float = 2048.0, amplitude: float = 1.0, phase: float = 0.0) -> RawTrace:
    t = np.arange(int(round(duration_s * rate))) / rate
    return RawTrace(amplitude * np.sin(2 * np.pi * freq_hz * t + phase), rate)


def fourier_amplitude(x: np.ndarray, freq_hz: float, rate: float) -> float:
    """Amplitude of the tone at ``freq_hz`` (assumes an integer number of cycles)."""
    spectrum = np.fft.rfft(x)
    k = int(round(freq_hz * x.size / rate))
    return 2.0 * np.abs(spectrum[k]) / x.size


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_encoder_cfg():
    return EncoderConfig(n_layers=2, n_heads=2, d_hidden=16, d_ff=32, dropout=0.1, n_bins=8, max_frames=32)


@pytest.fixture
def small_synth_cfg():
    """Two shafts of five electrodes, 120 s at 512 Hz: enough events for every split."""
    return SynthConfig(n_shafts=2, electrodes_per_shaft=5, duration_s=120.0, sample_rate_hz=512.0,
                       seed=3)


@pytest.fixture
def three_shaft_recording(rng):
    layout = ProbeLayout((("A1", "A2", "A3", "A4"), ("B1", "B2"), ("C1", "C2", "C3")))
    traces = {eid: RawTrace(rng.normal(size=256), 256.0) for eid in layout.electrode_ids}
    return Recording(traces, layout, "fixture")
