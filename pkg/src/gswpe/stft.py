"""STFT analysis/synthesis framework used by the dereverberation pipeline.

Frames start at sample 0 and advance by ``frame_shift``; the tail is zero
padded so the last frame covers the end of the signal. With the default
square-root Hann pair at 75% overlap the analysis/synthesis product windows
satisfy the COLA condition, so synthesis reproduces the input exactly on the
interior (every sample covered by a full complement of windows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StftConfig",
    "MultichannelSpectrogram",
    "make_window",
    "check_cola",
    "num_frames",
    "cola_interior",
    "stft",
    "istft",
    "analyze",
    "synthesize",
]

_WINDOW_KINDS = ("sqrt_hann", "hann")


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters shared by analysis and synthesis.

    Attributes:
        frame_size: samples per frame (DFT length).
        frame_shift: hop between frames; must divide frame_size.
        window: taper kind applied on both analysis and synthesis
            ("sqrt_hann" or "hann").
        sample_rate: sampling rate in Hz, carried for I/O and reporting.
    """

    frame_size: int = 1024
    frame_shift: int = 256
    window: str = "sqrt_hann"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.frame_size <= 0 or self.frame_shift <= 0:
            raise ValueError("frame_size and frame_shift must be positive")
        if self.frame_size % self.frame_shift != 0:
            raise ValueError(
                f"frame_shift {self.frame_shift} must divide "
                f"frame_size {self.frame_size}"
            )
        if self.window not in _WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.window!r}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_bins(self) -> int:
        return self.frame_size // 2 + 1


def make_window(config: StftConfig) -> np.ndarray:
    """Periodic taper of length frame_size (applied at analysis and synthesis)."""
    n = np.arange(config.frame_size)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / config.frame_size)
    if config.window == "sqrt_hann":
        return np.sqrt(hann)
    return hann


def check_cola(config: StftConfig, tol: float = 1e-10) -> float:
    """Verify the analysis*synthesis window pair overlap-adds to a constant.

    Returns the constant. Raises ValueError if the overlap-added product
    window deviates from constant by more than ``tol`` relative.
    """
    w = make_window(config)
    prod = w * w
    acc = np.zeros(config.frame_shift)
    for k in range(config.frame_size // config.frame_shift):
        acc += prod[k * config.frame_shift:(k + 1) * config.frame_shift]
    mean = float(acc.mean())
    if mean <= 0 or np.max(np.abs(acc - mean)) > tol * mean:
        raise ValueError(
            f"window {config.window!r} is not COLA at shift {config.frame_shift}"
        )
    return mean


def num_frames(n_samples: int, config: StftConfig) -> int:
    """Frame count for a signal of n_samples (>= frame_size)."""
    if n_samples < config.frame_size:
        raise ValueError(
            f"signal length {n_samples} shorter than frame_size {config.frame_size}"
        )
    return math.ceil((n_samples - config.frame_size) / config.frame_shift) + 1


def cola_interior(n_samples: int, config: StftConfig) -> tuple[int, int]:
    """Sample range [start, stop) covered by a full complement of windows.

    On this range istft(stft(x)) reproduces x exactly; outside it the
    overlap-added window sum tapers off.
    """
    n = num_frames(n_samples, config)
    start = config.frame_size - config.frame_shift
    stop = min(n_samples, n * config.frame_shift)
    return start, stop


def _frame(x: np.ndarray, config: StftConfig) -> np.ndarray:
    """Slice x into overlapping frames (n_frames, frame_size), zero-padded tail."""
    n = num_frames(x.shape[-1], config)
    padded_len = (n - 1) * config.frame_shift + config.frame_size
    pad = padded_len - x.shape[-1]
    if pad:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (pad,), dtype=x.dtype)], axis=-1)
    idx = (np.arange(n)[:, None] * config.frame_shift + np.arange(config.frame_size)[None, :])
    return x[..., idx]


def stft(x: np.ndarray, config: StftConfig) -> np.ndarray:
    """Analyze a single channel.

    Args:
        x: real signal, shape (n_samples,), n_samples >= frame_size.
        config: framing parameters.

    Returns:
        Complex spectrogram, shape (frame_size // 2 + 1, n_frames), float64
        precision.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("stft expects a one-dimensional signal")
    if x.size == 0:
        raise ValueError("empty input")
    frames = _frame(x, config) * make_window(config)
    return np.fft.rfft(frames, n=config.frame_size, axis=-1).T


def istft(spec: np.ndarray, config: StftConfig, length: int | None = None) -> np.ndarray:
    """Synthesize a single channel from an (n_bins, n_frames) spectrogram.

    Overlap-adds windowed inverse DFT frames and divides by the overlap-added
    window-product sum, so unmodified spectrograms reconstruct exactly
    wherever that sum is nonzero. ``length`` trims or zero-pads the output.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[0] != config.n_bins:
        raise ValueError(
            f"expected spectrogram with {config.n_bins} bins, got shape {spec.shape}"
        )
    n = spec.shape[1]
    w = make_window(config)
    frames = np.fft.irfft(spec.T, n=config.frame_size, axis=-1) * w

    out_len = (n - 1) * config.frame_shift + config.frame_size
    out = np.zeros(out_len)
    wsum = np.zeros(out_len)
    prod = w * w
    for k in range(n):
        sl = slice(k * config.frame_shift, k * config.frame_shift + config.frame_size)
        out[sl] += frames[k]
        wsum[sl] += prod
    live = wsum > 1e-12 * wsum.max()
    out[live] /= wsum[live]
    out[~live] = 0.0

    if length is not None:
        if length <= out_len:
            out = out[:length]
        else:
            out = np.concatenate([out, np.zeros(length - out_len)])
    return out


@dataclass
class MultichannelSpectrogram:
    """STFT of an M-channel recording.

    Attributes:
        data: complex array, shape (n_mics, n_bins, n_frames). Channel 0 is
            the reference microphone (mic 1).
        config: the framing parameters used for analysis.
    """

    data: np.ndarray
    config: StftConfig

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("spectrogram data must be (n_mics, n_bins, n_frames)")
        if self.data.shape[0] < 2:
            raise ValueError("need at least two microphones (reference + candidate)")
        if self.data.shape[1] != self.config.n_bins:
            raise ValueError(
                f"bin count {self.data.shape[1]} does not match config "
                f"({self.config.n_bins})"
            )

    @property
    def n_mics(self) -> int:
        return self.data.shape[0]

    @property
    def n_bins(self) -> int:
        return self.data.shape[1]

    @property
    def n_frames(self) -> int:
        return self.data.shape[2]


def analyze(signals: np.ndarray, config: StftConfig) -> MultichannelSpectrogram:
    """Analyze an (n_mics, n_samples) recording into a MultichannelSpectrogram.

    All channels must share one length of at least frame_size samples.
    """
    try:
        signals = np.asarray(signals, dtype=np.float64)
    except ValueError as err:
        raise ValueError("channel length mismatch") from err
    if signals.ndim != 2 or signals.dtype == object:
        raise ValueError("expected a rectangular (n_mics, n_samples) array")
    if signals.size == 0:
        raise ValueError("empty input")
    data = np.stack([stft(ch, config) for ch in signals])
    return MultichannelSpectrogram(data=data, config=config)


def synthesize(spec: np.ndarray, config: StftConfig, length: int | None = None) -> np.ndarray:
    """Synthesize a time signal from a single-channel (n_bins, n_frames) spectrogram."""
    return istft(spec, config, length=length)
