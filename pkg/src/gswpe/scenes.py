"""Synthetic reverberant scenes and evaluation metrics.

A scene is M microphone signals obtained by convolving one source with
per-mic synthetic room impulse responses: a unit direct-path impulse
followed by a seeded Gaussian tail shaped by the exponential envelope
exp(-3*ln(10)*t/T60), which decays the tail energy by 60 dB at t = T60.
The evaluation target is the early part of the reference channel (the
source convolved with the first early_cutoff samples of RIR 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.signal import butter, fftconvolve, filtfilt, lfilter

__all__ = [
    "SceneSpec",
    "synth_rir",
    "render_scene",
    "speech_like_noise",
    "lp_cost",
    "LpCost",
    "late_early_ratio",
]


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene.

    Attributes:
        n_mics: number of microphones (reference first).
        t60_ms: reverberation time in milliseconds (energy -60 dB point).
        rir_length: impulse response length in samples.
        direct_delays: per-mic direct-path arrival in samples.
        seed: master seed for RIR tails and the synthesized source.
        duration: source length in seconds when no source samples are given.
        sample_rate: scene sampling rate in Hz.
        early_cutoff: early/late split of the reference RIR in samples
            (default 512, i.e. 32 ms at 16 kHz).
        tail_gains: per-mic (or shared scalar) reverberant tail level
            relative to the unit direct path.
        source: optional explicit source samples; synthesized speech-like
            noise otherwise.
    """

    n_mics: int
    t60_ms: float
    rir_length: int
    direct_delays: tuple[int, ...]
    seed: int
    duration: float = 1.5
    sample_rate: int = 16000
    early_cutoff: int = 512
    tail_gains: tuple[float, ...] | float = 0.25
    source: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_mics < 2:
            raise ValueError("scenes need at least two microphones")
        if len(self.direct_delays) != self.n_mics:
            raise ValueError("one direct delay per microphone required")
        if any(d < 0 for d in self.direct_delays):
            raise ValueError("direct delays must be non-negative")
        if any(d >= self.rir_length for d in self.direct_delays):
            raise ValueError("direct delay beyond rir_length")
        if self.t60_ms < 0:
            raise ValueError("t60_ms must be non-negative")
        if self.rir_length < 1:
            raise ValueError("rir_length must be positive")
        if self.early_cutoff < 1:
            raise ValueError("early_cutoff must be positive")
        if self.duration <= 0 or self.sample_rate <= 0:
            raise ValueError("duration and sample_rate must be positive")

    def tail_gain(self, mic: int) -> float:
        if np.isscalar(self.tail_gains):
            return float(self.tail_gains)
        return float(self.tail_gains[mic])


def _tail_rng(spec: SceneSpec, mic: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=spec.seed, spawn_key=(mic,))
    )


def synth_rir(spec: SceneSpec, mic: int) -> np.ndarray:
    """Synthetic impulse response for one microphone.

    Unit impulse at direct_delays[mic] plus a seeded Gaussian tail starting
    one sample later, shaped by exp(-3*ln(10)*t/T60) with t measured from
    the direct arrival. T60 = 0 collapses to the lone direct impulse.
    """
    if not 0 <= mic < spec.n_mics:
        raise ValueError(f"mic {mic} outside 0..{spec.n_mics - 1}")
    h = np.zeros(spec.rir_length)
    d0 = spec.direct_delays[mic]
    h[d0] = 1.0
    start = d0 + 1
    if spec.t60_ms <= 0 or start >= spec.rir_length:
        return h
    t = np.arange(spec.rir_length - start, dtype=np.float64)
    t60 = spec.t60_ms * spec.sample_rate / 1000.0
    envelope = np.exp(-3.0 * np.log(10.0) * t / t60)
    noise = _tail_rng(spec, mic).standard_normal(t.size)
    h[start:] = spec.tail_gain(mic) * envelope * noise
    return h


def speech_like_noise(n_samples: int, rng: np.random.Generator,
                      sample_rate: int = 16000) -> np.ndarray:
    """Noise with speech-like spectral tilt and syllabic-rate envelope.

    White Gaussian noise through a one-pole lowpass (spectral tilt), then
    modulated by a smoothed positive envelope so the lp cost sees the
    amplitude variation that sparsity-promoting weights respond to.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    white = rng.standard_normal(n_samples)
    a = 0.9
    tilted = lfilter([1.0 - a], [1.0, -a], white)

    # syllabic envelope around 4 Hz: smoothed rectified noise
    env_seed = rng.standard_normal(n_samples)
    cutoff = 4.0 / (sample_rate / 2.0)
    b, a2 = butter(2, cutoff)
    envelope = filtfilt(b, a2, np.abs(env_seed))
    envelope = np.maximum(envelope - envelope.min(), 0.0)
    peak = envelope.max()
    if peak > 0:
        envelope = 0.1 + 0.9 * envelope / peak
    else:
        envelope = np.ones(n_samples)
    out = tilted * envelope
    rms = np.sqrt(np.mean(out ** 2))
    return out / rms if rms > 0 else out


def _source(spec: SceneSpec) -> np.ndarray:
    if spec.source is not None:
        src = np.asarray(spec.source, dtype=np.float64)
        if src.ndim != 1 or src.size == 0:
            raise ValueError("source must be a non-empty 1-D array")
        return src
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=spec.seed, spawn_key=(10_000,))
    )
    return speech_like_noise(
        int(round(spec.duration * spec.sample_rate)), rng, spec.sample_rate
    )


def render_scene(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Microphone signals and the early-reference target for a scene.

    Returns:
        (signals, desired): signals has shape (n_mics, n_samples) with
        x_m = (h_m * s) truncated to the source length; desired is the
        source convolved with the first early_cutoff samples of the
        reference RIR.
    """
    s = _source(spec)
    n = s.size
    signals = np.empty((spec.n_mics, n))
    h1 = None
    for mic in range(spec.n_mics):
        h = synth_rir(spec, mic)
        if mic == 0:
            h1 = h
        signals[mic] = fftconvolve(s, h)[:n]
    desired = fftconvolve(s, h1[: spec.early_cutoff])[:n]
    return signals, desired


class LpCost(NamedTuple):
    """lp cost of a residual spectrogram: per-bin p-power sums, their total,
    and the norm-style value total ** (1/p)."""

    per_bin: np.ndarray
    total: float
    norm: float


def lp_cost(d: np.ndarray, p: float) -> LpCost:
    """Residual lp cost sum_n |d(f, n)|^p per bin, plus broadband summaries.

    Args:
        d: residual, shape (n_frames,) or (n_bins, n_frames).
        p: exponent, p > 0.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    d = np.asarray(d)
    per_bin = np.sum(np.abs(d) ** p, axis=-1)
    total = float(np.sum(per_bin))
    return LpCost(per_bin=per_bin, total=total, norm=total ** (1.0 / p))


def late_early_ratio(processed: np.ndarray, desired: np.ndarray) -> float:
    """Residual-to-target energy ratio in dB, floored at -100 dB.

    10*log10(||processed - desired||^2 / ||desired||^2); lower is better,
    and the improvement of a method is the unprocessed ratio minus the
    processed one.
    """
    processed = np.asarray(processed, dtype=np.float64)
    desired = np.asarray(desired, dtype=np.float64)
    if processed.shape != desired.shape:
        raise ValueError("signals must share one shape")
    denom = float(np.sum(desired ** 2))
    if denom == 0.0:
        raise ValueError("desired signal has no energy")
    num = float(np.sum((processed - desired) ** 2))
    if num == 0.0:
        return -100.0
    return max(10.0 * np.log10(num / denom), -100.0)
