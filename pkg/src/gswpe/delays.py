"""Time-difference-of-arrival estimation and frame-delay conversion.

GCC-PHAT whitens the cross-spectrum to its phase, so the inverse transform
peaks at the dominant inter-channel lag regardless of the source spectrum.
Estimated sample delays convert to per-microphone prediction delays in
frames: tau_m = max(0, base_tau + round(tdoa_m / frame_shift)), with the
reference microphone pinned at base_tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mclp import DelayProfile

__all__ = ["TdoaEstimate", "gcc_phat", "estimate_tdoas", "to_frame_delays"]


@dataclass(frozen=True)
class TdoaEstimate:
    """Delay of one microphone relative to the reference.

    Attributes:
        delay: signed delay in samples; positive when the microphone lags
            the reference.
        confidence: ratio of the correlation peak to the strongest secondary
            peak outside the main lobe (0.0 for silent channels).
        silent: True when either channel carried no energy; the delay
            defaults to 0 and should not be trusted.
    """

    delay: int
    confidence: float
    silent: bool = False


def gcc_phat(x: np.ndarray, ref: np.ndarray, max_lag: int = 1024) -> TdoaEstimate:
    """GCC-PHAT delay of ``x`` relative to ``ref``.

    Args:
        x: microphone signal, 1-D, same length as ref.
        ref: reference signal.
        max_lag: search window; both signals must be at least 4*max_lag long.

    Returns:
        TdoaEstimate with the lag of the phase-transform correlation peak in
        [-max_lag, +max_lag]. A pure shift x(n) = ref(n - d) yields +d.
    """
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.ndim != 1 or ref.ndim != 1:
        raise ValueError("signals must be one-dimensional")
    if x.shape != ref.shape:
        raise ValueError("signals must share one length")
    if max_lag < 1:
        raise ValueError("max_lag must be positive")
    if x.size < 4 * max_lag:
        raise ValueError(
            f"signals of {x.size} samples too short for max_lag {max_lag}"
        )
    if not (np.any(x) and np.any(ref)):
        return TdoaEstimate(delay=0, confidence=0.0, silent=True)

    n = 2 * x.size  # linear (not circular) correlation support
    spec = np.fft.rfft(x, n) * np.conj(np.fft.rfft(ref, n))
    spec /= np.maximum(np.abs(spec), 1e-12)
    cc = np.fft.irfft(spec, n)
    cc = np.concatenate([cc[-max_lag:], cc[: max_lag + 1]])

    peak = int(np.argmax(cc))
    lobe = slice(max(0, peak - 2), peak + 3)
    rest = np.delete(cc, np.arange(*lobe.indices(cc.size)))
    secondary = float(rest.max()) if rest.size else 0.0
    confidence = float(cc[peak] / max(secondary, 1e-12))
    return TdoaEstimate(delay=peak - max_lag, confidence=confidence)


def estimate_tdoas(signals: np.ndarray, max_lag: int = 1024) -> list[TdoaEstimate]:
    """Per-channel delays relative to channel 0 for an (n_mics, n) recording."""
    signals = np.asarray(signals, dtype=np.float64)
    if signals.ndim != 2:
        raise ValueError("expected (n_mics, n_samples) signals")
    return [gcc_phat(ch, signals[0], max_lag=max_lag) for ch in signals]


def to_frame_delays(
    tdoas, base_tau: int, frame_shift: int
) -> DelayProfile:
    """Convert sample TDOAs to per-mic prediction delays in frames.

    tau_m = max(0, base_tau + round(tdoa_m / frame_shift)); the reference
    entry (index 0) is pinned to base_tau regardless of its estimate. Halves
    round to even frame counts (np.rint).

    Args:
        tdoas: sequence of TdoaEstimate or raw sample delays; entry 0 is the
            reference microphone.
        base_tau: reference prediction delay in frames, >= 0.
        frame_shift: STFT hop in samples.
    """
    if base_tau < 0:
        raise ValueError("base_tau must be non-negative")
    if frame_shift <= 0:
        raise ValueError("frame_shift must be positive")
    samples = [t.delay if isinstance(t, TdoaEstimate) else int(t) for t in tdoas]
    taus = [
        max(0, base_tau + int(np.rint(d / frame_shift))) for d in samples
    ]
    if taus:
        taus[0] = base_tau
    return DelayProfile(taus=tuple(taus))
