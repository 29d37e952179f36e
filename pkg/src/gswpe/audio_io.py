"""WAV input/output for multichannel recordings.

Supports 16-bit PCM and 32-bit float files. Integer samples are scaled by
1/32768, so a full-scale square wave reads as +/-(32767/32768). Resampling
is never attempted: a rate mismatch is an error.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.io import wavfile

__all__ = ["load_wav", "save_wav"]


def _read_one(path) -> tuple[int, np.ndarray]:
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as err:
        raise ValueError(f"unreadable WAV file {path}: {err}") from err
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype} in {path}")
    if data.ndim == 1:
        data = data[:, None]
    return rate, data.T  # (channels, samples)


def load_wav(paths, expected_rate: int | None = None,
             max_length_slack: int = 1024) -> tuple[np.ndarray, int]:
    """Load one or more WAV files as an (n_channels, n_samples) array.

    A single path may hold a multichannel file; multiple paths are stacked
    in order (channels within each file stay adjacent). All files must share
    one sample rate, and ``expected_rate`` (when given) must match it.
    Length mismatches up to ``max_length_slack`` samples are trimmed to the
    shortest channel with a warning; larger mismatches are errors.

    Returns:
        (signals, rate): float64 signals and the shared sample rate.
    """
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    if not paths:
        raise ValueError("no input files")

    rates = []
    channels = []
    for path in paths:
        rate, data = _read_one(path)
        rates.append(rate)
        channels.extend(data)
    if len(set(rates)) != 1:
        raise ValueError(f"sample rates differ across inputs: {sorted(set(rates))}")
    rate = rates[0]
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(
            f"input rate {rate} Hz does not match configured {expected_rate} Hz "
            "(resampling is not performed)"
        )

    lengths = [ch.shape[0] for ch in channels]
    shortest, longest = min(lengths), max(lengths)
    if longest - shortest > max_length_slack:
        raise ValueError(
            f"channel lengths differ by {longest - shortest} samples "
            f"(more than {max_length_slack})"
        )
    if longest != shortest:
        warnings.warn(
            f"trimming channels to the shortest length {shortest}", stacklevel=2
        )
        channels = [ch[:shortest] for ch in channels]
    return np.stack(channels), rate


def save_wav(path, signal: np.ndarray, rate: int) -> None:
    """Write a mono float signal as 16-bit PCM, clipped to full scale."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("expected a mono signal")
    clipped = np.clip(signal, -1.0, 32767.0 / 32768.0)
    wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
