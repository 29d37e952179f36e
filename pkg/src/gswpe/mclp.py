"""Per-bin multichannel linear prediction model.

Within one frequency bin the reference channel x1(n) is predicted from
delayed frame sequences of all channels,

    r(n) = sum_m sum_l g_m(l) x_m(n - tau_m - l),

and the dereverberated signal is the residual d = x1 - X g, where X stacks
one convolution block per microphone. Prediction filters are arrays of shape
(..., n_mics * n_taps) holding n_mics contiguous groups of n_taps
coefficients; group 0 belongs to the reference microphone.

All problem arrays carry an optional leading batch axis over frequency bins
so the solver can process a whole spectrogram per call; a single bin is the
unbatched case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DelayProfile",
    "BinProblem",
    "lp_normalize",
    "delayed_convolution_matrix",
    "build_bin_problem",
    "build_bin_problems",
    "restrict",
    "residual",
    "physical_filter",
]


@dataclass(frozen=True)
class DelayProfile:
    """Per-microphone prediction delays in frames (entry 0 = reference)."""

    taus: tuple[int, ...]

    def __post_init__(self):
        if len(self.taus) < 1:
            raise ValueError("need at least one delay")
        if any(int(t) != t or t < 0 for t in self.taus):
            raise ValueError("delays must be non-negative integers")
        object.__setattr__(self, "taus", tuple(int(t) for t in self.taus))

    def __len__(self) -> int:
        return len(self.taus)


def lp_normalize(x: np.ndarray, p: float, axis: int = -1):
    """Scale x so its lp norm along ``axis`` equals the axis length.

    Returns (normalized, scale, degenerate): ``normalized = scale * x`` with
    ``||normalized||_p = n`` per slice; slices with zero norm are flagged
    degenerate and returned unchanged with scale 1.

    Args:
        x: real or complex array.
        p: norm exponent, p > 0 (sparsity-promoting values lie in (0, 1]).
    """
    x = np.asarray(x)
    if p <= 0:
        raise ValueError("p must be positive")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    n = x.shape[axis]
    norms = np.sum(np.abs(x) ** p, axis=axis, keepdims=True) ** (1.0 / p)
    degenerate = norms == 0
    scale = np.where(degenerate, 1.0, n / np.where(degenerate, 1.0, norms))
    out = x * scale
    return out, np.squeeze(scale, axis=axis), np.squeeze(degenerate, axis=axis)


def delayed_convolution_matrix(x: np.ndarray, tau: int, n_taps: int) -> np.ndarray:
    """Convolution matrix of the tau-delayed sequence.

    Entry (n, l) is x(n - tau - l) with x(k) = 0 for k < 0, so the matrix
    multiplied by a filter of length n_taps yields the delayed convolution
    sum above for one microphone.

    Args:
        x: sequence(s), shape (..., n_frames).
        tau: non-negative delay in frames.
        n_taps: filter length, >= 1.

    Returns:
        Array of shape (..., n_frames, n_taps).
    """
    x = np.asarray(x)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if n_taps < 1:
        raise ValueError("n_taps must be at least 1")
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1] + (n, n_taps), dtype=x.dtype)
    for l in range(n_taps):
        shift = tau + l
        if shift < n:
            out[..., shift:, l] = x[..., : n - shift]
    return out


@dataclass
class BinProblem:
    """Normalized per-bin prediction problem (optionally batched over bins).

    Attributes:
        x1: reference sequence after lp normalization, shape (..., n_frames).
        regressor: stacked per-mic convolution blocks of the normalized
            delayed sequences, shape (..., n_frames, n_mics * n_taps).
        n_mics: number of microphones M.
        n_taps: filter length per microphone.
        delays: prediction delays used to build the blocks.
        p: lp exponent used for normalization.
        x1_scale: scale applied to x1, shape (...,).
        block_scale: scale applied to each mic's delayed sequence, (..., n_mics).
        degenerate: True where the reference had no lp mass, shape (...,).
    """

    x1: np.ndarray
    regressor: np.ndarray
    n_mics: int
    n_taps: int
    delays: DelayProfile
    p: float
    x1_scale: np.ndarray
    block_scale: np.ndarray
    degenerate: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.x1.shape[-1]

    @property
    def n_coeffs(self) -> int:
        return self.n_mics * self.n_taps


def _build(data: np.ndarray, delays: DelayProfile, n_taps: int, p: float) -> BinProblem:
    """Assemble a BinProblem from (..., n_mics, n_frames) bin data."""
    m = data.shape[-2]
    if m < 2:
        raise ValueError("need at least two microphones")
    if len(delays) != m:
        raise ValueError(f"delay profile covers {len(delays)} mics, data has {m}")
    n = data.shape[-1]
    if n < n_taps:
        raise ValueError(f"only {n} frames for filters of {n_taps} taps")

    x1, x1_scale, degenerate = lp_normalize(data[..., 0, :], p)

    blocks = []
    block_scales = []
    for mic in range(m):
        z = np.zeros_like(data[..., mic, :])
        tau = delays.taus[mic]
        if tau < n:
            z[..., tau:] = data[..., mic, : n - tau]
        z, scale, _ = lp_normalize(z, p)
        blocks.append(delayed_convolution_matrix(z, 0, n_taps))
        block_scales.append(scale)

    return BinProblem(
        x1=x1,
        regressor=np.concatenate(blocks, axis=-1),
        n_mics=m,
        n_taps=n_taps,
        delays=delays,
        p=p,
        x1_scale=np.asarray(x1_scale, dtype=np.float64),
        block_scale=np.stack(block_scales, axis=-1).astype(np.float64),
        degenerate=np.asarray(degenerate),
    )


def build_bin_problem(bin_data: np.ndarray, delays: DelayProfile, n_taps: int, p: float) -> BinProblem:
    """Build the prediction problem for one frequency bin.

    Args:
        bin_data: complex array (n_mics, n_frames); row 0 is the reference.
        delays: per-mic prediction delays in frames.
        n_taps: filter length per microphone.
        p: lp exponent used to normalize the reference and each delayed
            mic sequence (each to norm n_frames).
    """
    bin_data = np.asarray(bin_data)
    if bin_data.ndim != 2:
        raise ValueError("bin_data must be (n_mics, n_frames)")
    return _build(bin_data, delays, n_taps, p)


def build_bin_problems(spec, delays: DelayProfile, n_taps: int, p: float) -> BinProblem:
    """Build the batched problem for every bin of a MultichannelSpectrogram.

    Returns a BinProblem whose arrays carry a leading (n_bins,) axis.
    """
    data = np.moveaxis(spec.data, 0, 1)  # (n_bins, n_mics, n_frames)
    return _build(data, delays, n_taps, p)


def restrict(prob: BinProblem, mics: tuple[int, ...]) -> BinProblem:
    """Problem restricted to a microphone subset (1-based labels, 1 included).

    Identical to building the problem from only those channels: normalization
    is per mic, so dropping a channel removes its columns and leaves the rest
    untouched.
    """
    mics = tuple(sorted(int(m) for m in mics))
    if mics[0] != 1:
        raise ValueError("subset must contain the reference microphone 1")
    if len(set(mics)) != len(mics) or mics[-1] > prob.n_mics:
        raise ValueError(f"invalid subset {mics} for {prob.n_mics} mics")
    idx = np.concatenate(
        [np.arange(prob.n_taps) + (m - 1) * prob.n_taps for m in mics]
    )
    return BinProblem(
        x1=prob.x1,
        regressor=np.ascontiguousarray(prob.regressor[..., idx]),
        n_mics=len(mics),
        n_taps=prob.n_taps,
        delays=DelayProfile(tuple(prob.delays.taus[m - 1] for m in mics)),
        p=prob.p,
        x1_scale=prob.x1_scale,
        block_scale=prob.block_scale[..., [m - 1 for m in mics]],
        degenerate=prob.degenerate,
    )


def residual(prob: BinProblem, g: np.ndarray) -> np.ndarray:
    """Prediction residual d = x1 - X g (the dereverberated bin signal)."""
    g = np.asarray(g)
    x = prob.regressor
    if x.ndim == 2:  # run the same BLAS path as batched solves
        return prob.x1 - (x[None] @ g[None, :, None])[0, :, 0]
    return prob.x1 - (x @ g[..., None])[..., 0]


def physical_filter(prob: BinProblem, g: np.ndarray) -> np.ndarray:
    """Map a filter from the normalized domain back to raw signal scale.

    The solver works on normalized sequences x1 <- s1*x1 and z_m <- s_m*z_m;
    the equivalent filter on raw signals is g_m * s_m / s1 per group.
    """
    g = np.asarray(g)
    shape = g.shape[:-1] + (prob.n_mics, prob.n_taps)
    scaled = g.reshape(shape) * (
        prob.block_scale / prob.x1_scale[..., None]
    )[..., None]
    return scaled.reshape(g.shape)
