"""Estimator-style front ends over the functional core.

``MicrophoneSubsetSelector`` is fit on a multichannel recording and learns
which microphones matter (transform drops the rest); ``WpeDereverberator``
fits prediction filters and transforms a recording into the dereverberated
reference channel. Both follow the usual estimator conventions (constructor
stores hyperparameters verbatim, fitted state carries a trailing
underscore), so they clone and compose in pipelines:

    Pipeline([("select", MicrophoneSubsetSelector(n_select=3)),
              ("derev", WpeDereverberator())])
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .delays import estimate_tdoas, to_frame_delays
from .mclp import DelayProfile, build_bin_problems, physical_filter
from .selection import broadband_group_vector, group_vector, select_subset
from .solver import SolverConfig, reweighted_solve
from .stft import StftConfig, analyze, synthesize

__all__ = ["WpeDereverberator", "MicrophoneSubsetSelector"]


def _validate_signals(x, frame_size: int) -> np.ndarray:
    """Check an (n_mics, n_samples) recording: 2-D, finite, two channels up."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected an (n_mics, n_samples) array")
    if x.shape[0] < 2:
        raise ValueError("need at least two microphones")
    if x.shape[1] < frame_size:
        raise ValueError(
            f"recordings must span at least one frame ({frame_size} samples)"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite samples in input")
    return x


class _SolverParamsMixin:
    """Shared constructor parameters mapped onto the config dataclasses."""

    def _stft_config(self) -> StftConfig:
        return StftConfig(
            frame_size=self.frame_size,
            frame_shift=self.frame_shift,
            window=self.window,
            sample_rate=self.sample_rate,
        )

    def _solver_config(self, lambda_c: float) -> SolverConfig:
        return SolverConfig(
            p=self.p,
            n_reweight_iters=self.n_reweight_iters,
            n_fista_iters=self.n_fista_iters,
            lambda_c=lambda_c,
            weight_floor=self.weight_floor,
            filter_length=self.filter_length,
            base_delay=self.base_delay,
        )

    def _delays(self, x: np.ndarray) -> DelayProfile:
        if self.estimate_delays:
            tdoas = estimate_tdoas(x, max_lag=min(self.frame_size, x.shape[1] // 4))
            return to_frame_delays(tdoas, self.base_delay, self.frame_shift)
        return DelayProfile(taus=(self.base_delay,) * x.shape[0])


class WpeDereverberator(_SolverParamsMixin, TransformerMixin, BaseEstimator):
    """Multichannel lp-norm WPE dereverberation.

    fit() estimates per-bin prediction filters on a recording (channel 0 is
    the reference); transform() subtracts the predicted late reverberation
    and returns the enhanced reference channel. The usual call is
    fit_transform(x) on the recording itself.

    Args:
        p: lp cost exponent in (0, 1].
        n_reweight_iters: outer reweighting iterations.
        n_fista_iters: inner proximal iterations per outer iteration.
        lambda_c: group sparsity factor; 0 (default) is the plain
            dereverberation pass.
        filter_length: prediction taps per microphone.
        base_delay: reference prediction delay in frames.
        weight_floor: additive floor in the reweighting.
        frame_size / frame_shift / window / sample_rate: STFT settings.
        estimate_delays: estimate per-mic frame delays with GCC-PHAT;
            otherwise every microphone uses base_delay.
    """

    def __init__(self, p=0.5, n_reweight_iters=10, n_fista_iters=50,
                 lambda_c=0.0, filter_length=20, base_delay=2,
                 weight_floor=1e-8, frame_size=1024, frame_shift=256,
                 window="sqrt_hann", sample_rate=16000, estimate_delays=True):
        self.p = p
        self.n_reweight_iters = n_reweight_iters
        self.n_fista_iters = n_fista_iters
        self.lambda_c = lambda_c
        self.filter_length = filter_length
        self.base_delay = base_delay
        self.weight_floor = weight_floor
        self.frame_size = frame_size
        self.frame_shift = frame_shift
        self.window = window
        self.sample_rate = sample_rate
        self.estimate_delays = estimate_delays

    def fit(self, X, y=None):
        x = _validate_signals(X, self.frame_size)
        stft_cfg = self._stft_config()
        delays = self._delays(x)
        spec = analyze(x, stft_cfg)
        prob = build_bin_problems(
            spec, delays, self.filter_length, self.p
        )
        result = reweighted_solve(prob, self._solver_config(self.lambda_c))
        self.n_mics_ = x.shape[0]
        self.delays_ = delays
        self.filters_ = physical_filter(prob, result.filters)
        self.objectives_ = result.objectives
        self.degenerate_bins_ = result.degenerate
        return self

    def transform(self, X):
        if not hasattr(self, "filters_"):
            raise NotFittedError("fit the dereverberator before transform")
        x = _validate_signals(X, self.frame_size)
        if x.shape[0] != self.n_mics_:
            raise ValueError(
                f"fitted on {self.n_mics_} microphones, got {x.shape[0]}"
            )
        stft_cfg = self._stft_config()
        spec = analyze(x, stft_cfg)
        # the fitted filters live at raw signal scale, so undo the builder's
        # per-block normalization before forming the residual
        prob = build_bin_problems(spec, self.delays_, self.filter_length, self.p)
        scale = np.repeat(prob.block_scale, self.filter_length, axis=-1)
        raw = prob.regressor / scale[..., None, :]
        d = spec.data[0] - np.einsum("...nk,...k->...n", raw, self.filters_)
        return synthesize(d, stft_cfg, length=x.shape[1])


class MicrophoneSubsetSelector(_SolverParamsMixin, TransformerMixin, BaseEstimator):
    """Group-sparsity based microphone subset selection.

    fit() solves the group-penalized prediction problem per frequency bin
    and ranks candidate microphones by their filter-group norms. In
    frequency-independent mode (the default) the per-bin group vectors are
    summed and transform() returns only the selected channels, reference
    first, so the selector chains directly into WpeDereverberator.
    Frequency-dependent mode keeps one subset per bin in ``subsets_``; it
    cannot restrict a time-domain recording, so transform() raises.

    Args:
        n_select: subset size K (reference included), 2 <= K <= n_mics.
        lambda_c: group sparsity factor used during selection.
        mode: "frequency-independent" or "frequency-dependent".
        remaining arguments: as for WpeDereverberator.
    """

    def __init__(self, n_select=2, lambda_c=1e-2, mode="frequency-independent",
                 p=0.5, n_reweight_iters=10, n_fista_iters=50, filter_length=20,
                 base_delay=2, weight_floor=1e-8, frame_size=1024,
                 frame_shift=256, window="sqrt_hann", sample_rate=16000,
                 estimate_delays=True):
        self.n_select = n_select
        self.lambda_c = lambda_c
        self.mode = mode
        self.p = p
        self.n_reweight_iters = n_reweight_iters
        self.n_fista_iters = n_fista_iters
        self.filter_length = filter_length
        self.base_delay = base_delay
        self.weight_floor = weight_floor
        self.frame_size = frame_size
        self.frame_shift = frame_shift
        self.window = window
        self.sample_rate = sample_rate
        self.estimate_delays = estimate_delays

    def fit(self, X, y=None):
        if self.mode not in ("frequency-independent", "frequency-dependent"):
            raise ValueError(f"unknown mode {self.mode!r}")
        x = _validate_signals(X, self.frame_size)
        if not 2 <= self.n_select <= x.shape[0]:
            raise ValueError(
                f"n_select {self.n_select} outside [2, {x.shape[0]}]"
            )
        stft_cfg = self._stft_config()
        delays = self._delays(x)
        spec = analyze(x, stft_cfg)
        prob = build_bin_problems(spec, delays, self.filter_length, self.p)
        result = reweighted_solve(prob, self._solver_config(self.lambda_c))

        self.n_mics_ = x.shape[0]
        self.delays_ = delays
        self.group_vectors_ = group_vector(result.filters, self.filter_length)
        self.degenerate_bins_ = result.degenerate
        self.broadband_group_vector_ = broadband_group_vector(
            self.group_vectors_, keep=~result.degenerate
        )
        self.subset_ = select_subset(
            self.broadband_group_vector_, self.n_select
        )
        if self.mode == "frequency-dependent":
            self.subsets_ = [
                select_subset(u, self.n_select, mode=self.mode, bin=f)
                for f, u in enumerate(self.group_vectors_)
            ]
        return self

    def transform(self, X):
        if not hasattr(self, "subset_"):
            raise NotFittedError("fit the selector before transform")
        if self.mode == "frequency-dependent":
            raise ValueError(
                "frequency-dependent subsets vary per bin and cannot "
                "restrict a time-domain recording; use the experiment "
                "pipeline for per-bin processing"
            )
        x = _validate_signals(X, self.frame_size)
        if x.shape[0] != self.n_mics_:
            raise ValueError(
                f"fitted on {self.n_mics_} microphones, got {x.shape[0]}"
            )
        idx = [m - 1 for m in self.subset_.mics]
        return x[idx]
