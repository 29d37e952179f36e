"""Microphone subset selection for multichannel WPE dereverberation.

The package estimates per-microphone prediction filters with a group
sparsity penalty; the per-group filter norms rank microphones by how much
they contribute to linear prediction of the reference channel's late
reverberation, which selects a subset either per frequency bin or broadband.
"""

from .stft import StftConfig, MultichannelSpectrogram, analyze, synthesize, stft, istft
from .mclp import DelayProfile, BinProblem, lp_normalize, build_bin_problems, residual
from .solver import (
    SolverConfig,
    ReweightedResult,
    compute_weights,
    prox_group,
    largest_eigenvalue,
    fista_solve,
    reweighted_solve,
)
from .selection import (
    SubsetSelection,
    group_vector,
    broadband_group_vector,
    select_subset,
    wpe_on_subset,
    exhaustive_search,
    random_selection,
)
from .delays import TdoaEstimate, gcc_phat, estimate_tdoas, to_frame_delays
from .scenes import SceneSpec, synth_rir, render_scene, lp_cost, late_early_ratio
from .estimators import WpeDereverberator, MicrophoneSubsetSelector

__version__ = "0.1.0"

__all__ = [
    "StftConfig",
    "MultichannelSpectrogram",
    "analyze",
    "synthesize",
    "stft",
    "istft",
    "DelayProfile",
    "BinProblem",
    "lp_normalize",
    "build_bin_problems",
    "residual",
    "SolverConfig",
    "ReweightedResult",
    "compute_weights",
    "prox_group",
    "largest_eigenvalue",
    "fista_solve",
    "reweighted_solve",
    "SubsetSelection",
    "group_vector",
    "broadband_group_vector",
    "select_subset",
    "wpe_on_subset",
    "exhaustive_search",
    "random_selection",
    "TdoaEstimate",
    "gcc_phat",
    "estimate_tdoas",
    "to_frame_delays",
    "SceneSpec",
    "synth_rir",
    "render_scene",
    "lp_cost",
    "late_early_ratio",
    "WpeDereverberator",
    "MicrophoneSubsetSelector",
    "__version__",
]
