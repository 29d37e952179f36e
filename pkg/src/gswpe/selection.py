"""Microphone subset selection from group-sparse prediction filters.

The l2 norms of the non-reference filter groups rank how much each candidate
microphone contributes to predicting the reference channel's late
reverberation. Selection keeps the reference plus the K-1 strongest
candidates, either per frequency bin or broadband (group vectors summed over
bins). Microphones are labeled 1-based; mic 1 is the reference and is always
selected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .mclp import BinProblem, restrict
from .solver import SolverConfig, ReweightedResult, reweighted_solve

__all__ = [
    "SubsetSelection",
    "group_vector",
    "broadband_group_vector",
    "select_subset",
    "wpe_on_subset",
    "wpe_on_subsets",
    "exhaustive_search",
    "random_selection",
    "MAX_EXHAUSTIVE_SUBSETS",
]

#: Guard on the exhaustive-search budget: C(M-1, K-1) may not exceed this.
MAX_EXHAUSTIVE_SUBSETS = 10_000


@dataclass(frozen=True)
class SubsetSelection:
    """A selected microphone subset.

    Attributes:
        mics: sorted 1-based microphone labels, always containing 1.
        mode: "frequency-dependent" or "frequency-independent".
        bin: frequency bin index for per-bin selections, None otherwise.
    """

    mics: tuple[int, ...]
    mode: str = "frequency-independent"
    bin: int | None = None

    def __post_init__(self):
        mics = tuple(sorted(int(m) for m in self.mics))
        if len(set(mics)) != len(mics):
            raise ValueError("duplicate microphone labels")
        if not mics or mics[0] != 1:
            raise ValueError("subset must contain the reference microphone 1")
        if any(m < 1 for m in mics):
            raise ValueError("microphone labels are 1-based")
        object.__setattr__(self, "mics", mics)
        if self.mode not in ("frequency-dependent", "frequency-independent"):
            raise ValueError(f"unknown selection mode {self.mode!r}")


def group_vector(g: np.ndarray, n_taps: int) -> np.ndarray:
    """Per-candidate group norms u = [||g_2||_2 ... ||g_M||_2].

    Args:
        g: prediction filters, shape (..., n_mics * n_taps).
        n_taps: group length.

    Returns:
        Non-negative array of shape (..., n_mics - 1); entry j scores
        microphone j + 2.
    """
    g = np.asarray(g)
    if g.shape[-1] % n_taps != 0:
        raise ValueError("filter length is not a multiple of n_taps")
    groups = g.reshape(g.shape[:-1] + (-1, n_taps))
    return np.sqrt(np.sum(np.abs(groups) ** 2, axis=-1))[..., 1:]


def broadband_group_vector(u: np.ndarray, keep: np.ndarray | None = None) -> np.ndarray:
    """Sum per-bin group vectors into one broadband score per candidate.

    Args:
        u: per-bin group vectors, shape (n_bins, n_mics - 1).
        keep: optional boolean mask over bins (degenerate bins excluded by
            passing keep=~degenerate).
    """
    u = np.asarray(u)
    if u.ndim != 2:
        raise ValueError("expected (n_bins, n_candidates) group vectors")
    if keep is not None:
        u = u[np.asarray(keep, dtype=bool)]
    return u.sum(axis=0)


def select_subset(u: np.ndarray, n_select: int, mode: str = "frequency-independent",
                  bin: int | None = None) -> SubsetSelection:
    """Keep the reference plus the K-1 largest-scoring candidates.

    Ties break toward the lower microphone index. ``u`` scores candidates
    2..M, so K = n_select must satisfy 2 <= K <= M.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1:
        raise ValueError("group vector must be one-dimensional")
    n_mics = u.size + 1
    if not 2 <= n_select <= n_mics:
        raise ValueError(f"n_select {n_select} outside [2, {n_mics}]")
    order = np.argsort(-u, kind="stable")
    chosen = order[: n_select - 1] + 2
    return SubsetSelection(mics=(1, *chosen.tolist()), mode=mode, bin=bin)


def wpe_on_subset(
    prob: BinProblem, mics, config: SolverConfig
) -> tuple[ReweightedResult, np.ndarray]:
    """Dereverberate using only the given microphones (final pass, no penalty).

    Restricts the problem to ``mics``, solves with lambda_c = 0, and returns
    the solver result together with the per-bin cost sum_n |d(n)|^p of the
    residual. Degenerate bins pass through unprocessed (d = x1, zero filter)
    with their initial cost.
    """
    sub = restrict(prob, tuple(mics))
    result = reweighted_solve(sub, replace(config, lambda_c=0.0))
    cost = np.sum(np.abs(result.residual) ** config.p, axis=-1)
    return result, cost


def wpe_on_subsets(
    prob: BinProblem, subsets, config: SolverConfig
) -> tuple[ReweightedResult, np.ndarray]:
    """Evaluate several equal-size subsets; results stacked on a leading axis.

    Solves one subset at a time: the per-subset normal matrix then stays
    cache resident across the inner iterations, which beats one big stacked
    solve. Per-bin freezing in the solver makes the two orderings produce
    identical numbers anyway, so this is purely a throughput choice.
    """
    subsets = [tuple(mics) for mics in subsets]
    if len({len(mics) for mics in subsets}) != 1:
        raise ValueError("subsets must all have the same size")
    results = []
    costs = []
    for mics in subsets:
        result, cost = wpe_on_subset(prob, mics, config)
        results.append(result)
        costs.append(cost)
    stacked = ReweightedResult(
        filters=np.stack([r.filters for r in results]),
        residual=np.stack([r.residual for r in results]),
        objectives=np.stack([r.objectives for r in results]),
        lambdas=np.stack([r.lambdas for r in results]),
        alphas=np.stack([r.alphas for r in results]),
        degenerate=np.stack([r.degenerate for r in results]),
    )
    return stacked, np.stack(costs)


def _candidate_subsets(n_mics: int, n_select: int):
    """All subsets {1} + (K-1 of 2..M) in lexicographic order."""
    return [
        (1, *rest) for rest in combinations(range(2, n_mics + 1), n_select - 1)
    ]


def exhaustive_search(prob: BinProblem, n_select: int, config: SolverConfig):
    """Per-bin optimal subsets by full enumeration.

    Evaluates every subset of size K containing the reference with the same
    solver as the proposed method and keeps, per bin, the subset with the
    smallest residual lp cost (ties go to the lexicographically smallest
    subset, which is evaluated first).

    Returns:
        (best_mics, best_cost, costs): best_mics is a list over bins of
        1-based tuples (a single tuple if the problem is unbatched),
        best_cost the per-bin optimal cost, and costs the full
        (n_subsets, ...) cost table in enumeration order.

    Raises:
        ValueError: if C(M-1, K-1) exceeds MAX_EXHAUSTIVE_SUBSETS.
    """
    n_subsets = math.comb(prob.n_mics - 1, n_select - 1)
    if n_subsets > MAX_EXHAUSTIVE_SUBSETS:
        raise ValueError(
            f"exhaustive search over {n_subsets} subsets exceeds the "
            f"{MAX_EXHAUSTIVE_SUBSETS} budget"
        )
    subsets = _candidate_subsets(prob.n_mics, n_select)
    _, costs = wpe_on_subsets(prob, subsets, config)

    best_idx = np.argmin(costs, axis=0)  # argmin keeps the first (lex smallest) tie
    best_cost = np.take_along_axis(costs, best_idx[None, ...], axis=0)[0]
    if best_idx.ndim == 0:
        best_mics = subsets[int(best_idx)]
    else:
        best_mics = [subsets[int(i)] for i in best_idx]
    return best_mics, best_cost, costs


def random_selection(n_mics: int, n_select: int, seed) -> SubsetSelection:
    """Uniformly random subset containing the reference (seeded)."""
    if not 2 <= n_select <= n_mics:
        raise ValueError(f"n_select {n_select} outside [2, {n_mics}]")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(np.arange(2, n_mics + 1), size=n_select - 1, replace=False)
    return SubsetSelection(mics=(1, *chosen.tolist()))
