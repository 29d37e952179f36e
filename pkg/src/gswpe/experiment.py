"""Experiment orchestration: scenes -> selection -> reports.

One experiment evaluates microphone subset selection on a list of scenes
(synthetic or WAV recordings). Per scene, every candidate subset is solved
once on the restricted problem (all bins batched) and the per-bin cost table
is shared by all reporting methods, so the proposed selection can never
appear better than the exhaustive optimum by implementation accident and
rerunning a configuration reproduces the reports byte for byte.

Outputs: manifest.json (resolved config echo + versions; accepted back as a
config), per_bin.csv (one row per scene/bin/method/K/lambda_c), summary.json
(means and standard errors over scenes), optional processed WAVs.
"""

from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .audio_io import load_wav, save_wav
from .delays import estimate_tdoas, to_frame_delays
from .mclp import DelayProfile, build_bin_problems
from .scenes import SceneSpec, late_early_ratio, render_scene
from .selection import (
    MAX_EXHAUSTIVE_SUBSETS,
    _candidate_subsets,
    broadband_group_vector,
    group_vector,
    random_selection,
    select_subset,
    wpe_on_subsets,
)
from .solver import SolverConfig, reweighted_solve
from .stft import StftConfig, analyze, cola_interior, synthesize

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "InputError",
    "DegenerateRunError",
    "load_config",
    "run_experiment",
]

METHODS = ("gs_fd", "gs_fi", "exhaustive", "random", "full")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


class InputError(ValueError):
    """Unreadable or inconsistent input audio (CLI exit code 2)."""


class DegenerateRunError(RuntimeError):
    """Every bin of every scene was degenerate (CLI exit code 3)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings.

    Attributes:
        scenes: synthetic scene specs (exclusive with wav_inputs).
        wav_inputs: per-scene lists of WAV paths.
        stft: analysis settings.
        solver: solver settings; solver.lambda_c is ignored in favor of
            lambda_grid during selection.
        subset_sizes: K values to select (each in [2, n_mics]).
        lambda_grid: group sparsity factors swept during selection.
        selection_mode: "frequency-dependent", "frequency-independent",
            or "both".
        baselines: subset of {"exhaustive", "random", "full"}.
        estimate_delays: GCC-PHAT per-mic frame delays when True.
        seed: master seed (random baseline draws).
        jobs: worker processes over scenes.
        output_dir: report directory.
        emit_wav: write processed reference-channel WAVs.
    """

    scenes: tuple[SceneSpec, ...] = ()
    wav_inputs: tuple[tuple[str, ...], ...] = ()
    stft: StftConfig = field(default_factory=StftConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    subset_sizes: tuple[int, ...] = (2,)
    lambda_grid: tuple[float, ...] = (1e-2,)
    selection_mode: str = "both"
    baselines: tuple[str, ...] = ("exhaustive", "random", "full")
    estimate_delays: bool = True
    seed: int = 0
    jobs: int = 1
    output_dir: str = "runs"
    emit_wav: bool = False

    def __post_init__(self):
        if bool(self.scenes) == bool(self.wav_inputs):
            raise ConfigError("provide either scenes or wav_inputs, not both/neither")
        if not self.subset_sizes:
            raise ConfigError("at least one subset size K is required")
        if any(k < 2 for k in self.subset_sizes):
            raise ConfigError("subset sizes must be at least 2")
        if not self.lambda_grid or any(l < 0 for l in self.lambda_grid):
            raise ConfigError("lambda_grid must be non-empty and non-negative")
        if self.selection_mode not in (
            "frequency-dependent", "frequency-independent", "both"
        ):
            raise ConfigError(f"unknown selection_mode {self.selection_mode!r}")
        unknown = set(self.baselines) - {"exhaustive", "random", "full"}
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")


# --- config file handling ---------------------------------------------------


def _scene_from_mapping(entry: dict, index: int) -> SceneSpec:
    try:
        entry = dict(entry)
        entry.setdefault("seed", index + 1)
        if "direct_delays" in entry:
            entry["direct_delays"] = tuple(entry["direct_delays"])
        if isinstance(entry.get("tail_gains"), list):
            entry["tail_gains"] = tuple(entry["tail_gains"])
        return SceneSpec(**entry)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid scene entry {index}: {err}") from err


def _dataclass_from(section: dict, cls, name: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid {name} section: {err}") from err


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that reads 1e-6 style floats.

    YAML 1.1 demands a dot in the mantissa, so plain safe_load would hand
    back "1e-06" (as json.dump writes eig_tol) as a string. Widening the
    float resolver keeps manifest.json files loadable as configs.
    """


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_config(path) -> ExperimentConfig:
    """Load a YAML config (or a manifest.json from a previous run)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        raw = yaml.load(text, Loader=_ConfigLoader)
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # manifest.json from an earlier run
    return config_from_mapping(raw)


def config_from_mapping(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    scenes = tuple(
        _scene_from_mapping(s, i) for i, s in enumerate(raw.pop("scenes", []) or [])
    )
    wav_inputs = tuple(
        tuple(entry) if isinstance(entry, (list, tuple)) else (entry,)
        for entry in (raw.pop("wav_inputs", []) or [])
    )
    stft = _dataclass_from(raw.pop("stft", {}) or {}, StftConfig, "stft")
    solver = _dataclass_from(raw.pop("solver", {}) or {}, SolverConfig, "solver")

    for key in ("subset_sizes", "lambda_grid", "baselines"):
        if key in raw and raw[key] is not None:
            raw[key] = tuple(raw[key])
    try:
        return ExperimentConfig(
            scenes=scenes, wav_inputs=wav_inputs, stft=stft, solver=solver, **raw
        )
    except TypeError as err:
        raise ConfigError(str(err)) from err


def _config_to_mapping(config: ExperimentConfig) -> dict:
    def scene_map(s: SceneSpec) -> dict:
        out = {
            "n_mics": s.n_mics,
            "t60_ms": s.t60_ms,
            "rir_length": s.rir_length,
            "direct_delays": list(s.direct_delays),
            "seed": s.seed,
            "duration": s.duration,
            "sample_rate": s.sample_rate,
            "early_cutoff": s.early_cutoff,
            "tail_gains": (
                list(s.tail_gains) if not np.isscalar(s.tail_gains)
                else s.tail_gains
            ),
        }
        return out

    return {
        "scenes": [scene_map(s) for s in config.scenes],
        "wav_inputs": [list(entry) for entry in config.wav_inputs],
        "stft": {
            "frame_size": config.stft.frame_size,
            "frame_shift": config.stft.frame_shift,
            "window": config.stft.window,
            "sample_rate": config.stft.sample_rate,
        },
        "solver": {
            "p": config.solver.p,
            "n_reweight_iters": config.solver.n_reweight_iters,
            "n_fista_iters": config.solver.n_fista_iters,
            "lambda_c": config.solver.lambda_c,
            "weight_floor": config.solver.weight_floor,
            "filter_length": config.solver.filter_length,
            "base_delay": config.solver.base_delay,
            "eig_iters": config.solver.eig_iters,
            "eig_tol": config.solver.eig_tol,
        },
        "subset_sizes": list(config.subset_sizes),
        "lambda_grid": list(config.lambda_grid),
        "selection_mode": config.selection_mode,
        "baselines": list(config.baselines),
        "estimate_delays": config.estimate_delays,
        "seed": config.seed,
        "jobs": config.jobs,
        "output_dir": config.output_dir,
        "emit_wav": config.emit_wav,
    }


# --- per-scene evaluation ----------------------------------------------------


@dataclass
class SceneResult:
    scene_id: str
    n_mics: int
    n_bins: int
    degenerate: np.ndarray                   # (n_bins,) bool
    subsets: list[tuple[int, ...]]           # evaluated subsets, fixed order
    costs: np.ndarray                        # (n_subsets, n_bins)
    # selection outputs: keyed by (K, lambda_c)
    fd_choice: dict                          # -> (n_bins,) subset index array
    fi_choice: dict                          # -> subset index
    random_choice: dict                      # K -> subset index
    # late/early metrics per method label (None when no desired target)
    late_early: dict | None
    rows_written: int = 0


def _scene_signals(config: ExperimentConfig, index: int):
    """Load or synthesize one scene. Returns (scene_id, signals, desired)."""
    if config.scenes:
        spec = config.scenes[index]
        if spec.sample_rate != config.stft.sample_rate:
            raise ConfigError(
                f"scene {index} sample_rate {spec.sample_rate} differs from "
                f"stft {config.stft.sample_rate}"
            )
        signals, desired = render_scene(spec)
        return f"s{index:02d}", signals, desired
    paths = config.wav_inputs[index]
    try:
        signals, _rate = load_wav(
            list(paths), expected_rate=config.stft.sample_rate,
            max_length_slack=config.stft.frame_size,
        )
    except FileNotFoundError as err:
        raise InputError(f"missing input file: {err}") from err
    except ValueError as err:
        raise InputError(str(err)) from err
    return f"s{index:02d}", signals, None


def _evaluate_scene(config: ExperimentConfig, index: int) -> SceneResult:
    scene_id, signals, desired = _scene_signals(config, index)
    m = signals.shape[0]
    if m < 2:
        raise InputError(f"scene {scene_id} has {m} channel(s); need >= 2")
    if any(k > m for k in config.subset_sizes):
        raise ConfigError(
            f"subset size {max(config.subset_sizes)} exceeds {m} microphones"
        )

    stft_cfg = config.stft
    solver_cfg = config.solver
    if config.estimate_delays:
        max_lag = min(stft_cfg.frame_size, signals.shape[1] // 4)
        tdoas = estimate_tdoas(signals, max_lag=max_lag)
        delays = to_frame_delays(tdoas, solver_cfg.base_delay, stft_cfg.frame_shift)
    else:
        delays = DelayProfile(taus=(solver_cfg.base_delay,) * m)

    spec = analyze(signals, stft_cfg)
    prob = build_bin_problems(spec, delays, solver_cfg.filter_length, solver_cfg.p)
    degenerate = np.asarray(prob.degenerate, dtype=bool)
    if np.all(degenerate):
        raise DegenerateRunError(f"scene {scene_id}: every bin is degenerate")

    # ---- selection solves (penalized, full array), per lambda_c ----
    run_fd = config.selection_mode in ("frequency-dependent", "both")
    run_fi = config.selection_mode in ("frequency-independent", "both")
    group_vectors = {}
    for lam_c in config.lambda_grid:
        res = reweighted_solve(prob, replace(solver_cfg, lambda_c=lam_c))
        group_vectors[lam_c] = group_vector(res.filters, solver_cfg.filter_length)

    # ---- subset universe ----
    subsets: list[tuple[int, ...]] = []

    def register(mics: tuple[int, ...]) -> int:
        mics = tuple(sorted(mics))
        if mics not in subsets:
            subsets.append(mics)
        return subsets.index(mics)

    full_set = tuple(range(1, m + 1))
    register(full_set)

    fd_choice: dict = {}
    fi_choice: dict = {}
    random_choice: dict = {}

    for k in config.subset_sizes:
        if "exhaustive" in config.baselines:
            n_subsets = math.comb(m - 1, k - 1)
            if n_subsets > MAX_EXHAUSTIVE_SUBSETS:
                raise ConfigError(
                    f"exhaustive search over {n_subsets} subsets exceeds "
                    f"{MAX_EXHAUSTIVE_SUBSETS}"
                )
            for mics in _candidate_subsets(m, k):
                register(mics)
        if "random" in config.baselines:
            pick = random_selection(
                m, k, seed=np.random.SeedSequence(
                    entropy=config.seed, spawn_key=(index, k)
                )
            )
            random_choice[k] = register(pick.mics)
        for lam_c in config.lambda_grid:
            u = group_vectors[lam_c]
            if run_fi:
                ub = broadband_group_vector(u, keep=~degenerate)
                fi_choice[(k, lam_c)] = register(
                    select_subset(ub, k).mics
                )
            if run_fd:
                per_bin = np.empty(u.shape[0], dtype=np.int64)
                for f in range(u.shape[0]):
                    per_bin[f] = register(select_subset(u[f], k).mics)
                fd_choice[(k, lam_c)] = per_bin

    # ---- one evaluation per subset (final pass, lambda_c = 0) ----
    # batched per subset size; identical to per-subset solves, just faster
    costs: list = [None] * len(subsets)
    residuals: list = [None] * len(subsets)
    by_size: dict[int, list[int]] = {}
    for i, mics in enumerate(subsets):
        by_size.setdefault(len(mics), []).append(i)
    for _size, idx in sorted(by_size.items()):
        result, cost = wpe_on_subsets(prob, [subsets[i] for i in idx], solver_cfg)
        for row, i in enumerate(idx):
            costs[i] = cost[row]
            residuals[i] = result.residual[row]
    costs = np.stack(costs)  # (n_subsets, n_bins)

    # ---- time-domain metrics ----
    late_early = None
    processed: dict[str, np.ndarray | None] = {}
    if desired is not None or config.emit_wav:
        x1_scale = np.asarray(prob.x1_scale)
        n_samples = signals.shape[1]

        def synth(sub_idx_per_bin) -> np.ndarray:
            d = np.empty_like(prob.x1)
            for f in range(d.shape[0]):
                d[f] = residuals[sub_idx_per_bin[f]][f]
            d = d / x1_scale[:, None]
            return synthesize(d, stft_cfg, length=n_samples)

        full_idx = subsets.index(full_set)
        uniform = np.full(costs.shape[1], full_idx, dtype=np.int64)
        processed["full"] = synth(uniform)
        for (k, lam_c), sub in fi_choice.items():
            processed[f"gs_fi_K{k}_lc{lam_c:g}"] = synth(
                np.full(costs.shape[1], sub, dtype=np.int64)
            )
        for (k, lam_c), per_bin in fd_choice.items():
            processed[f"gs_fd_K{k}_lc{lam_c:g}"] = synth(per_bin)

        if desired is not None:
            start, stop = cola_interior(n_samples, stft_cfg)
            window = slice(start, stop)
            late_early = {
                "unprocessed": late_early_ratio(
                    signals[0][window], desired[window]
                )
            }
            for label, sig in processed.items():
                late_early[label] = late_early_ratio(sig[window], desired[window])

    if config.emit_wav:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_wav(
            out_dir / f"processed_{scene_id}_unprocessed.wav",
            _peak_normalize(signals[0]), stft_cfg.sample_rate,
        )
        for label, sig in processed.items():
            save_wav(
                out_dir / f"processed_{scene_id}_{label}.wav",
                _peak_normalize(sig), stft_cfg.sample_rate,
            )

    return SceneResult(
        scene_id=scene_id,
        n_mics=m,
        n_bins=costs.shape[1],
        degenerate=degenerate,
        subsets=subsets,
        costs=costs,
        fd_choice=fd_choice,
        fi_choice=fi_choice,
        random_choice=random_choice,
        late_early=late_early,
    )


def _peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    return x * (0.9 / peak) if peak > 0 else x


# --- reporting ----------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _subset_str(mics: tuple[int, ...]) -> str:
    return "|".join(str(m) for m in mics)


def _exhaustive_best(result: SceneResult, k: int):
    """Per-bin argmin over the K-sized candidate subsets (lex order wins ties)."""
    idx = [
        i for i, mics in enumerate(result.subsets)
        if len(mics) == k and mics != tuple(range(1, result.n_mics + 1))
    ]
    # full set can coincide with K == n_mics
    if not idx:
        idx = [i for i, mics in enumerate(result.subsets) if len(mics) == k]
    sub_costs = result.costs[idx]  # (n_k, n_bins)
    order = np.array(idx)
    best_local = np.argmin(sub_costs, axis=0)
    return order[best_local], result.costs[order[best_local], np.arange(result.n_bins)]


def _write_csv(path: Path, config: ExperimentConfig, results: list[SceneResult]):
    run_fd = config.selection_mode in ("frequency-dependent", "both")
    run_fi = config.selection_mode in ("frequency-independent", "both")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["scene_id", "bin", "method", "K", "lambda_c", "cost_p", "subset"]
        )
        for res in results:
            bins = range(res.n_bins)
            for method in METHODS:
                if method == "gs_fd" and not run_fd:
                    continue
                if method == "gs_fi" and not run_fi:
                    continue
                if method in ("exhaustive", "random", "full") and \
                        method not in config.baselines:
                    continue
                if method == "full":
                    full_idx = res.subsets.index(tuple(range(1, res.n_mics + 1)))
                    for f in bins:
                        writer.writerow([
                            res.scene_id, f, method, res.n_mics, "",
                            _fmt(res.costs[full_idx, f]),
                            _subset_str(res.subsets[full_idx]),
                        ])
                    continue
                for k in config.subset_sizes:
                    if method == "exhaustive":
                        best_idx, best_cost = _exhaustive_best(res, k)
                        for f in bins:
                            writer.writerow([
                                res.scene_id, f, method, k, "",
                                _fmt(best_cost[f]),
                                _subset_str(res.subsets[int(best_idx[f])]),
                            ])
                    elif method == "random":
                        sub = res.random_choice.get(k)
                        if sub is None:
                            continue
                        for f in bins:
                            writer.writerow([
                                res.scene_id, f, method, k, "",
                                _fmt(res.costs[sub, f]),
                                _subset_str(res.subsets[sub]),
                            ])
                    else:
                        for lam_c in config.lambda_grid:
                            if method == "gs_fi":
                                sub = res.fi_choice[(k, lam_c)]
                                for f in bins:
                                    writer.writerow([
                                        res.scene_id, f, method, k, _fmt(lam_c),
                                        _fmt(res.costs[sub, f]),
                                        _subset_str(res.subsets[sub]),
                                    ])
                            else:
                                per_bin = res.fd_choice[(k, lam_c)]
                                for f in bins:
                                    sub = int(per_bin[f])
                                    writer.writerow([
                                        res.scene_id, f, method, k, _fmt(lam_c),
                                        _fmt(res.costs[sub, f]),
                                        _subset_str(res.subsets[sub]),
                                    ])


def _gap_stats(config: ExperimentConfig, results: list[SceneResult]):
    """Mean relative cost gaps vs the exhaustive optimum, per (method, K, lam)."""
    if "exhaustive" not in config.baselines:
        return []
    entries = []
    run_fd = config.selection_mode in ("frequency-dependent", "both")
    run_fi = config.selection_mode in ("frequency-independent", "both")

    def collect(method: str, k: int, lam_c):
        per_scene = []
        pooled = []
        for res in results:
            _best_idx, best_cost = _exhaustive_best(res, k)
            keep = ~res.degenerate & (best_cost > 0)
            if method == "gs_fd":
                per_bin = res.fd_choice[(k, lam_c)]
                cost = res.costs[per_bin, np.arange(res.n_bins)]
            elif method == "gs_fi":
                cost = res.costs[res.fi_choice[(k, lam_c)]]
            else:
                sub = res.random_choice.get(k)
                if sub is None:
                    return None
                cost = res.costs[sub]
            gaps = (cost[keep] - best_cost[keep]) / best_cost[keep]
            pooled.extend(gaps.tolist())
            per_scene.append(float(np.mean(gaps)) if gaps.size else 0.0)
        scene_means = np.array(per_scene)
        entry = {
            "method": method,
            "K": k,
            "lambda_c": lam_c,
            "mean_relative_gap": float(np.mean(pooled)) if pooled else 0.0,
            "min_gap": float(np.min(pooled)) if pooled else 0.0,
            "scene_mean_gap": scene_means.tolist(),
            "gap_stderr_over_scenes": (
                float(np.std(scene_means, ddof=1) / np.sqrt(len(scene_means)))
                if len(scene_means) > 1 else 0.0
            ),
        }
        return entry

    for k in config.subset_sizes:
        for lam_c in config.lambda_grid:
            if run_fd:
                entries.append(collect("gs_fd", k, lam_c))
            if run_fi:
                entries.append(collect("gs_fi", k, lam_c))
        if "random" in config.baselines:
            entry = collect("random", k, None)
            if entry is not None:
                entries.append(entry)
    return [e for e in entries if e is not None]


def _broadband_costs(config: ExperimentConfig, results: list[SceneResult]):
    """Broadband (bin-summed) cost per scene for full array and gs_fi subsets."""
    out = []
    for res in results:
        full_idx = res.subsets.index(tuple(range(1, res.n_mics + 1)))
        keep = ~res.degenerate
        entry = {
            "scene_id": res.scene_id,
            "full": float(res.costs[full_idx, keep].sum()),
        }
        for (k, lam_c), sub in res.fi_choice.items():
            entry[f"gs_fi_K{k}_lc{lam_c:g}"] = float(res.costs[sub, keep].sum())
        for (k, lam_c), per_bin in res.fd_choice.items():
            cost = res.costs[per_bin, np.arange(res.n_bins)]
            entry[f"gs_fd_K{k}_lc{lam_c:g}"] = float(cost[keep].sum())
        out.append(entry)
    return out


def run_experiment(config: ExperimentConfig) -> dict:
    """Run all scenes and write manifest, per-bin CSV and summary JSON.

    Returns the summary mapping. Raises ConfigError / InputError /
    DegenerateRunError for the CLI to map onto exit codes.
    """
    n_scenes = len(config.scenes) or len(config.wav_inputs)
    if n_scenes == 0:
        raise ConfigError("no scenes configured")

    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output dir {out_dir}: {err}") from err

    indices = list(range(n_scenes))
    if config.jobs > 1 and n_scenes > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_evaluate_scene, [config] * n_scenes, indices))
    else:
        results = [_evaluate_scene(config, i) for i in indices]

    manifest = {
        "config": _config_to_mapping(config),
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pyyaml": yaml.__version__,
        },
        "scene_ids": [r.scene_id for r in results],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )

    _write_csv(out_dir / "per_bin.csv", config, results)

    summary = {
        "n_scenes": n_scenes,
        "subset_sizes": list(config.subset_sizes),
        "lambda_grid": list(config.lambda_grid),
        "gaps_vs_exhaustive": _gap_stats(config, results),
        "broadband_costs": _broadband_costs(config, results),
        "late_early_db": {
            r.scene_id: r.late_early for r in results if r.late_early is not None
        },
        "degenerate_bins": {
            r.scene_id: int(np.sum(r.degenerate)) for r in results
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return summary
