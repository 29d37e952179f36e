"""Estimator wrappers: sklearn conventions, fitted state, chaining."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gswpe.estimators import MicrophoneSubsetSelector, WpeDereverberator
from gswpe.scenes import SceneSpec, late_early_ratio, render_scene
from gswpe.stft import StftConfig, cola_interior

FAST = dict(
    frame_size=256, frame_shift=64, filter_length=6,
    n_reweight_iters=3, n_fista_iters=15, estimate_delays=False,
)


@pytest.fixture(scope="module")
def recording():
    # early_cutoff matches base_delay * frame_shift: the target keeps exactly
    # the part of the reference RIR that the predictor is told not to touch
    spec = SceneSpec(
        n_mics=3, t60_ms=250.0, rir_length=2048,
        direct_delays=(0, 3, 6), seed=21, duration=0.5, early_cutoff=128,
    )
    signals, desired = render_scene(spec)
    return signals, desired


def interior_ratio(processed, desired):
    """late_early_ratio away from the STFT edge taper, where the
    reconstruction is exact."""
    cfg = StftConfig(frame_size=FAST["frame_size"], frame_shift=FAST["frame_shift"])
    start, stop = cola_interior(desired.size, cfg)
    return late_early_ratio(processed[start:stop], desired[start:stop])


def test_dereverberator_get_set_clone():
    est = WpeDereverberator(**FAST, p=0.5)
    params = est.get_params()
    assert params["frame_size"] == 256
    assert params["p"] == 0.5
    assert params["lambda_c"] == 0.0
    est.set_params(p=0.3)
    assert est.get_params()["p"] == 0.3
    dup = clone(est)
    assert dup.get_params() == est.get_params()


def test_selector_get_set_clone():
    est = MicrophoneSubsetSelector(n_select=2, **FAST)
    params = est.get_params()
    assert params["n_select"] == 2
    assert params["mode"] == "frequency-independent"
    dup = clone(est.set_params(n_select=3))
    assert dup.get_params()["n_select"] == 3


def test_transform_before_fit_raises():
    with pytest.raises(NotFittedError):
        WpeDereverberator(**FAST).transform(np.zeros((2, 4000)))
    with pytest.raises(NotFittedError):
        MicrophoneSubsetSelector(**FAST).transform(np.zeros((2, 4000)))


def test_dereverberator_fit_state_and_transform(recording):
    signals, desired = recording
    est = WpeDereverberator(**FAST)
    assert est.fit(signals) is est
    n_bins = 256 // 2 + 1
    assert est.n_mics_ == 3
    assert est.filters_.shape == (n_bins, 3 * 6)
    assert est.objectives_.shape == (n_bins, 3)
    assert est.degenerate_bins_.shape == (n_bins,)
    assert est.delays_.taus == (2, 2, 2)

    out = est.transform(signals)
    assert out.shape == (signals.shape[1],)
    before = interior_ratio(signals[0], desired)
    after = interior_ratio(out, desired)
    assert after < before  # residual moved toward the early reference


def test_dereverberator_fit_keeps_params(recording):
    signals, _ = recording
    est = WpeDereverberator(**FAST)
    params = est.get_params()
    est.fit(signals)
    assert est.get_params() == params


def test_dereverberator_refit_is_reproducible(recording):
    signals, _ = recording
    a = WpeDereverberator(**FAST).fit(signals)
    b = clone(a).fit(signals)
    np.testing.assert_array_equal(a.filters_, b.filters_)
    np.testing.assert_array_equal(a.transform(signals), b.transform(signals))


def test_dereverberator_input_validation(recording):
    signals, _ = recording
    est = WpeDereverberator(**FAST)
    with pytest.raises(ValueError):
        est.fit(signals[0])  # 1-D
    with pytest.raises(ValueError):
        est.fit(signals[:1])  # single channel
    bad = signals.copy()
    bad[1, 7] = np.nan
    with pytest.raises(ValueError):
        est.fit(bad)
    est.fit(signals)
    with pytest.raises(ValueError):
        est.transform(signals[:2])  # mic count changed


def test_selector_fit_state(recording):
    signals, _ = recording
    est = MicrophoneSubsetSelector(n_select=2, lambda_c=1e-2, **FAST)
    est.fit(signals)
    n_bins = 256 // 2 + 1
    assert est.group_vectors_.shape == (n_bins, 2)
    assert np.all(est.group_vectors_ >= 0)
    assert est.broadband_group_vector_.shape == (2,)
    assert est.subset_.mics[0] == 1
    assert len(est.subset_.mics) == 2
    assert est.subset_.mode == "frequency-independent"


def test_selector_transform_restricts_channels(recording):
    signals, _ = recording
    est = MicrophoneSubsetSelector(n_select=2, lambda_c=1e-2, **FAST).fit(signals)
    out = est.transform(signals)
    assert out.shape == (2, signals.shape[1])
    idx = [m - 1 for m in est.subset_.mics]
    np.testing.assert_array_equal(out, signals[idx])
    np.testing.assert_array_equal(out[0], signals[0])  # reference first


def test_selector_prefers_informative_microphone():
    # channel 3 carries no source at all, only faint sensor noise: its
    # prediction groups shrink and the selector keeps the real microphone
    spec = SceneSpec(
        n_mics=2, t60_ms=250.0, rir_length=2048,
        direct_delays=(0, 4), seed=33, duration=0.5,
    )
    signals, _ = render_scene(spec)
    noise = 1e-4 * np.random.default_rng(0).standard_normal(signals.shape[1])
    x = np.vstack([signals, noise])
    est = MicrophoneSubsetSelector(n_select=2, lambda_c=1e-2, **FAST).fit(x)
    assert est.subset_.mics == (1, 2)
    assert est.broadband_group_vector_[0] > est.broadband_group_vector_[1]


def test_selector_frequency_dependent_mode(recording):
    signals, _ = recording
    est = MicrophoneSubsetSelector(
        n_select=2, mode="frequency-dependent", **FAST
    ).fit(signals)
    n_bins = 256 // 2 + 1
    assert len(est.subsets_) == n_bins
    assert all(s.mics[0] == 1 and len(s.mics) == 2 for s in est.subsets_)
    assert all(s.bin == f for f, s in enumerate(est.subsets_))
    with pytest.raises(ValueError):
        est.transform(signals)


def test_selector_validation(recording):
    signals, _ = recording
    with pytest.raises(ValueError):
        MicrophoneSubsetSelector(mode="per-bin", **FAST).fit(signals)
    with pytest.raises(ValueError):
        MicrophoneSubsetSelector(n_select=1, **FAST).fit(signals)
    with pytest.raises(ValueError):
        MicrophoneSubsetSelector(n_select=4, **FAST).fit(signals)
    est = MicrophoneSubsetSelector(n_select=2, **FAST).fit(signals)
    with pytest.raises(ValueError):
        est.transform(signals[:2])


def test_selector_chains_into_dereverberator(recording):
    signals, desired = recording
    selector = MicrophoneSubsetSelector(n_select=2, lambda_c=1e-2, **FAST)
    reduced = selector.fit_transform(signals)
    out = WpeDereverberator(**FAST).fit_transform(reduced)
    assert out.shape == (signals.shape[1],)
    assert interior_ratio(out, desired) < interior_ratio(signals[0], desired)
