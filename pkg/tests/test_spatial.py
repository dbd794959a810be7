"""Covariance, eigenvector direction features and TF-bin selection."""

import numpy as np
import pytest

from seldkit import (
    ArrayFormat,
    BinSelectionConfig,
    ComplexSpectrogram,
    SPEED_OF_SOUND,
    StftConfig,
    dominance_ratio,
    eigen_summary,
    eigenvector_intensity_vector,
    eigenvector_phase_vector,
    foa_steering,
    local_covariance,
    magnitude_test,
    mic_steering,
    passband_bins,
    render_scene,
    salsa,
    tetra_positions,
    track_noise_floor,
)
from seldkit.spatial import _covariances_at, running_rms

import oracles
from support import single_source_scene


def _random_spec(rng, channels=4, frames=20, bins=12):
    data = rng.standard_normal((channels, frames, bins)) + 1j * rng.standard_normal(
        (channels, frames, bins)
    )
    return ComplexSpectrogram(data, bin_hz=46.875, frame_rate=80.0)


def test_local_covariance_matches_direct_sum():
    rng = np.random.default_rng(0)
    spec = _random_spec(rng)
    for t in (0, 1, 3, 10, 19):
        est = local_covariance(spec, t, 5, half_window=3)
        ref, used = oracles.naive_local_covariance(spec.data, t, 5, 3)
        assert est.frames_used == used
        np.testing.assert_allclose(est.matrix, ref, atol=1e-12)


def test_local_covariance_edge_windows_shrink():
    rng = np.random.default_rng(1)
    spec = _random_spec(rng, frames=10)
    assert local_covariance(spec, 0, 0, 3).frames_used == 4
    assert local_covariance(spec, 9, 0, 3).frames_used == 4
    assert local_covariance(spec, 5, 0, 3).frames_used == 7
    with pytest.raises(ValueError):
        local_covariance(spec, 10, 0, 3)


def test_vectorized_covariances_agree_with_single_bin_route():
    # The batched sliding-window path and the per-bin path must be the same
    # estimator; they are implemented independently.
    rng = np.random.default_rng(2)
    spec = _random_spec(rng, frames=40, bins=100)
    t_idx = rng.integers(0, 40, size=60)
    f_idx = rng.integers(0, 100, size=60)
    batch = _covariances_at(spec.data, t_idx, f_idx, half=3)
    for k in range(60):
        single = local_covariance(spec, int(t_idx[k]), int(f_idx[k]), 3)
        np.testing.assert_allclose(batch[k], single.matrix, atol=1e-10)


def test_eigen_summary_agrees_with_power_iteration():
    rng = np.random.default_rng(3)
    for k in range(25):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        mat = a @ a.conj().T
        summary = eigen_summary(mat)
        value, vector = oracles.power_iteration_eig(mat, seed=k)
        assert summary.values[0] == pytest.approx(value, rel=1e-10)
        # same ray: dot magnitude 1 regardless of phase convention
        assert abs(np.vdot(vector, summary.vector)) == pytest.approx(1.0, abs=1e-8)


def test_eigen_summary_phase_convention():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    summary = eigen_summary(a @ a.conj().T)
    assert summary.vector[0].imag == pytest.approx(0.0, abs=1e-12)
    assert summary.vector[0].real >= 0.0
    assert np.linalg.norm(summary.vector) == pytest.approx(1.0)
    assert np.all(np.diff(summary.values) <= 1e-12)


def test_eigen_summary_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        eigen_summary(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_dominance_ratio_separates_rank_one_from_mixture():
    u = np.array([1.0, 1j, -1.0, -1j]) / 2.0
    v = np.array([1.0, -1.0, 1.0, -1.0]) / 2.0
    pure = np.outer(u, u.conj())
    mixed = 0.5 * np.outer(u, u.conj()) + 0.5 * np.outer(v, v.conj())
    assert dominance_ratio(eigen_summary(pure)) > 1e10
    assert dominance_ratio(eigen_summary(mixed)) == pytest.approx(1.0, rel=1e-9)


def test_noise_floor_recurrence_step_by_step():
    cfg = BinSelectionConfig()
    mag = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 0.5, 0.5])
    floor = track_noise_floor(mag, cfg)
    # seeded with the mean of the first five frames, then one multiplicative
    # step per frame: up 5% on exceedance, down 0.2% otherwise
    expected = [1.0] * 5
    eta = 1.0
    for m in mag[5:]:
        eta = eta * 1.05 if m > eta else eta * 0.998
        expected.append(eta)
    np.testing.assert_allclose(floor, expected, rtol=1e-12)


def test_noise_floor_stays_below_a_loud_event():
    cfg = BinSelectionConfig()
    rng = np.random.default_rng(8)
    mag = np.concatenate([rng.uniform(0.05, 0.15, 40), np.full(30, 5.0)])
    floor = track_noise_floor(mag, cfg)
    # the floor hugs the background level, then grows only 5% per frame, so
    # the event stays far above the magnitude-test threshold throughout
    assert np.all(floor[:40] < 0.3)
    assert np.all(floor[40:] < 5.0 / cfg.alpha_mag)


def test_running_rms_matches_naive_window():
    rng = np.random.default_rng(5)
    mag = rng.uniform(0.0, 2.0, size=(15, 3))
    fast = running_rms(mag, half_window=1)
    for t in range(15):
        lo, hi = max(t - 1, 0), min(t + 1, 14)
        ref = np.sqrt(np.mean(mag[lo : hi + 1] ** 2, axis=0))
        np.testing.assert_allclose(fast[t], ref, atol=1e-12)


def test_magnitude_test_threshold():
    cfg = BinSelectionConfig()
    mag = np.full((9, 1), 2.0)
    floor = np.ones((9, 1))
    assert magnitude_test(mag, floor, cfg).all()  # 2.0 > 1.5 * 1.0
    assert not magnitude_test(mag, 1.5 * floor, cfg).any()  # 2.0 < 2.25


def test_intensity_style_direction_recovers_steering():
    rng = np.random.default_rng(6)
    for _ in range(20):
        az = rng.uniform(-180.0, 180.0)
        el = rng.uniform(-90.0, 90.0)
        h = foa_steering(az, el)
        cov = np.outer(h, h.conj()).astype(complex)
        v = eigenvector_intensity_vector(eigen_summary(cov))
        np.testing.assert_allclose(v, h[1:] / np.linalg.norm(h[1:]), atol=1e-9)


def test_intensity_direction_sign_convention():
    # A source straight ahead must come out as +x, not -x.
    cov = np.outer(foa_steering(0.0, 0.0), foa_steering(0.0, 0.0)).astype(complex)
    v = eigenvector_intensity_vector(eigen_summary(cov))
    np.testing.assert_allclose(v, [1.0, 0.0, 0.0], atol=1e-12)


def test_intensity_direction_degenerate_cases():
    zero_first = eigen_summary(np.diag([0.0, 1.0, 0.0, 0.0]).astype(complex))
    assert np.all(eigenvector_intensity_vector(zero_first) == 0.0)


def test_phase_style_direction_recovers_path_differences():
    positions = tetra_positions()
    rng = np.random.default_rng(7)
    for _ in range(20):
        az = rng.uniform(-180.0, 180.0)
        el = rng.uniform(-90.0, 90.0)
        f_hz = rng.uniform(300.0, 2400.0)  # below spatial aliasing
        h = mic_steering(f_hz, az, el, positions)
        cov = np.outer(h, h.conj())
        d = eigenvector_phase_vector(eigen_summary(cov), f_hz)
        u = np.array(
            [
                np.cos(np.radians(el)) * np.cos(np.radians(az)),
                np.cos(np.radians(el)) * np.sin(np.radians(az)),
                np.sin(np.radians(el)),
            ]
        )
        expected = (positions[0] - positions[1:]) @ u
        np.testing.assert_allclose(d, expected, atol=1e-9)


def test_phase_style_direction_zero_frequency():
    cov = np.eye(4, dtype=complex)
    assert np.all(eigenvector_phase_vector(eigen_summary(cov), 0.0) == 0.0)


def test_passband_default_bins():
    foa = BinSelectionConfig.for_format("foa")
    mic = BinSelectionConfig.for_format("mic")
    mask_foa = passband_bins(257, 46.875, foa)
    mask_mic = passband_bins(257, 46.875, mic)
    # 50 Hz is above bin 1 (46.875 Hz); 9 kHz is exactly bin 192, inclusive
    assert list(np.nonzero(mask_foa)[0][[0, -1]]) == [2, 192]
    assert list(np.nonzero(mask_mic)[0][[0, -1]]) == [2, 85]


def test_array_format_aliasing_frequency():
    fmt = ArrayFormat("mic")
    assert fmt.aliasing_frequency() == pytest.approx(SPEED_OF_SOUND / (2 * 0.042))
    assert ArrayFormat("foa").aliasing_frequency() == np.inf
    with pytest.raises(ValueError):
        ArrayFormat("stereo")


def test_salsa_layout_and_masking():
    scene = single_source_scene("foa", az=40.0, el=10.0, seed=3, noise_power=1e-4)
    spec, _ = render_scene(scene, StftConfig())
    feat = salsa(spec, ArrayFormat("foa"))
    assert feat.data.shape == (7, spec.n_frames, 200)
    assert feat.channel_roles == ["spec"] * 4 + ["spatial"] * 3
    assert feat.scale == "linear"
    spatial = feat.data[4:]
    # below f_low and in the very first frames nothing may be selected
    assert np.all(spatial[:, :, :2] == 0.0)
    assert np.all(spatial[:, :3, :] == 0.0)
    # wherever a direction was written it is unit norm (uncompressed bands)
    norms = np.linalg.norm(spatial[:, :, :192], axis=0)
    nonzero = norms > 0
    assert nonzero.any()
    np.testing.assert_allclose(norms[nonzero], 1.0, atol=1e-9)


def test_salsa_rejects_wrong_foa_channel_count():
    data = np.zeros((3, 10, 257), dtype=complex)
    spec = ComplexSpectrogram(data, 46.875, 80.0)
    with pytest.raises(ValueError, match="4 channels"):
        salsa(spec, ArrayFormat("foa"))


def test_salsa_silence_has_no_spatial_content():
    data = np.zeros((4, 30, 257), dtype=complex)
    spec = ComplexSpectrogram(data, 46.875, 80.0)
    feat = salsa(spec, ArrayFormat("foa"))
    assert np.all(feat.data[4:] == 0.0)
