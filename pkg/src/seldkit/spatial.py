"""Spatial analysis: local covariance, principal eigenvectors, bin selection,
and the combined spectrogram + eigenvector-direction feature stack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stft import ComplexSpectrogram, FeatureTensor, compress_high_bands, log_linear_spectrogram

SPEED_OF_SOUND = 343.0

# Unit directions of a regular tetrahedron; scaled by the array radius these
# are the default 4-mic positions (matches a 4.2 cm spherical array subset).
_TETRA_UNIT = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
) / np.sqrt(3.0)


@dataclass
class ArrayFormat:
    """Input format: first-order ambisonics or a far-field mic array."""

    kind: str  # "foa" or "mic"
    mic_positions: np.ndarray | None = None  # (M, 3) metres, mic format only
    speed_of_sound: float = SPEED_OF_SOUND

    def __post_init__(self):
        if self.kind not in ("foa", "mic"):
            raise ValueError(f"unknown format kind {self.kind!r}")
        if self.kind == "mic":
            if self.mic_positions is None:
                self.mic_positions = tetra_positions()
            self.mic_positions = np.asarray(self.mic_positions, dtype=np.float64)
            if self.mic_positions.ndim != 2 or self.mic_positions.shape[1] != 3:
                raise ValueError("mic_positions must be (M, 3)")
            if self.mic_positions.shape[0] < 2:
                raise ValueError("mic format needs at least 2 capsules")

    @property
    def n_channels(self) -> int:
        return 4 if self.kind == "foa" else self.mic_positions.shape[0]

    def aliasing_frequency(self) -> float:
        """c / (2 r) with r the largest capsule distance from the centroid."""
        if self.kind == "foa":
            return float("inf")
        center = self.mic_positions.mean(axis=0)
        radius = np.linalg.norm(self.mic_positions - center, axis=1).max()
        return self.speed_of_sound / (2.0 * radius)


def tetra_positions(radius: float = 0.042) -> np.ndarray:
    """Tetrahedral 4-mic layout at the given radius, (4, 3) metres."""
    return _TETRA_UNIT * radius


@dataclass
class BinSelectionConfig:
    """Passband limits, test thresholds and tracker constants for bin selection."""

    f_low: float = 50.0
    f_high: float = 9000.0
    alpha_mag: float = 1.5
    beta_ratio: float = 5.0
    cov_half_window: int = 3
    rms_half_window: int = 1
    noise_init_frames: int = 5
    noise_delta_up: float = 0.05
    noise_delta_down: float = 0.002
    ratio_eps: float = 1e-12
    component_eps: float = 1e-12
    log_floor: float = 1e-12
    compress_start_bin: int = 192
    compress_factor: int = 8
    speed_of_sound: float = SPEED_OF_SOUND

    @classmethod
    def for_format(cls, kind: str) -> "BinSelectionConfig":
        # Upper cutoff: directional response validity for foa, spatial
        # aliasing for the default mic array.
        if kind == "foa":
            return cls(f_high=9000.0)
        if kind == "mic":
            return cls(f_high=4000.0)
        raise ValueError(f"unknown format kind {kind!r}")


@dataclass
class CovarianceEstimate:
    """Local spatial covariance at one TF bin."""

    matrix: np.ndarray  # (M, M) complex, Hermitian PSD
    frames_used: int


@dataclass
class EigenSummary:
    """Principal singular vector and the singular value spectrum of a covariance."""

    vector: np.ndarray  # (M,) complex, unit norm
    values: np.ndarray  # descending, >= 0


def local_covariance(
    spec: ComplexSpectrogram, t: int, f: int, half_window: int = 3
) -> CovarianceEstimate:
    """Average outer product over frames [t-half, t+half], truncated at edges.

    Args:
        spec: complex spectrogram stack.
        t, f: frame and bin index.
        half_window: frames averaged on each side of t.

    Returns:
        CovarianceEstimate with the actual frame count used.
    """
    T = spec.n_frames
    if not (0 <= t < T) or not (0 <= f < spec.n_bins):
        raise ValueError(f"bin (t={t}, f={f}) out of range")
    if half_window < 0:
        raise ValueError("half_window must be >= 0")
    lo = max(t - half_window, 0)
    hi = min(t + half_window, T - 1)
    block = spec.data[:, lo : hi + 1, f]  # (M, frames)
    cov = block @ block.conj().T / block.shape[1]
    return CovarianceEstimate(matrix=cov, frames_used=block.shape[1])


def eigen_summary(matrix: np.ndarray, check: bool = True) -> EigenSummary:
    """Singular value decomposition of a Hermitian PSD matrix.

    The principal vector's phase is fixed by making its first component of
    magnitude >= 1e-12 real and non-negative, so repeated calls are
    deterministic.

    Args:
        matrix: (M, M) Hermitian positive semi-definite.
        check: validate Hermitian symmetry (small tolerance).

    Returns:
        EigenSummary with unit-norm principal vector and descending values.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if check and not np.allclose(matrix, matrix.conj().T, atol=1e-10 * (1 + np.abs(matrix).max())):
        raise ValueError("matrix is not Hermitian")
    u, s, _ = np.linalg.svd(matrix)
    vec = u[:, 0]
    vec = _fix_phase(vec[None, :])[0]
    return EigenSummary(vector=vec, values=s)


def _fix_phase(vectors: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Rotate each row so its first component with |.| >= eps is real >= 0."""
    out = vectors.copy()
    fixed = np.zeros(len(out), dtype=bool)
    for k in range(out.shape[1]):
        comp = out[:, k]
        use = (~fixed) & (np.abs(comp) >= eps)
        if np.any(use):
            phase = comp[use] / np.abs(comp[use])
            out[use] *= np.conj(phase)[:, None]
            fixed |= use
        if fixed.all():
            break
    return out


def dominance_ratio(summary: EigenSummary, eps: float = 1e-12) -> float:
    """Ratio of the two largest singular values, sigma1 / (sigma2 + eps).

    Large ratios indicate a single dominant propagation direction at the bin;
    the selection threshold compares against BinSelectionConfig.beta_ratio.
    """
    if len(summary.values) < 2:
        raise ValueError("need at least a 2x2 covariance")
    return float(summary.values[0] / (summary.values[1] + eps))


def track_noise_floor(mag: np.ndarray, cfg: BinSelectionConfig) -> np.ndarray:
    """Adaptive per-bin noise floor of a magnitude sequence.

    The first init_frames frames are assumed noise-only and their mean seeds
    the floor; afterwards the floor rises by delta_up when the current
    magnitude exceeds it and decays by delta_down otherwise.

    Args:
        mag: (T,) or (T, F) non-negative magnitudes of the reference channel.
        cfg: tracker constants.

    Returns:
        Floor estimate with the same shape as mag.
    """
    mag = np.asarray(mag, dtype=np.float64)
    squeeze = mag.ndim == 1
    if squeeze:
        mag = mag[:, None]
    T = mag.shape[0]
    if T == 0:
        raise ValueError("empty magnitude sequence")
    init = min(max(cfg.noise_init_frames, 1), T)
    eta = np.empty_like(mag)
    eta[:init] = mag[:init].mean(axis=0)[None, :]
    up = 1.0 + cfg.noise_delta_up
    down = 1.0 - cfg.noise_delta_down
    for t in range(init, T):
        prev = eta[t - 1]
        eta[t] = np.where(mag[t] > prev, prev * up, prev * down)
    return eta[:, 0] if squeeze else eta


def running_rms(mag: np.ndarray, half_window: int = 1) -> np.ndarray:
    """Centered running RMS along the first axis, window truncated at edges."""
    mag = np.asarray(mag, dtype=np.float64)
    sq = mag * mag
    T = sq.shape[0]
    cs = np.concatenate([np.zeros((1,) + sq.shape[1:]), np.cumsum(sq, axis=0)], axis=0)
    lo = np.maximum(np.arange(T) - half_window, 0)
    hi = np.minimum(np.arange(T) + half_window, T - 1)
    counts = (hi - lo + 1).reshape((T,) + (1,) * (sq.ndim - 1))
    return np.sqrt((cs[hi + 1] - cs[lo]) / counts)


def magnitude_test(
    mag: np.ndarray, floor: np.ndarray, cfg: BinSelectionConfig
) -> np.ndarray:
    """True where the smoothed magnitude clears alpha_mag times the floor."""
    rms = running_rms(mag, cfg.rms_half_window)
    return rms > cfg.alpha_mag * floor


def eigenvector_intensity_vector(
    summary: EigenSummary, eps: float = 1e-12
) -> np.ndarray:
    """Direction estimate from a principal eigenvector of ambisonic channels.

    Normalizes the eigenvector by its omnidirectional (first) component, takes
    the real part of the remaining components and scales to unit norm. Returns
    the zero vector when the first component or the real part is degenerate.
    """
    u = summary.vector
    if abs(u[0]) < eps:
        return np.zeros(len(u) - 1)
    v = np.real(u[1:] / u[0])
    n = np.linalg.norm(v)
    if n < eps:
        return np.zeros(len(u) - 1)
    return v / n


def eigenvector_phase_vector(
    summary: EigenSummary,
    f_hz: float,
    speed_of_sound: float = SPEED_OF_SOUND,
    eps: float = 1e-12,
) -> np.ndarray:
    """Inter-channel delay estimate (metres) from a principal eigenvector.

    Normalizes the eigenvector by its first (reference channel) component and
    converts the residual phases to path-length differences at f_hz. For a
    far-field source this approximates the relative distances on the wavefront.
    Returns zeros for non-positive frequencies or a degenerate reference
    component.
    """
    u = summary.vector
    if f_hz <= 0 or abs(u[0]) < eps:
        return np.zeros(len(u) - 1)
    phases = np.angle(u[1:] / u[0])
    return -speed_of_sound * phases / (2.0 * np.pi * f_hz)


def passband_bins(n_bins: int, bin_hz: float, cfg: BinSelectionConfig) -> np.ndarray:
    """Boolean mask of bins whose center frequency lies in [f_low, f_high]."""
    freqs = np.arange(n_bins) * bin_hz
    return (freqs >= cfg.f_low) & (freqs <= cfg.f_high)


def _covariances_at(
    data: np.ndarray, t_idx: np.ndarray, f_idx: np.ndarray, half: int, chunk: int = 64
) -> np.ndarray:
    """Sliding-window covariances at the given (t, f) bins, vectorized.

    data is (M, T, F); returns (len(t_idx), M, M). Uses cumulative sums of the
    upper-triangle channel pair products, chunked over frequency to bound
    memory.
    """
    M, T, F = data.shape
    counts = (
        np.minimum(np.arange(T) + half, T - 1) - np.maximum(np.arange(T) - half, 0) + 1
    ).astype(np.float64)
    lo = np.maximum(np.arange(T) - half, 0)
    hi = np.minimum(np.arange(T) + half, T - 1)
    out = np.empty((len(t_idx), M, M), dtype=np.complex128)
    order = np.argsort(f_idx, kind="stable")
    t_sorted, f_sorted = t_idx[order], f_idx[order]
    pos = 0
    for f0 in range(0, F, chunk):
        f1 = min(f0 + chunk, F)
        n_here = np.searchsorted(f_sorted, f1) - pos
        if n_here == 0:
            continue
        ti = t_sorted[pos : pos + n_here]
        fi = f_sorted[pos : pos + n_here] - f0
        sub = data[:, :, f0:f1]
        for i in range(M):
            for j in range(i, M):
                prod = sub[i] * np.conj(sub[j])
                cs = np.empty((T + 1, f1 - f0), dtype=np.complex128)
                cs[0] = 0.0
                np.cumsum(prod, axis=0, out=cs[1:])
                mean = (cs[hi + 1] - cs[lo]) / counts[:, None]
                vals = mean[ti, fi]
                out[order[pos : pos + n_here], i, j] = vals
                if i != j:
                    out[order[pos : pos + n_here], j, i] = np.conj(vals)
        pos += n_here
    return out


def salsa(
    spec: ComplexSpectrogram,
    fmt: ArrayFormat,
    cfg: BinSelectionConfig | None = None,
) -> FeatureTensor:
    """Log spectrograms stacked with per-bin principal-eigenvector directions.

    Pipeline per TF bin: adaptive noise floor and running-RMS magnitude test
    on the first channel, local covariance and dominance-ratio test inside the
    passband, then a direction feature from the principal eigenvector
    (real-part intensity style for foa, phase/delay style for mic). Spatial
    channels are zero wherever any test fails or outside [f_low, f_high].
    All channels pass through high-band compression at the end.

    Args:
        spec: complex spectrogram, channels x frames x bins.
        fmt: input format; foa uses 4 ambisonic channels.
        cfg: selection config; defaults to the format's standard cutoffs.

    Returns:
        FeatureTensor with M "spec" channels and M-1 "spatial" channels.
    """
    if cfg is None:
        cfg = BinSelectionConfig.for_format(fmt.kind)
    M, T, F = spec.data.shape
    if fmt.kind == "foa" and M != 4:
        raise ValueError(f"foa input must have 4 channels, got {M}")
    if M < 2:
        raise ValueError("need at least 2 channels")

    spec_feat = log_linear_spectrogram(spec, floor=cfg.log_floor)

    mag = np.abs(spec.data[0])
    floor = track_noise_floor(mag, cfg)
    mag_mask = magnitude_test(mag, floor, cfg)
    band = passband_bins(F, spec.bin_hz, cfg)
    cand = mag_mask & band[None, :]

    spatial = np.zeros((M - 1, T, F))
    t_idx, f_idx = np.nonzero(cand)
    if len(t_idx):
        cov = _covariances_at(spec.data, t_idx, f_idx, cfg.cov_half_window)
        u, s, _ = np.linalg.svd(cov)
        coherent = s[:, 0] > cfg.beta_ratio * (s[:, 1] + cfg.ratio_eps)
        u0 = u[:, 0, 0]
        ok = coherent & (np.abs(u0) >= cfg.component_eps)
        if np.any(ok):
            ubar = u[ok, 1:, 0] / u0[ok, None]
            if fmt.kind == "foa":
                v = np.real(ubar)
                norms = np.linalg.norm(v, axis=1)
                good = norms >= cfg.component_eps
                v[good] /= norms[good, None]
                v[~good] = 0.0
            else:
                f_hz = f_idx[ok] * spec.bin_hz
                v = np.zeros_like(ubar, dtype=np.float64)
                pos = f_hz > 0
                v[pos] = (
                    -cfg.speed_of_sound
                    * np.angle(ubar[pos])
                    / (2.0 * np.pi * f_hz[pos, None])
                )
            spatial[:, t_idx[ok], f_idx[ok]] = v.T

    stacked = np.concatenate([spec_feat.data, spatial], axis=0)
    compressed = compress_high_bands(stacked, cfg.compress_start_bin, cfg.compress_factor)
    return FeatureTensor(
        compressed,
        channel_roles=["spec"] * M + ["spatial"] * (M - 1),
        scale="linear",
        meta={
            "feature": "salsa",
            "format": fmt.kind,
            "bin_hz": spec.bin_hz,
            "frame_rate": spec.frame_rate,
            "f_low": cfg.f_low,
            "f_high": cfg.f_high,
            "compress_start_bin": cfg.compress_start_bin,
            "compress_factor": cfg.compress_factor,
            "speed_of_sound": cfg.speed_of_sound,
        },
    )
