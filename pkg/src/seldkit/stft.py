"""Multichannel STFT front end: spectrograms, mel projection, band compression."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class StftConfig:
    """Analysis parameters shared by every feature kind.

    hop <= window <= fft_size is required; frames are taken without padding,
    so a clip shorter than one window cannot be transformed.
    """

    sample_rate: int = 24000
    window_length: int = 512
    hop_length: int = 300
    fft_size: int = 512
    window: str = "hann"

    def __post_init__(self):
        if not (0 < self.hop_length <= self.window_length <= self.fft_size):
            raise ValueError(
                f"need 0 < hop ({self.hop_length}) <= window "
                f"({self.window_length}) <= fft ({self.fft_size})"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop_length

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.window_length:
            raise ValueError(
                f"clip of {n_samples} samples is shorter than one window "
                f"({self.window_length})"
            )
        return 1 + (n_samples - self.window_length) // self.hop_length


@dataclass
class AudioClip:
    """Multichannel time-domain audio, channels x samples, float in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 2:
            raise ValueError("samples must be a (channels, samples) array")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass
class ComplexSpectrogram:
    """Complex STFT stack, channels x frames x bins."""

    data: np.ndarray
    bin_hz: float
    frame_rate: float

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]

    @property
    def n_bins(self) -> int:
        return self.data.shape[2]


@dataclass
class FeatureTensor:
    """Real-valued feature stack, channels x frames x bands.

    channel_roles labels each channel "spec", "spatial" or "gcc"; the
    normalization and augmentation stages dispatch on it.
    """

    data: np.ndarray
    channel_roles: list[str]
    scale: str  # "linear" or "mel"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("feature tensor must be 3-D (channels, frames, bands)")
        if len(self.channel_roles) != self.data.shape[0]:
            raise ValueError("one role per channel required")
        if self.scale not in ("linear", "mel"):
            raise ValueError(f"unknown scale {self.scale!r}")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]

    @property
    def n_bands(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "FeatureTensor":
        return FeatureTensor(
            self.data.copy(), list(self.channel_roles), self.scale, dict(self.meta)
        )


def _analysis_window(name: str, length: int) -> np.ndarray:
    # Periodic windows, as appropriate for STFT analysis.
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    if name == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window {name!r}")


def stft(clip: AudioClip, cfg: StftConfig) -> ComplexSpectrogram:
    """Short-time Fourier transform of every channel.

    No padding or centering is applied: frame t covers samples
    [t*hop, t*hop + window). The transform is an unnormalized rfft of the
    windowed frame, zero-padded to fft_size.

    Args:
        clip: audio to transform; clip.sample_rate must match cfg.
        cfg: analysis parameters.

    Returns:
        ComplexSpectrogram of shape (channels, frames, fft_size//2 + 1).
    """
    if clip.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"clip rate {clip.sample_rate} != configured rate {cfg.sample_rate}"
        )
    n_frames = cfg.n_frames(clip.n_samples)
    win = _analysis_window(cfg.window, cfg.window_length)
    starts = np.arange(n_frames) * cfg.hop_length
    # (channels, frames, window) view via gather; clips are small enough to copy
    idx = starts[:, None] + np.arange(cfg.window_length)[None, :]
    frames = clip.samples[:, idx] * win[None, None, :]
    data = np.fft.rfft(frames, n=cfg.fft_size, axis=-1)
    return ComplexSpectrogram(data, bin_hz=cfg.bin_hz, frame_rate=cfg.frame_rate)


def log_linear_spectrogram(
    spec: ComplexSpectrogram, floor: float = 1e-12
) -> FeatureTensor:
    """log(|X|^2 + floor) per channel; floor keeps silence finite."""
    if floor < 0:
        raise ValueError("floor must be >= 0")
    power = np.abs(spec.data) ** 2
    data = np.log(power + floor)
    return FeatureTensor(
        data,
        channel_roles=["spec"] * spec.n_channels,
        scale="linear",
        meta={"bin_hz": spec.bin_hz, "frame_rate": spec.frame_rate},
    )


def mel_filterbank(
    sample_rate: int,
    fft_size: int,
    n_mels: int = 128,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> np.ndarray:
    """Triangular mel filterbank, (fft_size//2 + 1, n_mels), all weights >= 0.

    Uses the 2595*log10(1 + f/700) mel scale. Each triangle is averaged over
    the width of every FFT bin rather than point-sampled at bin centers;
    point sampling leaves the narrow low filters empty at this resolution,
    and every filter is required to carry positive weight. Filters are
    area-normalized by 2/(f_hi - f_lo).
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    if not (0 <= f_min < f_max <= sample_rate / 2.0):
        raise ValueError("need 0 <= f_min < f_max <= Nyquist")
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")

    def to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    edges = from_mel(np.linspace(to_mel(f_min), to_mel(f_max), n_mels + 2))
    n_bins = fft_size // 2 + 1
    bin_hz = sample_rate / fft_size
    centers = np.arange(n_bins) * bin_hz
    lo = centers - bin_hz / 2.0
    hi = centers + bin_hz / 2.0

    def ramp_integral(a, b, f0, f1, rising):
        # Integral of the (0..1) ramp between f0 and f1 over [a, b] overlap.
        a = np.maximum(a, f0)
        b = np.minimum(b, f1)
        w = np.maximum(b - a, 0.0)
        mid = 0.5 * (a + b)
        if f1 == f0:
            return np.zeros_like(w)
        frac = (mid - f0) / (f1 - f0)
        if not rising:
            frac = 1.0 - frac
        return w * np.clip(frac, 0.0, 1.0)

    weights = np.zeros((n_bins, n_mels))
    for k in range(n_mels):
        left, center, right = edges[k], edges[k + 1], edges[k + 2]
        area = ramp_integral(lo, hi, left, center, rising=True) + ramp_integral(
            lo, hi, center, right, rising=False
        )
        weights[:, k] = area / bin_hz * (2.0 / (right - left))

    if np.any(weights.sum(axis=0) <= 0):
        raise ValueError("mel filterbank produced an all-zero filter")
    return weights


def log_mel_spectrogram(
    spec: ComplexSpectrogram, filterbank: np.ndarray, floor: float = 1e-12
) -> FeatureTensor:
    """log(|X|^2 @ W + floor): mel-projected log power per channel."""
    if floor < 0:
        raise ValueError("floor must be >= 0")
    if filterbank.shape[0] != spec.n_bins:
        raise ValueError(
            f"filterbank rows {filterbank.shape[0]} != spectrogram bins {spec.n_bins}"
        )
    power = np.abs(spec.data) ** 2
    data = np.log(power @ filterbank + floor)
    return FeatureTensor(
        data,
        channel_roles=["spec"] * spec.n_channels,
        scale="mel",
        meta={"frame_rate": spec.frame_rate, "n_mels": filterbank.shape[1]},
    )


def compress_high_bands(
    data: np.ndarray, start_bin: int = 192, factor: int = 8
) -> np.ndarray:
    """Shrink the upper frequency range by group-averaging.

    Bins [0, start_bin) are copied through; from start_bin upward, complete
    groups of `factor` bins are averaged; leftover bins that do not fill a
    group (the Nyquist bin at the defaults) are discarded.

    Args:
        data: (..., bins) array.
        start_bin: first compressed bin; must be < number of bins.
        factor: group size, >= 1.

    Returns:
        (..., start_bin + (bins - start_bin)//factor) array.
    """
    n_bins = data.shape[-1]
    if not (0 <= start_bin < n_bins):
        raise ValueError(f"start_bin {start_bin} out of range for {n_bins} bins")
    if factor < 1:
        raise ValueError("factor must be >= 1")
    n_groups = (n_bins - start_bin) // factor
    head = data[..., :start_bin]
    tail = data[..., start_bin : start_bin + n_groups * factor]
    grouped = tail.reshape(*tail.shape[:-1], n_groups, factor).mean(axis=-1)
    return np.concatenate([head, grouped], axis=-1)
