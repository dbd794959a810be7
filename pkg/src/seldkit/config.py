"""Flat key=value pipeline configuration with override and hashing support."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .augment import AugmentConfig
from .spatial import BinSelectionConfig
from .stft import StftConfig


@dataclass
class PipelineConfig:
    """Every tunable of the extraction, augmentation and scoring pipeline.

    Mirrors the library defaults; files hold one key=value per line with
    '#' comments, and command lines may override single keys via --set.
    """

    sample_rate: int = 24000
    window_length: int = 512
    hop_length: int = 300
    fft_size: int = 512
    window: str = "hann"
    n_mels: int = 128
    log_floor: float = 1e-12
    f_low: float = 50.0
    f_high_foa: float = 9000.0
    f_high_mic: float = 4000.0
    alpha_mag: float = 1.5
    beta_ratio: float = 5.0
    cov_half_window: int = 3
    rms_half_window: int = 1
    noise_init_frames: int = 5
    noise_delta_up: float = 0.05
    noise_delta_down: float = 0.002
    compress_start_bin: int = 192
    compress_factor: int = 8
    speed_of_sound: float = 343.0
    p_apply: float = 0.5
    max_shift: int = 10
    doa_threshold_deg: float = 20.0
    segment_seconds: float = 1.0

    @classmethod
    def _field_types(cls):
        return {f.name: f.type for f in fields(cls)}

    @classmethod
    def from_items(cls, items: dict[str, str]) -> "PipelineConfig":
        """Build from string key/value pairs with type coercion."""
        cfg = cls()
        cfg.update(items)
        return cfg

    def update(self, items: dict[str, str]) -> None:
        known = {f.name: f for f in fields(self)}
        for key, raw in items.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(self, key)
            try:
                if isinstance(current, bool):
                    value = raw.lower() in ("1", "true", "yes")
                elif isinstance(current, int):
                    value = int(raw)
                elif isinstance(current, float):
                    value = float(raw)
                else:
                    value = raw
            except ValueError as exc:
                raise ValueError(f"config key {key!r}: bad value {raw!r}") from exc
            setattr(self, key, value)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        items: dict[str, str] = {}
        for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value")
            key, value = line.split("=", 1)
            items[key.strip()] = value.strip()
        return cls.from_items(items)

    def with_overrides(self, pairs: list[str]) -> "PipelineConfig":
        """Apply --set style 'key=value' overrides, returning self."""
        items = {}
        for pair in pairs:
            if "=" not in pair:
                raise ValueError(f"override must be key=value, got {pair!r}")
            key, value = pair.split("=", 1)
            items[key.strip()] = value.strip()
        self.update(items)
        return self

    def canonical_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short stable hash of the effective configuration."""
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    # builders for the per-module configs

    def stft_config(self, sample_rate: int | None = None) -> StftConfig:
        return StftConfig(
            sample_rate=sample_rate or self.sample_rate,
            window_length=self.window_length,
            hop_length=self.hop_length,
            fft_size=self.fft_size,
            window=self.window,
        )

    def selection_config(self, kind: str) -> BinSelectionConfig:
        if kind not in ("foa", "mic"):
            raise ValueError(f"unknown format kind {kind!r}")
        return BinSelectionConfig(
            f_low=self.f_low,
            f_high=self.f_high_foa if kind == "foa" else self.f_high_mic,
            alpha_mag=self.alpha_mag,
            beta_ratio=self.beta_ratio,
            cov_half_window=self.cov_half_window,
            rms_half_window=self.rms_half_window,
            noise_init_frames=self.noise_init_frames,
            noise_delta_up=self.noise_delta_up,
            noise_delta_down=self.noise_delta_down,
            log_floor=self.log_floor,
            compress_start_bin=self.compress_start_bin,
            compress_factor=self.compress_factor,
            speed_of_sound=self.speed_of_sound,
        )

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(p_apply=self.p_apply, max_shift=self.max_shift)
