"""Scene and clip builders shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from seldkit import ArrayFormat, AudioClip, SceneDescription, SourceSpec


def single_source_scene(
    kind: str,
    az: float,
    el: float,
    seed: int,
    duration: float = 1.2,
    onset: float = 0.2,
    noise_power: float = 0.0,
    signal: str = "noise",
    params: dict | None = None,
    gain: float = 1.0,
    class_id: int = 0,
) -> SceneDescription:
    """One static source, optionally over ambient noise.

    The leading [0, onset) stretch is source-free so the adaptive noise floor
    can settle on the background before the event starts.
    """
    src = SourceSpec(
        class_id=class_id,
        onset=onset,
        offset=duration,
        signal=signal,
        gain=gain,
        params=params if params is not None else {"f_low": 300.0, "f_high": 8500.0},
        trajectory=[(0.0, az, el)],
    )
    return SceneDescription(
        fmt=ArrayFormat(kind),
        duration=duration,
        sources=[src],
        noise_power=noise_power,
        seed=seed,
    )


def random_scene(
    rng: np.random.Generator,
    kind: str,
    duration: float = 1.0,
    max_sources: int = 3,
    noise_power: float = 1e-3,
) -> SceneDescription:
    """Random mixed-signal scene with moving sources, for round-trip tests."""
    n = int(rng.integers(1, max_sources + 1))
    classes = rng.choice(12, size=n, replace=False)
    sources = []
    for cls in classes:
        onset = float(rng.uniform(0.0, duration * 0.3))
        offset = float(rng.uniform(onset + 0.4, duration))
        signal = ("noise", "tone", "chirp")[int(rng.integers(3))]
        if signal == "noise":
            params = {"f_low": 200.0, "f_high": 8000.0}
        elif signal == "tone":
            params = {"f0": float(rng.uniform(150.0, 900.0)), "harmonics": 5}
        else:
            params = {
                "f_start": float(rng.uniform(200.0, 1500.0)),
                "f_end": float(rng.uniform(2000.0, 8000.0)),
            }
        start = (0.0, float(rng.uniform(-180.0, 180.0)), float(rng.uniform(-60.0, 60.0)))
        end = (
            duration,
            start[1] + float(rng.uniform(-40.0, 40.0)),
            float(np.clip(start[2] + rng.uniform(-20.0, 20.0), -90.0, 90.0)),
        )
        sources.append(
            SourceSpec(
                class_id=int(cls),
                onset=onset,
                offset=offset,
                signal=signal,
                gain=float(rng.uniform(0.5, 1.2)),
                params=params,
                trajectory=[start, end],
            )
        )
    return SceneDescription(
        fmt=ArrayFormat(kind),
        duration=duration,
        sources=sources,
        noise_power=noise_power,
        seed=int(rng.integers(2**31)),
    )


def noise_clip(
    rng: np.random.Generator,
    n_channels: int = 4,
    seconds: float = 2.0,
    sample_rate: int = 24000,
    level: float = 0.05,
) -> AudioClip:
    """Independent white noise per channel, for shape and throughput tests."""
    samples = level * rng.standard_normal((n_channels, int(seconds * sample_rate)))
    return AudioClip(samples, sample_rate)
