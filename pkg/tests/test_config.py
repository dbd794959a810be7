"""Pipeline configuration files, overrides and hashing."""

import pytest

from seldkit import PipelineConfig


def test_defaults_match_library_constants():
    cfg = PipelineConfig()
    assert cfg.sample_rate == 24000
    assert (cfg.window_length, cfg.hop_length, cfg.fft_size) == (512, 300, 512)
    assert cfg.n_mels == 128
    assert (cfg.f_high_foa, cfg.f_high_mic) == (9000.0, 4000.0)
    assert (cfg.alpha_mag, cfg.beta_ratio) == (1.5, 5.0)
    assert (cfg.compress_start_bin, cfg.compress_factor) == (192, 8)


def test_load_file_with_comments(tmp_path):
    path = tmp_path / "pipe.cfg"
    path.write_text(
        "# tuning for the small array\n"
        "sample_rate = 48000  # hertz\n"
        "\n"
        "f_high_mic=3500\n"
    )
    cfg = PipelineConfig.load(path)
    assert cfg.sample_rate == 48000
    assert cfg.f_high_mic == 3500.0
    # untouched keys keep defaults
    assert cfg.hop_length == 300


def test_load_rejects_bad_lines(tmp_path):
    path = tmp_path / "pipe.cfg"
    path.write_text("sample_rate 48000\n")
    with pytest.raises(ValueError, match="key=value"):
        PipelineConfig.load(path)


def test_overrides_coerce_types():
    cfg = PipelineConfig().with_overrides(["hop_length=150", "p_apply=0.25"])
    assert cfg.hop_length == 150
    assert isinstance(cfg.hop_length, int)
    assert cfg.p_apply == 0.25


def test_unknown_key_and_bad_value_rejected():
    with pytest.raises(ValueError, match="unknown config key"):
        PipelineConfig().with_overrides(["hop=150"])
    with pytest.raises(ValueError, match="bad value"):
        PipelineConfig().with_overrides(["hop_length=tiny"])
    with pytest.raises(ValueError, match="key=value"):
        PipelineConfig().with_overrides(["hop_length"])


def test_digest_changes_iff_parameters_change():
    base = PipelineConfig().digest()
    assert PipelineConfig().digest() == base
    # an override that restores the default restores the digest too
    same = PipelineConfig().with_overrides(["hop_length=300"]).digest()
    assert same == base
    changed = PipelineConfig().with_overrides(["hop_length=299"]).digest()
    assert changed != base
    assert len(base) == 16


def test_every_field_feeds_the_digest():
    import dataclasses

    base = PipelineConfig()
    for field in dataclasses.fields(base):
        value = getattr(base, field.name)
        if isinstance(value, bool):
            bumped = "false" if value else "true"
        elif isinstance(value, (int, float)):
            bumped = str(value + 1)
        else:
            bumped = value + "x"
        other = PipelineConfig().with_overrides([f"{field.name}={bumped}"])
        assert other.digest() != base.digest(), field.name


def test_builders_propagate_values():
    cfg = PipelineConfig().with_overrides(
        ["window_length=256", "hop_length=128", "fft_size=256",
         "f_high_mic=3000", "p_apply=0.1", "max_shift=4"]
    )
    stft = cfg.stft_config()
    assert stft.window_length == 256
    assert stft.hop_length == 128
    assert stft.sample_rate == 24000
    assert cfg.stft_config(sample_rate=16000).sample_rate == 16000
    assert cfg.selection_config("mic").f_high == 3000.0
    assert cfg.selection_config("foa").f_high == 9000.0
    aug = cfg.augment_config()
    assert (aug.p_apply, aug.max_shift) == (0.1, 4)
    with pytest.raises(ValueError, match="format"):
        cfg.selection_config("stereo")
