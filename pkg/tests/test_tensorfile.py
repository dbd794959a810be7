"""Binary tensor container: round trips and malformed-input handling."""

import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seldkit import (
    manifest_path_for,
    read_manifest,
    read_tensor,
    write_manifest,
    write_tensor,
)
from seldkit.tensorfile import MAGIC


@pytest.mark.parametrize("dtype", [np.float32, np.float64, np.complex64])
@pytest.mark.parametrize("shape", [(5,), (3, 4), (2, 3, 4)])
def test_round_trip_bit_identical(tmp_path, dtype, shape):
    rng = np.random.default_rng(0)
    arr = rng.standard_normal(shape)
    if np.issubdtype(dtype, np.complexfloating):
        arr = arr + 1j * rng.standard_normal(shape)
    arr = arr.astype(dtype)
    path = tmp_path / "t.ftb"
    write_tensor(path, arr)
    back = read_tensor(path)
    assert back.dtype == arr.dtype
    assert back.shape == arr.shape
    assert back.tobytes() == arr.tobytes()


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(1, 6), min_size=1, max_size=4),
    st.sampled_from(["float32", "float64", "complex64"]),
)
def test_round_trip_any_small_shape(dims, dtype):
    arr = np.zeros(dims, dtype=dtype)
    arr.flat[0] = 1.5
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "h.ftb"
        write_tensor(path, arr)
        assert np.array_equal(read_tensor(path), arr)


def test_header_layout_is_fixed(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "t.ftb"
    write_tensor(path, arr)
    blob = path.read_bytes()
    assert blob[:4] == b"FTB1"
    assert blob[4] == 0  # f32
    assert blob[5] == 2  # rank
    assert struct.unpack_from("<2Q", blob, 6) == (2, 3)
    assert blob[22:] == arr.tobytes()


def test_unsupported_dtype_rejected(tmp_path):
    with pytest.raises(ValueError, match="dtype"):
        write_tensor(tmp_path / "t.ftb", np.zeros(3, dtype=np.int32))
    with pytest.raises(ValueError, match="rank"):
        write_tensor(tmp_path / "t.ftb", np.float32(1.0))


def test_malformed_files_rejected(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    good = tmp_path / "good.ftb"
    write_tensor(good, arr)
    blob = good.read_bytes()

    bad = tmp_path / "bad.ftb"
    bad.write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(ValueError, match="magic"):
        read_tensor(bad)

    bad.write_bytes(blob[:4] + bytes([9]) + blob[5:])
    with pytest.raises(ValueError, match="dtype code"):
        read_tensor(bad)

    bad.write_bytes(blob[:5] + bytes([0]) + blob[6:])
    with pytest.raises(ValueError, match="rank"):
        read_tensor(bad)

    bad.write_bytes(blob[:-4])
    with pytest.raises(ValueError, match="payload"):
        read_tensor(bad)

    bad.write_bytes(blob[:8])
    with pytest.raises(ValueError, match="truncated"):
        read_tensor(bad)


def test_no_temp_files_left_behind(tmp_path):
    write_tensor(tmp_path / "a.ftb", np.zeros(4, dtype=np.float32))
    write_manifest(tmp_path / "a.manifest.txt", {"k": 1})
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"a.ftb", "a.manifest.txt"}


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "m.txt"
    write_manifest(
        path,
        {"feature": "salsa", "bin_hz": 46.875, "channels": 7, "roles": ["a", "b"]},
    )
    back = read_manifest(path)
    assert back["feature"] == "salsa"
    assert float(back["bin_hz"]) == 46.875
    assert int(back["channels"]) == 7
    assert back["roles"] == "a,b"


def test_manifest_comments_and_blanks_skipped(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# header\n\nkey = value \n")
    assert read_manifest(path) == {"key": "value"}
    path.write_text("just a line\n")
    with pytest.raises(ValueError, match="key=value"):
        read_manifest(path)


def test_manifest_path_naming():
    assert manifest_path_for("dir/x.ftb").name == "x.manifest.txt"
    assert manifest_path_for("dir/noext").name == "noext.manifest.txt"
    assert str(manifest_path_for("dir/x.ftb").parent) == "dir"


def test_float_values_survive_exactly(tmp_path):
    # repr round-trip keeps full double precision in manifests
    path = tmp_path / "m.txt"
    value = 0.1 + 0.2
    write_manifest(path, {"x": value})
    assert float(read_manifest(path)["x"]) == value
