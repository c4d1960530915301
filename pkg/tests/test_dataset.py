import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermonu.dataset import (
    AugmentSpec, NormBounds, augment, denormalize_gl, denormalize_temp, generate_dataset,
    normalize_gl, normalize_temp,
)
from thermonu.errors import GeometryError
from thermonu.frameio import read_frame, read_manifest
from thermonu.selfcal import reference_model
from thermonu.simulate import NoiseSpec, simulate_frame


def test_normalize_examples():
    b = NormBounds(1000.0, 9000.0, 0.0, 100.0)
    assert normalize_gl(1000.0, b) == 0.0 and normalize_gl(9000.0, b) == 1.0
    assert normalize_gl(5000.0, b) == 0.5
    assert normalize_temp(25.0, b) == 0.25


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e4, 1e5), st.floats(1.0, 1e4), st.floats(-1e4, 1e5))
def test_normalize_roundtrip(lo, span, x):
    b = NormBounds(lo, lo + span, lo, lo + span)
    assert denormalize_gl(normalize_gl(x, b), b) == pytest.approx(x, rel=1e-12, abs=1e-9)
    assert denormalize_temp(normalize_temp(x, b), b) == pytest.approx(x, rel=1e-12, abs=1e-9)


def test_bounds_validated():
    with pytest.raises(ValueError):
        NormBounds(5.0, 5.0, 0.0, 1.0)


def test_augment_val_center_crop():
    t = np.arange(10 * 12, dtype=float).reshape(10, 12)
    out, rec = augment(t, AugmentSpec(crop=(4, 6), mode="val"))
    np.testing.assert_array_equal(out, t[3:7, 3:9])
    assert rec == {"crop_offset": [3, 3], "crop_size": [4, 6], "hflip": False, "vflip": False, "rot90": 0}


def test_augment_identity():
    t = np.random.default_rng(0).normal(size=(5, 7))
    out, _ = augment(t, AugmentSpec.identity())
    np.testing.assert_array_equal(out, t)


def test_augment_forced_ops():
    t = np.arange(12.0).reshape(3, 4)
    out, _ = augment(t, AugmentSpec(crop=None, hflip=True, vflip=False, rot90=1))
    np.testing.assert_array_equal(out, np.rot90(t[:, ::-1]))


def test_augment_crop_too_large():
    with pytest.raises(GeometryError):
        augment(np.zeros((4, 4)), AugmentSpec(crop=(5, 4)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_augment_train_is_a_crop_of_source(seed):
    t = np.arange(9 * 11, dtype=float).reshape(9, 11)
    out, rec = augment(t, AugmentSpec(crop=(5, 5)), seed=seed)
    r0, c0 = rec["crop_offset"]
    patch = t[r0 : r0 + 5, c0 : c0 + 5]
    if rec["hflip"]:
        patch = patch[:, ::-1]
    if rec["vflip"]:
        patch = patch[::-1, :]
    np.testing.assert_array_equal(out, np.rot90(patch, rec["rot90"]))
    again, _ = augment(t, AugmentSpec(crop=(5, 5)), seed=seed)
    np.testing.assert_array_equal(out, again)


@pytest.fixture(scope="module")
def small_model():
    return reference_model(24, 32)


def _maps(n, shape=(24, 32), seed=0):
    r = np.random.default_rng(seed)
    return [r.uniform(25, 55, shape) for _ in range(n)]


def test_generate_layout_and_manifest(tmp_path, small_model):
    recs = generate_dataset(small_model, _maps(2), AugmentSpec(crop=(16, 16)), NoiseSpec(seed=5), tmp_path, count=3)
    assert len(recs) == 3
    man = read_manifest(tmp_path / "manifest.jsonl")
    assert man == json.loads(json.dumps(recs))
    assert [r["source_index"] for r in man] == [0, 1, 0]
    for r in man:
        hi, x = read_frame(tmp_path / r["input_frame_path"])
        ht, y = read_frame(tmp_path / r["target_frame_path"])
        assert x.shape == y.shape == (16, 16)
        assert (hi.kind, ht.kind) == ("graylevel", "temperature")
        lo, up = small_model.t_amb_range
        assert lo <= r["t_amb"] <= up and hi.t_amb == r["t_amb"]
        assert 0.0 <= y.min() and y.max() <= 1.0


def test_generate_noiseless_matches_simulation(tmp_path, small_model):
    maps = _maps(1)
    noise = NoiseSpec(gaussian_var=0.0, fpn_vmin=1.0, fpn_vmax=1.0, seed=1)
    (rec,) = generate_dataset(small_model, maps, AugmentSpec(crop=None, mode="val"), noise, tmp_path)
    _, x = read_frame(tmp_path / rec["input_frame_path"])
    b = NormBounds.from_model(small_model)
    expect = normalize_gl(simulate_frame(small_model, maps[0], rec["t_amb"]), b)
    np.testing.assert_allclose(x, expect, rtol=0, atol=1e-6)
    _, y = read_frame(tmp_path / rec["target_frame_path"])
    np.testing.assert_allclose(denormalize_temp(y, b), maps[0], atol=1e-4)


def test_generate_val_reuses_source_stream(tmp_path, small_model):
    recs = generate_dataset(small_model, _maps(2), AugmentSpec(crop=(16, 16), mode="val"),
                            NoiseSpec(seed=9), tmp_path, count=4)
    a = read_frame(tmp_path / recs[0]["input_frame_path"])[1]
    c = read_frame(tmp_path / recs[2]["input_frame_path"])[1]
    assert a.tobytes() == c.tobytes()
    assert recs[0]["t_amb"] == recs[2]["t_amb"]


def test_generate_train_seed_changes_output(tmp_path, small_model):
    spec = AugmentSpec(crop=(16, 16))
    r1 = generate_dataset(small_model, _maps(1), spec, NoiseSpec(seed=1), tmp_path / "a")
    r2 = generate_dataset(small_model, _maps(1), spec, NoiseSpec(seed=2), tmp_path / "b")
    assert r1[0]["t_amb"] != r2[0]["t_amb"]
    r3 = generate_dataset(small_model, _maps(1), spec, NoiseSpec(seed=1), tmp_path / "c")
    assert (tmp_path / "a" / "input_000000.tframe").read_bytes() == (tmp_path / "c" / "input_000000.tframe").read_bytes()
    assert r3 == r1


def test_generate_empty_maps(tmp_path, small_model):
    with pytest.raises(ValueError):
        generate_dataset(small_model, [], AugmentSpec(), NoiseSpec(), tmp_path, count=1)
