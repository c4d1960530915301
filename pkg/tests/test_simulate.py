import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermonu.errors import GeometryError, TemperatureRangeError
from thermonu.model import CameraModel
from thermonu.simulate import (
    ExtrapolationWarning, NoiseSpec, add_gaussian_noise, degrade, gen_fpn, make_rng,
    pixelwise_at, quantize, radial_at, simulate_frame,
)

from conftest import CENTER_COEFFS, constant_model
from oracles import radius_grid


def gamma_model(gamma, h=5, w=5, **kw):
    kw.setdefault("t_amb_range", (-10.0, 100.0))
    return CameraModel(np.asarray(gamma, dtype=float), h, w, **kw)


def test_radial_at_hand_value():
    m = gamma_model([[[1, 2], [3, 4]]])
    np.testing.assert_array_equal(radial_at(m, 0, 2.0).coeffs, [7, 10])


def test_radial_at_zero_returns_first_row():
    m = gamma_model([[[1, 2], [3, 4]]])
    np.testing.assert_array_equal(radial_at(m, 0, 0.0).coeffs, [1, 2])


def test_radial_at_constant_over_ambient():
    m = gamma_model([[[1.5, -2.0], [0, 0]]])
    np.testing.assert_array_equal(radial_at(m, 0, 3.0).coeffs, radial_at(m, 0, 40.0).coeffs)


def test_radial_at_bad_order():
    with pytest.raises(ValueError):
        radial_at(gamma_model([[[1.0]]]), 1, 30.0)


def test_radial_at_extrapolation_warns():
    m = gamma_model([[[1.0]]], t_amb_range=(20.0, 30.0))
    with pytest.warns(ExtrapolationWarning):
        radial_at(m, 0, 31.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        radial_at(m, 0, 25.0)


def test_pixelwise_at_maps():
    np.testing.assert_array_equal(pixelwise_at(gamma_model([[[3.0]]]), 30.0).maps[0], 3.0)
    P = pixelwise_at(gamma_model([[[0.0, 1.0]]], 6, 9), 30.0).maps[0]
    np.testing.assert_allclose(P, radius_grid(6, 9), rtol=1e-15, atol=1e-15)


def test_pixelwise_center_of_odd_frame():
    m = gamma_model([[[2.5, 1.0, -3.0]]], 7, 7)
    assert pixelwise_at(m, 30.0).maps[0][3, 3] == 2.5


def test_simulate_constant_model():
    m = gamma_model([[[9.0]]])
    t = np.random.default_rng(0).uniform(0, 100, (5, 5))
    np.testing.assert_array_equal(simulate_frame(m, t, 30.0), 9.0)


def test_simulate_center_quadratic_center_pixel():
    m = constant_model(CENTER_COEFFS, 7, 7)
    out = simulate_frame(m, np.full((7, 7), 40.0), 38.9)
    assert out[3, 3] == pytest.approx(6309.72, abs=1e-9)


def test_simulate_bruteforce(rng):
    gamma = rng.normal(size=(3, 2, 4)) * [[[1]], [[0.1]], [[0.01]]]
    m = gamma_model(gamma, 6, 8)
    t = rng.uniform(0, 100, (6, 8))
    P = radius_grid(6, 8)
    ta = 33.0
    expect = np.zeros((6, 8))
    for i in range(6):
        for j in range(8):
            for o in range(3):
                beta = sum(gamma[o, k, r] * ta**k * P[i, j] ** r for k in range(2) for r in range(4))
                expect[i, j] += beta * t[i, j] ** o
    np.testing.assert_allclose(simulate_frame(m, t, ta), expect, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(5, 5), (6, 9), (8, 8)]))
def test_simulate_flip_equivariance(seed, shape):
    r = np.random.default_rng(seed)
    m = gamma_model(r.normal(size=(3, 2, 3)), *shape)
    t = r.uniform(0, 100, shape)
    out = simulate_frame(m, t, 30.0)
    np.testing.assert_array_equal(simulate_frame(m, t[:, ::-1], 30.0), out[:, ::-1])
    np.testing.assert_array_equal(simulate_frame(m, t[::-1, :], 30.0), out[::-1, :])


def test_simulate_rotation_invariant_square():
    m = gamma_model(np.random.default_rng(5).normal(size=(3, 2, 5)), 9, 9)
    out = simulate_frame(m, np.full((9, 9), 45.0), 30.0)
    np.testing.assert_allclose(np.rot90(out), out, rtol=1e-14)


def test_simulate_monotone_for_positive_orders():
    m = gamma_model([[[100.0, 5.0]], [[2.0, 0.5]], [[0.01, 0.002]]])
    ts = np.linspace(0, 100, 201)
    gl = np.stack([simulate_frame(m, np.full((5, 5), t), 30.0) for t in ts])
    assert np.all(np.diff(gl, axis=0) > 0)


def test_simulate_errors():
    m = gamma_model([[[1.0]]])
    with pytest.raises(GeometryError):
        simulate_frame(m, np.zeros((4, 5)), 30.0)
    with pytest.raises(TemperatureRangeError):
        simulate_frame(m, np.full((5, 5), 101.0), 30.0)
    with pytest.raises(TemperatureRangeError):
        simulate_frame(m, np.full((5, 5), np.nan), 30.0)
    assert simulate_frame(m, np.zeros((3, 4)), 30.0, any_geometry=True).shape == (3, 4)


def test_fpn_examples():
    np.testing.assert_array_equal(gen_fpn(4, 6, NoiseSpec(fpn_vmin=1.0, fpn_vmax=1.0)), 1.0)
    f = gen_fpn(64, 80, NoiseSpec(seed=11))
    assert np.all(f == f[:1])
    assert f.min() >= 0.9 and f.max() <= 1.0
    np.testing.assert_array_equal(f, gen_fpn(64, 80, NoiseSpec(seed=11)))
    assert not np.array_equal(f, gen_fpn(64, 80, NoiseSpec(seed=12)))


def test_noise_spec_defaults_and_validation():
    s = NoiseSpec()
    assert (s.gaussian_var, s.fpn_vmin, s.fpn_vmax) == (5.0, 0.9, 1.0)
    with pytest.raises(ValueError):
        NoiseSpec(gaussian_var=-1)
    with pytest.raises(ValueError):
        NoiseSpec(fpn_vmin=1.0, fpn_vmax=0.9)


def test_degrade_identity(rng):
    x = rng.uniform(0, 1, (10, 12))
    spec = NoiseSpec(gaussian_var=0.0, fpn_vmin=1.0, fpn_vmax=1.0)
    np.testing.assert_array_equal(degrade(x, spec), x)


def test_degrade_column_fpn():
    spec = NoiseSpec(gaussian_var=0.0)
    fpn = np.ones((6, 4))
    fpn[:, 2] = 0.9
    out = degrade(np.ones((6, 4)), spec, fpn=fpn)
    np.testing.assert_array_equal(out[:, 2], 0.9)
    np.testing.assert_array_equal(np.delete(out, 2, axis=1), 1.0)


def test_degrade_deterministic(rng):
    x = rng.uniform(0, 1, (16, 16))
    spec = NoiseSpec(seed=42)
    assert degrade(x, spec).tobytes() == degrade(x, spec).tobytes()


def test_add_gaussian_noise_variance():
    out = add_gaussian_noise(np.zeros((400, 500)), 5.0, make_rng(9))
    assert out.var() == pytest.approx(5.0, rel=0.02)


def test_make_rng_streams_independent():
    a = make_rng(1, 0).standard_normal(8)
    assert np.array_equal(a, make_rng(1, 0).standard_normal(8))
    assert not np.array_equal(a, make_rng(1, 1).standard_normal(8))
    assert not np.array_equal(a, make_rng(2, 0).standard_normal(8))


@pytest.mark.parametrize("value,expect,clamped", [(100.5, 100, 0), (101.5, 102, 0), (-3.0, 0, 1), (20000.0, 16383, 1)])
def test_quantize(value, expect, clamped):
    q, n = quantize(np.array([[value]]))
    assert q.dtype == np.uint16 and q[0, 0] == expect and n == clamped
